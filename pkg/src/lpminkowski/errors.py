"""Exception hierarchy shared by the kernel, solvers and CLI."""

from __future__ import annotations


class MinkowskiError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(MinkowskiError, ValueError):
    """Raised for dimensions other than 2 and 3."""


class InvalidDirections(MinkowskiError, ValueError):
    pass


class UnboundedError(MinkowskiError):
    """The halfspace intersection is unbounded.

    ``witness`` is a unit pole ``v`` with ``u_k . v >= 0`` (up to rounding) for
    every direction; ``-v`` is a recession direction of the intersection.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class EmptyError(MinkowskiError):
    """The halfspace intersection has no interior."""


class OriginNotInterior(MinkowskiError):
    pass


class OutsideDomain(MinkowskiError, ValueError):
    """A point handed to the inner objective has a non-positive slack."""


class ConvergenceError(MinkowskiError):
    """An iterative solve stopped before meeting its tolerance.

    ``best`` carries the best iterate found so far (solver specific).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MaxIterations(ConvergenceError):
    pass


class InnerSolveFailed(ConvergenceError):
    pass


class FacetCollapse(ConvergenceError):
    pass


class ScaleSingular(MinkowskiError):
    pass


class AdmissionError(MinkowskiError, ValueError):
    """A problem instance fails one of the solvability conditions.

    ``kind`` is one of ``"hemisphere"``, ``"closure"``, ``"p=n"``,
    ``"nonpositive alpha"``, ``"p range"`` or ``"directions"``.
    """

    def __init__(self, kind, message, *, indices=None, witness=None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.indices = list(indices) if indices is not None else []
        self.witness = witness


class ClosureViolated(AdmissionError):
    def __init__(self, message, *, indices=None):
        super().__init__("closure", message, indices=indices)


class ParseError(MinkowskiError, ValueError):
    pass


class ReportIOError(MinkowskiError, OSError):
    pass


class InfeasibleError(MinkowskiError):
    """A random instance satisfying the requested constraints was not found."""
