"""Discrete measures on the sphere and the L_p surface area operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissionError, ClosureViolated, OriginNotInterior, UnboundedError
from .polytope import DirectionSet, PolytopeMesh, intersect_halfspaces

CLOSURE_TOL = 1e-10
P_EQUALS_N_TOL = 1e-9


def closure_defect(dirs: DirectionSet, weights) -> float:
    """``|sum_k w_k u_k| / sum_k w_k``."""
    w = np.asarray(weights, dtype=float)
    return float(np.linalg.norm(w @ dirs.dirs) / np.sum(w))


@dataclass(frozen=True)
class HemisphereCheck:
    passed: bool
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.passed


def check_hemisphere(dirs: DirectionSet) -> HemisphereCheck:
    """Pass iff the directions are not concentrated on a closed hemisphere.

    Decided by building ``{x : x . u_k <= 1}``: it is bounded exactly when the
    condition holds.  On failure the witness ``v`` has ``u_k . v >= -1e-10``.
    """
    try:
        intersect_halfspaces(dirs, np.ones(dirs.N))
    except UnboundedError as exc:
        return HemisphereCheck(False, np.asarray(exc.witness))
    return HemisphereCheck(True)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """The measure ``sum_k alpha_k delta_{u_k}`` together with the exponent ``p``.

    Construction runs every admission check unless ``validate=False``.
    """

    dirs: DirectionSet
    alpha: np.ndarray
    p: float
    validate: bool = True

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "p", float(self.p))
        if self.validate:
            self.admit()

    @property
    def dim(self) -> int:
        return self.dirs.dim

    @property
    def N(self) -> int:
        return self.dirs.N

    @property
    def regime(self) -> str:
        return "sub-one" if self.p < 1 else "p-ge-one"

    def admit(self):
        """Raise ``AdmissionError`` if the instance is outside the solvable range."""
        alpha, p, n = self.alpha, self.p, self.dim
        if alpha.shape != (self.N,):
            raise AdmissionError("directions", f"expected {self.N} weights, got {alpha.size}")
        bad = np.flatnonzero(~(np.isfinite(alpha) & (alpha > 0)))
        if bad.size:
            raise AdmissionError(
                "nonpositive alpha", f"weights at {bad.tolist()} are not positive", indices=bad
            )
        if not np.isfinite(p) or p <= 0:
            raise AdmissionError("p range", f"p = {p} is outside (0, inf)")
        if abs(p - n) < P_EQUALS_N_TOL:
            raise AdmissionError(
                "p=n", f"p = {p} equals the dimension; the rescaling exponent 1/(n-p) is singular"
            )
        hemi = check_hemisphere(self.dirs)
        if not hemi:
            v = hemi.witness
            closed = np.flatnonzero(self.dirs.dirs @ v >= -1e-10)
            raise AdmissionError(
                "hemisphere",
                f"directions lie in the closed hemisphere with pole {v.tolist()}",
                indices=closed,
                witness=v,
            )
        if p == 1:
            defect = closure_defect(self.dirs, alpha)
            if defect > CLOSURE_TOL:
                raise ClosureViolated(f"|sum alpha_k u_k| / sum alpha_k = {defect:.3e} > {CLOSURE_TOL}")


def check_closure(measure: DiscreteMeasure) -> float:
    return closure_defect(measure.dirs, measure.alpha)


def sp_measure(mesh: PolytopeMesh, p: float) -> np.ndarray:
    """Atoms ``s_k^(1-p) a_k`` of the L_p surface area measure of ``mesh``.

    Uses the realized support values, so directions without a facet give 0.
    """
    s = mesh.support
    a = mesh.areas
    if p == 1:
        return np.array(a)
    if np.any(s <= 0):
        raise OriginNotInterior(f"origin not interior: min support {np.min(s):.3e}")
    out = np.zeros(mesh.N)
    on = a > 0
    out[on] = s[on] ** (1.0 - p) * a[on]
    return out


@dataclass(frozen=True)
class MeasureResidual:
    absolute: np.ndarray
    relative: np.ndarray
    center_residual: float

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative))


def residual(mesh: PolytopeMesh, measure: DiscreteMeasure) -> MeasureResidual:
    """Compare the L_p measure of ``mesh`` with the target weights.

    ``center_residual`` is ``|sum alpha_k u_k s_k^(p-1)| / sum alpha_k s_k^(p-1)``,
    which vanishes when the origin maximizes the inner objective.
    """
    s = mesh.support
    if np.any(s <= 0):
        raise OriginNotInterior(f"origin not interior: min support {np.min(s):.3e}")
    alpha, p = measure.alpha, measure.p
    sp = sp_measure(mesh, p)
    absolute = np.abs(sp - alpha)
    w = alpha * s ** (p - 1.0)
    center = float(np.linalg.norm(w @ measure.dirs.dirs) / np.sum(w))
    return MeasureResidual(absolute=absolute, relative=absolute / alpha, center_residual=center)
