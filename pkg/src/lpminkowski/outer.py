"""Variational solvers for the discrete L_p Minkowski problem.

Both regimes minimize a volume-normalized functional of the support vector
``h`` over polytopes whose facet normals are the given directions:

* ``0 < p < 1``: ``F(h) = max_xi sum_k alpha_k (h_k - xi . u_k)^p``
* ``p >= 1``:    ``F(h) = sum_k alpha_k h_k^p`` with the origin kept inside.

Working with ``L(h) = log F(h) - (p/n) log V(h)``, which is invariant under
dilation (and under translation when ``p < 1`` or ``p = 1``), removes the
volume constraint: every accepted step is followed by an exact rescale to
``V = 1`` and a recentering, so iterates stay on the feasible manifold.  A
stationary point of ``L`` satisfies

    (F / n) * slack_k^(1-p) * a_k = alpha_k,

and dilating it by ``(F / n)^(1/(n-p))`` solves the Minkowski problem.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConvergenceError,
    EmptyError,
    FacetCollapse,
    InnerSolveFailed,
    MaxIterations,
    MinkowskiError,
    ScaleSingular,
)
from .inner import InnerProblem, InnerSolution, solve_xi
from .measure import CLOSURE_TOL, DiscreteMeasure, MeasureResidual, closure_defect, residual
from .errors import ClosureViolated
from .polytope import PolytopeMesh, intersect_halfspaces, outer_radius, volume_hessian

logger = logging.getLogger(__name__)

SUB_ONE = "sub-one"
P_GE_ONE = "p-ge-one"


@dataclass
class SolverOptions:
    """Knobs for the outer solve.

    ``method`` is ``"newton"`` (second-order steps using the closed-form
    volume Hessian) or ``"gradient"`` (projected gradient with a
    Barzilai-Borwein trial step).  Both use Armijo backtracking.
    """

    tol: float = 1e-8
    max_iterations: int = 10000
    method: str = "newton"
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    max_step: float = 0.3
    inner_tol: float = 1e-13
    regime: str | None = None
    trace: bool = False
    h0: np.ndarray | None = None
    coercivity_factor: float = 1e6


@dataclass
class OuterState:
    """A volume-normalized iterate (``V = 1``, ``xi`` at the origin).

    ``slack`` is ``h - xi . u``; after recentering it coincides with ``h``.
    """

    h: np.ndarray
    mesh: PolytopeMesh
    xi: np.ndarray
    objective: float
    iteration: int = 0
    slack: np.ndarray | None = None
    inner: InnerSolution | None = None


@dataclass
class SolveReport:
    solution: PolytopeMesh
    normalized: PolytopeMesh
    scale: float
    residual: MeasureResidual
    objective_trace: list
    iterations: int
    regime: str
    termination: str
    stationarity: float
    wall_time: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.termination == "converged"


class _Rejected(Exception):
    """Trial point is not an admissible N-facet polytope."""

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


@dataclass
class _Eval:
    h: np.ndarray
    mesh: PolytopeMesh
    xi: np.ndarray
    slack: np.ndarray
    inner: InnerSolution | None
    F: float
    L: float
    grad: np.ndarray
    ratio: np.ndarray

    @property
    def stationarity(self) -> float:
        return float(np.max(np.abs(self.ratio - 1.0)))


def _regime_of(measure, opts):
    regime = opts.regime or measure.regime
    if regime not in (SUB_ONE, P_GE_ONE):
        raise ValueError(f"unknown regime {regime!r}")
    if regime == SUB_ONE and not 0 < measure.p < 1:
        raise ValueError("sub-one regime needs 0 < p < 1")
    if regime == P_GE_ONE and measure.p < 1:
        raise ValueError("p-ge-one regime needs p >= 1")
    return regime


def normalize_volume(dirs, h) -> np.ndarray:
    """Return ``V^(-1/n) h`` so the rebuilt polytope has unit volume."""
    mesh = intersect_halfspaces(dirs, h)
    return np.asarray(h, dtype=float) * mesh.volume ** (-1.0 / dirs.dim)


def _evaluate(measure, h, regime, hint, inner_tol) -> _Eval:
    dirs, alpha, p = measure.dirs, measure.alpha, measure.p
    n = dirs.dim
    u = dirs.dirs
    try:
        mesh = intersect_halfspaces(dirs, h, interior_point=hint)
    except EmptyError as exc:
        raise _Rejected("empty") from exc
    # the functional is evaluated on the offsets themselves, which keeps L
    # continuously differentiable when a facet passes through zero area
    h = np.asarray(h, dtype=float)
    if regime == SUB_ONE:
        prob = InnerProblem(dirs, alpha, p, h)
        x0 = hint if hint is not None and np.all(h - u @ hint > 0) else None
        try:
            inner = solve_xi(prob, tol=inner_tol, x0=x0)
        except MaxIterations as exc:
            raise InnerSolveFailed(str(exc), exc.best) from exc
        xi = inner.xi
        slack = inner.slacks
    else:
        inner = None
        xi = np.zeros(n)
        slack = h.copy()
        if np.any(slack <= 0):
            raise _Rejected("origin")

    F = float(alpha @ slack**p)
    V = mesh.volume
    L = np.log(F) - (p / n) * np.log(V)
    dF = p * alpha * slack ** (p - 1.0)
    grad = dF / F - (p / n) * mesh.areas / V
    ratio = (F / (n * V)) * slack ** (1.0 - p) * mesh.areas / alpha
    return _Eval(h, mesh, xi, slack, inner, F, float(L), grad, ratio)


def _hessian(measure, ev: _Eval, regime) -> np.ndarray:
    """Hessian of ``L`` in ``h`` (envelope theorem plus implicit ``dxi/dh``)."""
    alpha, p = measure.alpha, measure.p
    n = measure.dim
    u = measure.dirs.dirs
    sl, F, V = ev.slack, ev.F, ev.mesh.volume
    d2 = alpha * sl ** (p - 2.0)
    hess_f = np.diag(p * (p - 1.0) * d2)
    if regime == SUB_ONE:
        du = d2[:, None] * u
        m = u.T @ du
        hess_f -= p * (p - 1.0) * du @ np.linalg.solve(m, du.T)
    dF = p * alpha * sl ** (p - 1.0)
    a = ev.mesh.areas
    hess_v = volume_hessian(ev.mesh)
    return (
        hess_f / F
        - np.outer(dF, dF) / F**2
        - (p / n) * (hess_v / V - np.outer(a, a) / V**2)
    )


def _gauge_basis(measure, h, regime):
    """Orthonormal basis of the directions that change the normalized shape."""
    u = measure.dirs.dirs
    cols = [np.asarray(h, dtype=float)[:, None]]
    if regime == SUB_ONE or measure.p == 1:
        cols.append(u)
    q, _ = np.linalg.qr(np.hstack(cols), mode="complete")
    k = sum(c.shape[1] for c in cols)
    return q[:, k:]


def _newton_direction(measure, ev, regime, z):
    hess = _hessian(measure, ev, regime)
    hr = z.T @ hess @ z
    hr = 0.5 * (hr + hr.T)
    lam, q = np.linalg.eigh(hr)
    floor = 1e-8 * max(float(np.max(np.abs(lam))), 1e-300)
    lam = np.maximum(np.abs(lam), floor)
    gr = z.T @ ev.grad
    return -z @ (q @ ((q.T @ gr) / lam))


def _normalize(measure, ev: _Eval, regime) -> _Eval:
    """Translate ``xi`` (or the centroid for ``p = 1``) to the origin, rescale to ``V = 1``."""
    n = measure.dim
    p = measure.p
    mesh = ev.mesh
    if regime == SUB_ONE:
        mesh = mesh.translated(-ev.xi)
    elif p == 1:
        mesh = mesh.translated(-mesh.centroid())
    lam = mesh.volume ** (-1.0 / n)
    mesh = mesh.scaled(lam)
    h = np.array(mesh.h)
    slack = h.copy()
    F = float(measure.alpha @ slack**p)
    dF = p * measure.alpha * slack ** (p - 1.0)
    grad = dF / F - (p / n) * mesh.areas / mesh.volume
    ratio = (F / (n * mesh.volume)) * slack ** (1.0 - p) * mesh.areas / measure.alpha
    inner = ev.inner
    if inner is not None:
        inner = replace(inner, xi=np.zeros(n), slacks=slack, value=F)
    return _Eval(h, mesh, np.zeros(n), slack, inner, F, ev.L, grad, ratio)


def _state(ev, iteration):
    return OuterState(
        h=ev.h, mesh=ev.mesh, xi=ev.xi, objective=ev.F, iteration=iteration,
        slack=ev.slack, inner=ev.inner,
    )


def _minimize(measure: DiscreteMeasure, opts: SolverOptions, regime: str) -> SolveReport:
    start = time.perf_counter()
    dirs = measure.dirs
    n = dirs.dim
    h0 = np.ones(dirs.N) if opts.h0 is None else np.asarray(opts.h0, dtype=float)
    hint = None
    try:
        ev = _evaluate(measure, h0, regime, hint, opts.inner_tol)
    except _Rejected as exc:
        raise ValueError(f"initial support vector is not admissible ({exc.reason})") from exc
    ev = _normalize(measure, ev, regime)
    radius0 = outer_radius(ev.mesh)
    trace = [ev.F]
    bb = None  # Barzilai-Borwein step length for gradient mode
    termination = "max-iterations"
    iteration = 0

    for iteration in range(opts.max_iterations + 1):
        r = ev.stationarity
        if opts.trace:
            logger.info("iter %d  objective %.17g  stationarity %.3e", iteration, ev.F, r)
        if r <= opts.tol:
            termination = "converged"
            break
        if iteration == opts.max_iterations:
            break
        if outer_radius(ev.mesh) > opts.coercivity_factor * radius0:
            raise ConvergenceError(
                f"outer radius grew beyond {opts.coercivity_factor:g}x its initial value",
                _state(ev, iteration),
            )

        z = _gauge_basis(measure, ev.h, regime)
        if z.shape[1] == 0:
            # simplex: every admissible polytope is a translate-dilate of this one
            raise ConvergenceError(
                f"no shape freedom left and stationarity is {r:.3e}", _state(ev, iteration)
            )
        if opts.method == "newton":
            d = _newton_direction(measure, ev, regime, z)
        elif opts.method == "gradient":
            d = -z @ (z.T @ ev.grad)
            if bb is not None:
                d *= bb
        else:
            raise ValueError(f"unknown method {opts.method!r}")

        try:
            new = _line_search(measure, ev, d, regime, opts)
        except _StepFailed as exc:
            if opts.method == "newton":
                # fall back to a steepest-descent step for this iteration
                d = -z @ (z.T @ ev.grad)
                try:
                    new = _line_search(measure, ev, d, regime, opts)
                except _StepFailed as exc2:
                    exc = exc2
                    new = None
            else:
                new = None
            if new is None:
                state = _state(ev, iteration)
                if ev.mesh.n_facets < dirs.N:
                    raise FacetCollapse(
                        f"line search stalled with {dirs.N - ev.mesh.n_facets} facet(s) absent", state
                    ) from None
                raise ConvergenceError(
                    f"line search stalled at stationarity {r:.3e}", state
                ) from None

        s_vec, y_vec = new.h - ev.h, new.grad - ev.grad
        sy = float(s_vec @ y_vec)
        # L is dilation invariant, so after rescaling h by lam the BB length scales by lam^2
        lam2 = new.mesh.volume ** (-2.0 / n)
        bb = float(s_vec @ s_vec) / sy * lam2 if sy > 0 else None
        ev = _normalize(measure, new, regime)
        trace.append(ev.F)

    report = _finish(measure, ev, regime, trace, iteration, termination, start)
    if termination != "converged":
        raise MaxIterations(
            f"stationarity {ev.stationarity:.3e} above tol {opts.tol:g} after {iteration} iterations",
            report,
        )
    return report


class _StepFailed(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


def _line_search(measure, ev, d, regime, opts) -> _Eval:
    h = ev.h
    slope = float(ev.grad @ d)
    if not slope < 0:
        raise _StepFailed("ascent")
    t = 1.0
    big = float(np.max(np.abs(d)))
    if big > opts.max_step * float(np.max(h)):
        t = opts.max_step * float(np.max(h)) / big
    if regime == P_GE_ONE and measure.p != 1:
        shrink = d < 0
        if np.any(shrink):
            t = min(t, 0.9 * float(np.min(h[shrink] / -d[shrink])))

    reason = "armijo"
    r0 = ev.stationarity
    hint = np.zeros(measure.dim)
    for _ in range(opts.max_backtracks):
        try:
            cand = _evaluate(measure, h + t * d, regime, hint, opts.inner_tol)
        except _Rejected as exc:
            reason = exc.reason
            t *= opts.backtrack
            continue
        except InnerSolveFailed:
            reason = "inner"
            t *= opts.backtrack
            continue
        if cand.L <= ev.L + opts.armijo * t * slope:
            return cand
        # predicted decrease below rounding resolution of L: accept on stationarity
        if abs(slope) * t <= 1e-13 * max(1.0, abs(ev.L)) and cand.L <= ev.L + 1e-13:
            if cand.stationarity < r0:
                return cand
        reason = "armijo"
        t *= opts.backtrack
    raise _StepFailed(reason)


def rescale_solution(state: OuterState, measure: DiscreteMeasure) -> PolytopeMesh:
    """Dilate a unit-volume optimizer into a solution of the Minkowski problem."""
    n, p = measure.dim, measure.p
    if abs(n - p) < 1e-9:
        raise ScaleSingular("p equals the dimension; no rescaling exists")
    s = state.mesh.support
    c = (float(measure.alpha @ s**p) / n) ** (1.0 / (n - p))
    return state.mesh.scaled(c)


def _finish(measure, ev, regime, trace, iteration, termination, start):
    n, p = measure.dim, measure.p
    state = _state(ev, iteration)
    if abs(n - p) < 1e-9:
        raise ScaleSingular("p equals the dimension; no rescaling exists")
    scale = (float(measure.alpha @ ev.mesh.support**p) / n) ** (1.0 / (n - p))
    solution = rescale_solution(state, measure)
    res = residual(solution, measure)
    return SolveReport(
        solution=solution,
        normalized=ev.mesh,
        scale=scale,
        residual=res,
        objective_trace=trace,
        iterations=iteration,
        regime=regime,
        termination=termination,
        stationarity=ev.stationarity,
        wall_time=time.perf_counter() - start,
        extras={"inner": ev.inner},
    )


def objective(measure: DiscreteMeasure, h, regime=None):
    """Normalized objective ``F(h) V(h)^(-p/n)`` and its gradient in ``h``.

    At ``V = 1`` the gradient is ``p alpha_k slack_k^(p-1) - (p/n) F a_k``,
    the derivative of ``t -> F(lambda(t) P_t)`` along the k-th offset.
    """
    regime = regime or measure.regime
    try:
        ev = _evaluate(measure, np.asarray(h, dtype=float), regime, None, 1e-13)
    except _Rejected as exc:
        raise MinkowskiError(f"support vector is not an N-facet polytope ({exc.reason})") from exc
    n, p = measure.dim, measure.p
    V = ev.mesh.volume
    value = ev.F * V ** (-p / n)
    return value, value * ev.grad


def objective_sub_one(measure: DiscreteMeasure, h):
    if not 0 < measure.p < 1:
        raise ValueError("objective_sub_one needs 0 < p < 1")
    return objective(measure, h, SUB_ONE)


CONTINUATION_START = 0.5
CONTINUATION_TOL = 1e-6


def _continuation_path(p):
    """Exponents from 0.5 towards ``p``, halving the distance to 1 each time."""
    path = []
    q = CONTINUATION_START
    while q < p:
        path.append(q)
        q = 1.0 - 0.5 * (1.0 - q)
    return path + [p]


def solve_sub_one(measure: DiscreteMeasure, opts: SolverOptions | None = None) -> SolveReport:
    """Minimize over unit-volume polytopes for ``0 < p < 1``.

    When the direct solve fails (typically because the inner maximizer of
    the starting polytope lies too close to its boundary for ``p`` near 1),
    it is retried by continuation in ``p``: each stage starts from the
    previous stage's optimizer.
    """
    opts = opts or SolverOptions()
    if not 0 < measure.p < 1:
        raise ValueError("solve_sub_one needs 0 < p < 1")
    try:
        return _minimize(measure, opts, SUB_ONE)
    except ConvergenceError as exc:
        if opts.h0 is not None or measure.p <= CONTINUATION_START:
            raise
        first = exc
    logger.info("direct solve failed (%s); continuing in p", first)
    h = None
    path = _continuation_path(measure.p)
    try:
        for q in path[:-1]:
            stage = DiscreteMeasure(measure.dirs, measure.alpha, q, validate=False)
            rep = _minimize(stage, replace(opts, h0=h, tol=max(opts.tol, CONTINUATION_TOL)), SUB_ONE)
            h = np.array(rep.normalized.h)
        report = _minimize(measure, replace(opts, h0=h), SUB_ONE)
    except ConvergenceError:
        raise first from None
    report.extras["continuation"] = path
    return report


def solve_p_ge_one(measure: DiscreteMeasure, opts: SolverOptions | None = None) -> SolveReport:
    opts = opts or SolverOptions()
    if measure.p < 1:
        raise ValueError("solve_p_ge_one needs p >= 1")
    if measure.p == 1:
        defect = closure_defect(measure.dirs, measure.alpha)
        if defect > CLOSURE_TOL:
            raise ClosureViolated(f"|sum alpha_k u_k| / sum alpha_k = {defect:.3e}")
    return _minimize(measure, opts, P_GE_ONE)


def solve(measure: DiscreteMeasure, opts: SolverOptions | None = None) -> SolveReport:
    """Dispatch on the regime of ``measure`` (or ``opts.regime``)."""
    opts = opts or SolverOptions()
    regime = _regime_of(measure, opts)
    if regime == SUB_ONE:
        return solve_sub_one(measure, opts)
    return solve_p_ge_one(measure, opts)
