"""The inner maximization ``xi_p(P) = argmax_{xi in P} sum_k alpha_k (s_k - xi . u_k)^p``.

For ``0 < p < 1`` the objective is strictly concave on the polytope and its
gradient grows like ``slack^(p-1)`` near the boundary, so a damped Newton
iteration that never lets a slack shrink by more than 90% in one step stays
interior without an explicit barrier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MaxIterations, OutsideDomain
from .polytope import DirectionSet, chebyshev_center

FRACTION_TO_BOUNDARY = 0.9
ARMIJO = 1e-4


@dataclass(frozen=True, eq=False)
class InnerProblem:
    dirs: DirectionSet
    alpha: np.ndarray
    p: float
    s: np.ndarray

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"inner problem needs 0 < p < 1, got {self.p}")
        s = np.asarray(self.s, dtype=float)
        if s.shape != (self.dirs.N,) or not np.all(np.isfinite(s)):
            raise ValueError("support values must be finite, one per direction")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))

    @classmethod
    def from_measure(cls, measure, s):
        return cls(measure.dirs, measure.alpha, measure.p, s)

    def slacks(self, xi):
        sl = self.s - self.dirs.dirs @ np.asarray(xi, dtype=float)
        if np.any(sl <= 0):
            raise OutsideDomain(f"point leaves the polytope (min slack {np.min(sl):.3e})")
        return sl


@dataclass(frozen=True)
class InnerSolution:
    xi: np.ndarray
    value: float
    slacks: np.ndarray
    iterations: int
    grad_norm: float


def phi_eval(prob: InnerProblem, xi) -> float:
    sl = prob.slacks(xi)
    return float(prob.alpha @ sl**prob.p)


def phi_grad_hess(prob: InnerProblem, xi):
    """Gradient and (negative definite) Hessian of the inner objective."""
    sl = prob.slacks(xi)
    return _grad_hess(prob, sl)


def _grad_hess(prob, sl):
    p, u = prob.p, prob.dirs.dirs
    w1 = prob.alpha * sl ** (p - 1.0)
    w2 = prob.alpha * sl ** (p - 2.0)
    grad = -p * (w1 @ u)
    hess = -p * (1.0 - p) * (u.T * w2) @ u
    return grad, hess


def solve_xi(prob: InnerProblem, tol: float = 1e-10, x0=None, max_iter: int = 200) -> InnerSolution:
    """Maximize the inner objective by damped Newton with backtracking.

    Stops once ``|grad| <= tol * (1 + sum alpha)`` or once the gradient is
    within a small multiple of the error caused by rounding the slacks.  Raises ``MaxIterations``
    (carrying the last iterate) if that does not happen within ``max_iter``.
    """
    u = prob.dirs.dirs
    if x0 is None:
        x0, _ = chebyshev_center(prob.dirs, prob.s)
    xi = np.array(x0, dtype=float)
    sl = prob.slacks(xi)
    val = float(prob.alpha @ sl**prob.p)
    gtol = tol * (1.0 + float(np.sum(prob.alpha)))

    for it in range(max_iter + 1):
        grad, hess = _grad_hess(prob, sl)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= gtol or gnorm <= 10.0 * _gradient_floor(prob, xi, sl):
            return InnerSolution(xi, val, sl, it, gnorm)
        if it == max_iter:
            break
        step = _ascent_direction(grad, hess, sl)
        decrease_rate = float(grad @ step)

        ud = u @ step
        shrinking = ud > 0
        t = 1.0
        if np.any(shrinking):
            t = min(1.0, FRACTION_TO_BOUNDARY * float(np.min(sl[shrinking] / ud[shrinking])))

        accepted = False
        for _ in range(60):
            cand = xi + t * step
            sl_c = prob.s - u @ cand
            if np.all(sl_c > 0):
                val_c = float(prob.alpha @ sl_c**prob.p)
                if val_c >= val + ARMIJO * t * decrease_rate:
                    accepted = True
                    break
                # below rounding resolution: judge the step by the gradient instead
                if decrease_rate <= 1e-13 * abs(val) and val_c >= val - 1e-14 * abs(val):
                    g_c, _ = _grad_hess(prob, sl_c)
                    if np.linalg.norm(g_c) < gnorm:
                        accepted = True
                        break
            t *= 0.5
        if not accepted:
            # no representable progress is possible from here
            if gnorm <= max(1e3 * gtol, 100.0 * _gradient_floor(prob, xi, sl)):
                return InnerSolution(xi, val, sl, it, gnorm)
            break
        xi, sl, val = cand, sl_c, val_c

    best = InnerSolution(xi, val, sl, max_iter, gnorm)
    raise MaxIterations(f"inner solve stopped with |grad| = {gnorm:.3e} > {gtol:.3e}", best)


def _gradient_floor(prob, xi, sl):
    """Size of the gradient error caused by rounding the slacks."""
    eps = np.finfo(float).eps
    err = eps * (np.abs(prob.s) + float(np.linalg.norm(xi)))
    p = prob.p
    return float(p * (1.0 - p) * np.sum(prob.alpha * sl ** (p - 2.0) * err))


def _ascent_direction(grad, hess, sl):
    try:
        chol = np.linalg.cholesky(-hess)
    except np.linalg.LinAlgError:
        chol = None
    if chol is not None and np.min(np.diag(chol)) ** 2 > 1e-14 * np.max(np.diag(chol)) ** 2:
        y = np.linalg.solve(chol, grad)
        return np.linalg.solve(chol.T, y)
    # Hessian too flat to trust (p close to 1): plain gradient ascent
    return grad * (float(np.min(sl)) / max(float(np.linalg.norm(grad)), 1e-300))
