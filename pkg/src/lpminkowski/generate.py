"""Seeded random instances for tests and the ``gen`` command."""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls

from .errors import InfeasibleError
from .io import ProblemFile
from .measure import check_hemisphere
from .polytope import DirectionSet, PolytopeMesh, intersect_halfspaces

MAX_ATTEMPTS = 200


def random_directions(rng, dim, n_dirs, max_attempts=MAX_ATTEMPTS) -> DirectionSet:
    """Uniform directions on the sphere, redrawn until no closed hemisphere holds them."""
    for _ in range(max_attempts):
        u = rng.normal(size=(n_dirs, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        dirs = DirectionSet(u)
        if check_hemisphere(dirs):
            return dirs
    raise InfeasibleError(f"no admissible set of {n_dirs} directions in {max_attempts} draws")


def _closed_weights(dirs, alpha0):
    u = dirs.dirs
    big = 1e3
    a = np.vstack([big * u.T, np.eye(dirs.N)])
    b = np.concatenate([np.zeros(dirs.dim), alpha0])
    alpha, _ = nnls(a, b)
    # project exactly onto {sum alpha_k u_k = 0}
    alpha = alpha - u @ np.linalg.solve(u.T @ u, u.T @ alpha)
    return alpha


def gen_random_instance(seed, dim, n_dirs, p) -> ProblemFile:
    """Random admissible problem; deterministic in ``seed``.

    Weights are uniform in ``[0.1, 10]``.  For ``p = 1`` they are re-fit by
    non-negative least squares and projected so that ``sum alpha_k u_k = 0``.
    """
    if n_dirs < dim + 1:
        raise ValueError("need at least dim + 1 directions")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        dirs = random_directions(rng, dim, n_dirs)
        alpha = rng.uniform(0.1, 10.0, size=n_dirs)
        if p == 1:
            alpha = _closed_weights(dirs, alpha)
            if np.min(alpha) <= 1e-3 * np.max(alpha):
                continue
        return ProblemFile(dim, float(p), dirs.dirs.tolist(), alpha.tolist())
    raise InfeasibleError(f"no closed weight vector found in {MAX_ATTEMPTS} attempts")


def random_polytope(rng, dim, n_dirs, spread=0.5, max_attempts=MAX_ATTEMPTS) -> PolytopeMesh:
    """A polytope with exactly ``n_dirs`` facets and the origin inside.

    Offsets are drawn from ``[1, 1 + spread]``; draws that lose a facet are
    rejected.
    """
    for _ in range(max_attempts):
        dirs = random_directions(rng, dim, n_dirs)
        for _ in range(20):
            h = 1.0 + spread * rng.random(n_dirs)
            mesh = intersect_halfspaces(dirs, h)
            if mesh.n_facets == n_dirs and np.min(mesh.areas) > 1e-3 * mesh.diameter ** (dim - 1):
                return mesh
    raise InfeasibleError(f"no {n_dirs}-facet polytope found")
