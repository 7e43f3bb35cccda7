"""Halfspace-intersection polytopes in two and three dimensions.

A polytope is described by unit outer normals ``u_k`` and offsets ``h_k``::

    P = { x : x . u_k <= h_k  for every k }

The intersection is computed through the polar dual: after moving a certified
interior point to the origin, each halfspace becomes the dual point
``u_k / h_k`` and the vertices of ``P`` correspond to the facets of the convex
hull of those points.  Facets of ``P`` are then recovered per input direction,
so every quantity (areas, support values, facet incidence) stays indexed like
the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from .errors import DimensionError, EmptyError, InvalidDirections, UnboundedError

SUPPORTED_DIMS = (2, 3)

NORM_TOL = 1e-12
DUPLICATE_TOL = 1e-10
# relative tolerance for "vertex lies on plane k" and vertex merging
INCIDENCE_RTOL = 1e-10
# facets smaller than AREA_RTOL * diameter**(n-1) are reported absent
AREA_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """``N`` distinct unit vectors in R^2 or R^3, stored as an ``(N, dim)`` array."""

    dirs: np.ndarray

    def __post_init__(self):
        u = np.array(self.dirs, dtype=float)
        if u.ndim != 2:
            raise InvalidDirections("directions must form a 2-d array of shape (N, dim)")
        n_dirs, dim = u.shape
        if dim not in SUPPORTED_DIMS:
            raise DimensionError(f"dimension {dim} is not supported (only 2 and 3)")
        if not np.all(np.isfinite(u)):
            raise InvalidDirections("directions contain non-finite entries")
        if n_dirs < dim + 1:
            raise InvalidDirections(f"need at least dim+1 = {dim + 1} directions, got {n_dirs}")
        norms = np.linalg.norm(u, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise InvalidDirections(f"directions {bad.tolist()} are not unit vectors")
        for i in range(n_dirs - 1):
            gaps = np.linalg.norm(u[i + 1:] - u[i], axis=1)
            hit = np.flatnonzero(gaps < DUPLICATE_TOL)
            if hit.size:
                raise InvalidDirections(f"directions {i} and {i + 1 + hit[0]} coincide")
        u.setflags(write=False)
        object.__setattr__(self, "dirs", u)

    @classmethod
    def from_vectors(cls, vectors, normalize=True):
        """Build a direction set, optionally rescaling each vector to unit length."""
        u = np.array(vectors, dtype=float)
        if normalize:
            norms = np.linalg.norm(u, axis=-1, keepdims=True)
            if np.any(norms == 0):
                raise InvalidDirections("zero vector cannot be normalized")
            u = u / norms
        return cls(u)

    @property
    def dim(self) -> int:
        return self.dirs.shape[1]

    @property
    def N(self) -> int:
        return self.dirs.shape[0]

    def __len__(self):
        return self.N

    @cached_property
    def recession_witness(self):
        """``None`` when ``{x : x . u_k <= 1}`` is bounded, else a unit pole ``v``.

        The pole satisfies ``u_k . v >= -1e-10`` for all ``k``; the intersection
        recedes along ``-v``.
        """
        return _recession_witness(self.dirs)

    @property
    def spans_no_hemisphere(self) -> bool:
        return self.recession_witness is None


def _recession_witness(u):
    n_dirs, dim = u.shape
    _, sing, vt = np.linalg.svd(u)
    if sing[-1] <= 1e-12 * sing[0]:
        # all directions in a hyperplane: its normal is orthogonal to every u_k
        return vt[-1] / np.linalg.norm(vt[-1])
    try:
        hull = ConvexHull(u)
    except QhullError:
        hull = ConvexHull(u, qhull_options="QJ")
    offsets = hull.equations[:, -1]
    # origin strictly inside conv{u_k} iff every facet offset is negative
    worst = int(np.argmax(offsets))
    if offsets[worst] < -1e-12:
        return None
    normal = hull.equations[worst, :-1]
    pole = -normal / np.linalg.norm(normal)
    return pole


@dataclass(frozen=True)
class Facet:
    """Face of the polytope supported by one input direction.

    ``ring`` holds vertex indices: the two endpoints of an edge in 2-d, or the
    boundary cycle in 3-d ordered counter-clockwise about the outer normal.
    """

    ring: tuple
    area: float


@dataclass(frozen=True, eq=False)
class PolytopeMesh:
    """A bounded, full-dimensional member of the class spanned by ``dirs``.

    ``h`` are the defining offsets, ``support`` the realized support values
    ``max_x x . u_k`` (equal to ``h_k`` when facet ``k`` is present), and
    ``facets[k]`` is ``None`` for directions whose halfspace does not carve
    out a facet of positive area.
    """

    dirs: DirectionSet
    h: np.ndarray
    vertices: np.ndarray
    facets: tuple
    support: np.ndarray
    volume: float
    diameter: float
    interior_point: np.ndarray

    @property
    def dim(self) -> int:
        return self.dirs.dim

    @property
    def N(self) -> int:
        return self.dirs.N

    @cached_property
    def areas(self) -> np.ndarray:
        a = np.array([0.0 if f is None else f.area for f in self.facets])
        a.setflags(write=False)
        return a

    @property
    def present(self) -> np.ndarray:
        return np.array([f is not None for f in self.facets])

    @property
    def n_facets(self) -> int:
        return int(self.present.sum())

    def scaled(self, lam: float) -> "PolytopeMesh":
        """The dilate ``lam * P`` for ``lam > 0``."""
        if not lam > 0:
            raise ValueError("dilation factor must be positive")
        n = self.dim
        facets = tuple(
            None if f is None else Facet(f.ring, f.area * lam ** (n - 1)) for f in self.facets
        )
        return PolytopeMesh(
            dirs=self.dirs,
            h=_frozen(lam * self.h),
            vertices=_frozen(lam * self.vertices),
            facets=facets,
            support=_frozen(lam * self.support),
            volume=self.volume * lam**n,
            diameter=self.diameter * lam,
            interior_point=_frozen(lam * self.interior_point),
        )

    def translated(self, shift) -> "PolytopeMesh":
        """The translate ``P + shift``."""
        shift = np.asarray(shift, dtype=float)
        du = self.dirs.dirs @ shift
        return PolytopeMesh(
            dirs=self.dirs,
            h=_frozen(self.h + du),
            vertices=_frozen(self.vertices + shift),
            facets=self.facets,
            support=_frozen(self.support + du),
            volume=self.volume,
            diameter=self.diameter,
            interior_point=_frozen(self.interior_point + shift),
        )

    def centroid(self) -> np.ndarray:
        """Center of mass of the solid polytope."""
        return _centroid(self)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def chebyshev_center(dirs: DirectionSet, h):
    """Center and radius of the largest ball inside ``{x : x . u_k <= h_k}``.

    Solves ``max r  s.t.  x . u_k + r <= h_k`` and polishes the basic solution
    by solving its active constraints exactly.
    """
    u = dirs.dirs
    h = _check_offsets(dirs, h)
    n = dirs.dim
    a_ub = np.hstack([u, np.ones((dirs.N, 1))])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=a_ub, b_ub=h, bounds=[(None, None)] * (n + 1), method="highs-ds")
    if res.status == 3:
        raise UnboundedError("halfspace intersection is unbounded", dirs.recession_witness)
    if res.status != 0:
        raise EmptyError(f"Chebyshev center LP failed: {res.message}")
    x, r = res.x[:n], res.x[n]

    scale = max(float(np.max(np.abs(h))), 1e-300)
    slack = h - u @ x - r
    active = np.flatnonzero(slack <= 1e-9 * scale)
    if active.size == n + 1:
        sys = a_ub[active]
        if np.linalg.cond(sys) < 1e12:
            sol = np.linalg.solve(sys, h[active])
            if np.all(h - a_ub @ sol >= -1e-14 * scale):
                x, r = sol[:n], sol[n]
    if r <= 1e-12 * scale:
        raise EmptyError("halfspace intersection has empty interior")
    return x, float(r)


def _check_offsets(dirs, h):
    h = np.asarray(h, dtype=float)
    if h.shape != (dirs.N,):
        raise ValueError(f"expected {dirs.N} offsets, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("offsets must be finite")
    return h


def intersect_halfspaces(dirs: DirectionSet, h, interior_point=None) -> PolytopeMesh:
    """Build ``P = {x : x . u_k <= h_k}``.

    Raises ``UnboundedError`` when the directions lie in a closed hemisphere
    (the recession cone is then non-trivial) and ``EmptyError`` when ``P`` has
    no interior.  ``interior_point`` skips the Chebyshev LP when the caller
    already knows a point strictly inside.
    """
    h = _check_offsets(dirs, h)
    if dirs.recession_witness is not None:
        raise UnboundedError("directions lie in a closed hemisphere", dirs.recession_witness)
    u = dirs.dirs
    n = dirs.dim

    center = None
    if interior_point is not None:
        center = np.asarray(interior_point, dtype=float)
        slack = h - u @ center
        if np.min(slack) <= 1e-9 * np.max(np.abs(slack)):
            center = None
    if center is None:
        center, _ = chebyshev_center(dirs, h)

    hc = h - u @ center
    scale = float(np.max(hc))
    if np.min(hc) <= 0:
        raise EmptyError("no strictly interior point found")

    dual = u / hc[:, None]
    try:
        hull = ConvexHull(dual)
    except QhullError as exc:
        raise EmptyError(f"degenerate dual hull: {exc}") from exc

    tol = INCIDENCE_RTOL * scale
    raw = -hull.equations[:, :-1] / hull.equations[:, -1:]
    verts = []
    for x, simplex in zip(raw, hull.simplices):
        sys = u[simplex]
        if np.linalg.cond(sys) < 1e10:
            x = np.linalg.solve(sys, hc[simplex])
        inc = np.abs(u @ x - hc) <= 10 * tol
        if inc.sum() > n:
            x = np.linalg.lstsq(u[inc], hc[inc], rcond=None)[0]
        if all(np.linalg.norm(x - y) > tol for y in verts):
            verts.append(x)
    verts = np.array(verts)
    incidence = np.abs(verts @ u.T - hc) <= tol  # (n_verts, N)

    diam = float(np.max(pdist(verts))) if len(verts) > 1 else 0.0
    if diam <= 0:
        raise EmptyError("halfspace intersection is degenerate")
    area_floor = AREA_RTOL * diam ** (n - 1)

    facets = []
    for k in range(dirs.N):
        idx = np.flatnonzero(incidence[:, k])
        facet = _facet_2d(u[k], verts, idx) if n == 2 else _facet_3d(u[k], verts, idx)
        if facet is not None and facet.area < area_floor:
            facet = None
        facets.append(facet)

    areas = np.array([0.0 if f is None else f.area for f in facets])
    volume = float(hc @ areas) / n
    if volume <= 0:
        raise EmptyError("halfspace intersection has zero volume")

    vertices = verts + center
    support = np.minimum(np.max(vertices @ u.T, axis=0), h)
    present = np.array([f is not None for f in facets])
    support[present] = h[present]

    return PolytopeMesh(
        dirs=dirs,
        h=_frozen(h),
        vertices=_frozen(vertices),
        facets=tuple(facets),
        support=_frozen(support),
        volume=volume,
        diameter=diam,
        interior_point=_frozen(center),
    )


def _facet_2d(normal, verts, idx):
    if idx.size < 2:
        return None
    tangent = np.array([-normal[1], normal[0]])
    t = verts[idx] @ tangent
    lo, hi = int(np.argmin(t)), int(np.argmax(t))
    length = float(t[hi] - t[lo])
    if length <= 0:
        return None
    return Facet((int(idx[lo]), int(idx[hi])), length)


def _plane_basis(normal):
    pick = np.eye(3)[int(np.argmin(np.abs(normal)))]
    e1 = np.cross(normal, pick)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return e1, e2


def _facet_3d(normal, verts, idx):
    if idx.size < 3:
        return None
    e1, e2 = _plane_basis(normal)
    pts = verts[idx]
    mid = pts.mean(axis=0)
    ang = np.arctan2((pts - mid) @ e2, (pts - mid) @ e1)
    order = np.argsort(ang, kind="stable")
    ring = idx[order]
    p = verts[ring]
    cross = np.cross(p[1:-1] - p[0], p[2:] - p[0])
    area = 0.5 * float(np.sum(cross @ normal))
    if area <= 0:
        return None
    return Facet(tuple(int(i) for i in ring), area)


def facet_from_vertices(normal, vertices, rtol=1e-9):
    """Face of ``conv(vertices)`` with outer normal ``normal`` (``None`` if degenerate).

    Used to re-derive facet areas from a stored vertex list.
    """
    verts = np.asarray(vertices, dtype=float)
    normal = np.asarray(normal, dtype=float)
    heights = verts @ normal
    top = float(np.max(heights))
    spread = float(np.max(np.abs(verts))) if verts.size else 1.0
    idx = np.flatnonzero(heights >= top - rtol * max(spread, 1e-300))
    if verts.shape[1] == 2:
        return _facet_2d(normal, verts, idx)
    return _facet_3d(normal, verts, idx)


def volume(mesh: PolytopeMesh) -> float:
    return mesh.volume


def facet_areas(mesh: PolytopeMesh) -> np.ndarray:
    """Facet areas indexed by input direction (zero for absent facets)."""
    return np.array(mesh.areas)


def support_value(mesh: PolytopeMesh, u) -> float:
    """``h(P, u) = max_{x in P} x . u``."""
    return float(np.max(mesh.vertices @ np.asarray(u, dtype=float)))


def diameter(mesh: PolytopeMesh) -> float:
    return mesh.diameter


def outer_radius(mesh: PolytopeMesh) -> float:
    """``max |x|`` over the polytope (largest vertex norm)."""
    return float(np.max(np.linalg.norm(mesh.vertices, axis=1)))


def polygon_ring(mesh: PolytopeMesh) -> np.ndarray:
    """Vertex indices of a 2-d polytope in counter-clockwise order."""
    if mesh.dim != 2:
        raise DimensionError("polygon_ring needs a 2-d mesh")
    mid = mesh.vertices.mean(axis=0)
    d = mesh.vertices - mid
    return np.argsort(np.arctan2(d[:, 1], d[:, 0]), kind="stable")


def triangles(mesh: PolytopeMesh) -> np.ndarray:
    """Fan triangulation of every 3-d facet, outward oriented, shape ``(T, 3)``."""
    if mesh.dim != 3:
        raise DimensionError("triangles needs a 3-d mesh")
    tris = []
    for f in mesh.facets:
        if f is None:
            continue
        r = f.ring
        tris.extend((r[0], r[i], r[i + 1]) for i in range(1, len(r) - 1))
    return np.array(tris, dtype=int).reshape(-1, 3)


def _centroid(mesh):
    c0 = mesh.interior_point
    if mesh.dim == 2:
        ring = mesh.vertices[polygon_ring(mesh)] - c0
        nxt = np.roll(ring, -1, axis=0)
        w = ring[:, 0] * nxt[:, 1] - ring[:, 1] * nxt[:, 0]
        return c0 + ((ring + nxt) * w[:, None]).sum(axis=0) / (3.0 * w.sum())
    v = mesh.vertices - c0
    tris = triangles(mesh)
    a, b, c = v[tris[:, 0]], v[tris[:, 1]], v[tris[:, 2]]
    w = np.einsum("ij,ij->i", a, np.cross(b, c))
    return c0 + ((a + b + c) * w[:, None]).sum(axis=0) / (4.0 * w.sum())


def volume_hessian(mesh: PolytopeMesh) -> np.ndarray:
    """Matrix of ``d a_i / d h_j``, i.e. the Hessian of volume in the offsets.

    Off-diagonal entries are ``|F_i cap F_j| / sin(angle(u_i, u_j))`` for
    adjacent facets; the diagonal follows from translation invariance,
    ``sum_j (d a_i / d h_j) u_j = 0``.
    """
    u = mesh.dirs.dirs
    n_dirs = mesh.N
    hess = np.zeros((n_dirs, n_dirs))
    present = np.flatnonzero(mesh.present)

    if mesh.dim == 2:
        ang = np.arctan2(u[present, 1], u[present, 0])
        order = present[np.argsort(ang)]
        for a, b in zip(order, np.roll(order, -1)):
            sin = abs(u[a, 0] * u[b, 1] - u[a, 1] * u[b, 0])
            hess[a, b] = hess[b, a] = 1.0 / sin
    else:
        edges = {}
        for k in present:
            ring = mesh.facets[k].ring
            for a, b in zip(ring, ring[1:] + ring[:1]):
                edges.setdefault((min(a, b), max(a, b)), []).append(k)
        for (a, b), owners in edges.items():
            if len(owners) != 2:
                continue
            i, j = owners
            length = np.linalg.norm(mesh.vertices[a] - mesh.vertices[b])
            sin = np.sqrt(max(1.0 - float(u[i] @ u[j]) ** 2, 0.0))
            hess[i, j] += length / sin
            hess[j, i] += length / sin

    cos = u @ u.T
    hess[np.diag_indices(n_dirs)] = -np.sum(hess * cos, axis=1)
    return hess


def offsets_from_points(points):
    """Outer normals and offsets of the convex hull of a point cloud.

    Coplanar hull triangles are merged, so every returned direction is a facet.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in SUPPORTED_DIMS:
        raise DimensionError("points must have shape (m, 2) or (m, 3)")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise EmptyError(f"points span no full-dimensional hull: {exc}") from exc
    normals, offsets = [], []
    for eq in hull.equations:
        nrm = eq[:-1] / np.linalg.norm(eq[:-1])
        off = -eq[-1] / np.linalg.norm(eq[:-1])
        if any(np.linalg.norm(nrm - m) < 1e-9 for m in normals):
            continue
        normals.append(nrm)
        offsets.append(off)
    normals = np.array(normals)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return DirectionSet(normals), np.array(offsets)
