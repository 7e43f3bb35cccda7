import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from lpminkowski.errors import DimensionError, EmptyError, InvalidDirections, UnboundedError
from lpminkowski.generate import random_directions, random_polytope
from lpminkowski.polytope import (
    DirectionSet,
    chebyshev_center,
    diameter,
    facet_areas,
    intersect_halfspaces,
    offsets_from_points,
    polygon_ring,
    support_value,
    triangles,
    volume,
    volume_hessian,
)
from oracles import box_dirs, central_diff, central_jacobian, shoelace

SQUARE = DirectionSet(box_dirs(2))
CUBE = DirectionSet(box_dirs(3))


def square(h=1.0):
    return intersect_halfspaces(SQUARE, np.full(4, h))


def cube(h=1.0):
    return intersect_halfspaces(CUBE, np.full(6, h))


# direction sets

def test_direction_set_rejects_non_unit():
    with pytest.raises(InvalidDirections):
        DirectionSet([[1.0, 0.0], [0.0, 1.0], [-2.0, 0.0]])


def test_direction_set_normalizes_on_request():
    d = DirectionSet.from_vectors([[2.0, 0.0], [0.0, 3.0], [-1.0, -1.0]])
    assert np.allclose(np.linalg.norm(d.dirs, axis=1), 1.0, atol=1e-12)


def test_direction_set_needs_dim_plus_one():
    with pytest.raises(InvalidDirections):
        DirectionSet([[1.0, 0.0], [0.0, 1.0]])


def test_direction_set_rejects_duplicates():
    with pytest.raises(InvalidDirections):
        DirectionSet([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]])


def test_direction_set_rejects_dimension_four():
    with pytest.raises(DimensionError):
        DirectionSet(np.vstack([np.eye(4), -np.eye(4)]))


def test_direction_set_is_read_only():
    with pytest.raises(ValueError):
        SQUARE.dirs[0, 0] = 2.0


# intersection

def test_square():
    m = square()
    assert m.volume == pytest.approx(4.0, rel=1e-12)
    assert np.allclose(m.areas, 2.0, rtol=1e-12)
    assert m.n_facets == 4 and len(m.vertices) == 4


def test_cube():
    m = cube()
    assert m.volume == pytest.approx(8.0, rel=1e-12)
    assert np.allclose(m.areas, 4.0, rtol=1e-12)
    assert len(m.vertices) == 8


def test_missing_direction_is_unbounded():
    dirs = DirectionSet([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(UnboundedError) as info:
        intersect_halfspaces(dirs, [1.0, 1.0, 1.0])
    # the body recedes along -e_2
    assert np.allclose(info.value.witness, [0.0, 1.0], atol=1e-9)


def test_empty_intersection():
    with pytest.raises(EmptyError):
        intersect_halfspaces(SQUARE, [1.0, 1.0, -2.0, 1.0])


def test_flat_intersection_is_empty():
    with pytest.raises(EmptyError):
        intersect_halfspaces(SQUARE, [1.0, 1.0, -1.0, 1.0])


def test_redundant_direction_has_zero_area():
    dirs = DirectionSet(np.vstack([box_dirs(2), [[np.sqrt(0.5), np.sqrt(0.5)]]]))
    m = intersect_halfspaces(dirs, [1, 1, 1, 1, 2.0])
    assert m.areas[4] == 0.0
    assert m.facets[4] is None
    assert m.support[4] == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert m.support[4] < m.h[4]


def test_corner_cut_area_matches_volume_derivative():
    dirs = DirectionSet(np.vstack([box_dirs(2), [[np.sqrt(0.5), np.sqrt(0.5)]]]))
    h = np.array([1, 1, 1, 1, np.sqrt(2.0) * 0.9])
    m = intersect_halfspaces(dirs, h)
    # cut leg length is 0.2, so the new edge is 0.2*sqrt(2)
    assert m.areas[4] == pytest.approx(0.2 * np.sqrt(2.0), rel=1e-9)

    def vol(t):
        hh = h.copy()
        hh[4] += t[0]
        return intersect_halfspaces(dirs, hh).volume

    fd = central_diff(vol, [0.0], 1e-5)[0]
    assert abs(fd - m.areas[4]) <= 1e-6 * m.areas[4]


def test_scaled_square_volume():
    assert square().scaled(2.0).volume == pytest.approx(16.0, rel=1e-12)


def test_accessors():
    m = square()
    assert volume(m) == m.volume
    assert np.array_equal(facet_areas(m), m.areas)
    assert support_value(m, [1.0, 0.0]) == pytest.approx(1.0)
    assert support_value(m, [np.sqrt(0.5), np.sqrt(0.5)]) == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert diameter(m) == pytest.approx(2 * np.sqrt(2.0), rel=1e-12)
    assert diameter(cube()) == pytest.approx(2 * np.sqrt(3.0), rel=1e-12)


# Chebyshev center

def test_chebyshev_square():
    x, r = chebyshev_center(SQUARE, [1.0, 1.0, 1.0, 1.0])
    assert np.allclose(x, 0.0, atol=1e-12) and r == pytest.approx(1.0, rel=1e-12)


def test_chebyshev_translated_square():
    # directions are (e1, e2, -e1, -e2)
    x, r = chebyshev_center(SQUARE, [6.0, 1.0, -4.0, 1.0])
    assert np.allclose(x, [5.0, 0.0], atol=1e-12) and r == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_chebyshev_lp_optimality(seed):
    rng = np.random.default_rng(seed)
    dim = 2 + seed % 2
    dirs = random_directions(rng, dim, 8)
    h = rng.uniform(0.5, 2.0, size=8)
    x, r = chebyshev_center(dirs, h)
    slack = h - dirs.dirs @ x
    assert r <= np.min(slack) + 1e-12
    # a basic optimum touches at least n+1 constraints
    assert np.sum(np.abs(slack - r) <= 1e-9) >= dim + 1


# identities on random bodies

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 12))
def test_polygon_volume_matches_shoelace(seed, n_dirs):
    rng = np.random.default_rng(seed)
    dirs = random_directions(rng, 2, n_dirs)
    m = intersect_halfspaces(dirs, rng.uniform(0.5, 1.5, n_dirs))
    ring = m.vertices[polygon_ring(m)]
    assert m.volume == pytest.approx(shoelace(ring), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]))
def test_volume_matches_qhull(seed, dim):
    rng = np.random.default_rng(seed)
    dirs = random_directions(rng, dim, 10)
    m = intersect_halfspaces(dirs, rng.uniform(0.5, 1.5, 10))
    assert m.volume == pytest.approx(ConvexHull(m.vertices).volume, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.floats(0.1, 10.0))
def test_support_is_positively_homogeneous(seed, dim, lam):
    rng = np.random.default_rng(seed)
    m = intersect_halfspaces(random_directions(rng, dim, 9), rng.uniform(0.5, 1.5, 9))
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    assert support_value(m.scaled(lam), u) == pytest.approx(lam * support_value(m, u), rel=1e-12)
    assert diameter(m.scaled(lam)) == pytest.approx(lam * diameter(m), rel=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_mesh_invariants(seed):
    rng = np.random.default_rng(seed)
    dim = 2 + seed % 2
    n_dirs = int(rng.integers(dim + 1, 12))
    dirs = random_directions(rng, dim, n_dirs)
    h = rng.uniform(0.2, 2.0, n_dirs) + dirs.dirs @ rng.normal(size=dim)
    try:
        m = intersect_halfspaces(dirs, h)
    except EmptyError:
        pytest.skip("empty draw")
    s, a = m.support, m.areas
    assert m.volume == pytest.approx(np.dot(s, a) / dim, rel=1e-9)
    assert np.all(m.vertices @ dirs.dirs.T <= s + 1e-9 * (1 + np.abs(s)))
    assert np.all(s <= m.h + 1e-12 * np.max(np.abs(m.h)))
    assert np.allclose(s[m.present], m.h[m.present], rtol=0, atol=1e-12 * np.max(np.abs(m.h)))
    assert np.linalg.norm(a @ dirs.dirs) <= 1e-9 * a.sum()


@pytest.mark.parametrize("seed", range(12))
def test_volume_hessian_matches_area_derivatives(seed):
    rng = np.random.default_rng(seed)
    dim = 2 + seed % 2
    mesh = random_polytope(rng, dim, 7 + seed % 3)
    dirs, h = mesh.dirs, np.array(mesh.h)
    step = 1e-6 * mesh.diameter
    fd = central_jacobian(lambda x: intersect_halfspaces(dirs, x).areas, h, step)
    hess = volume_hessian(mesh)
    assert np.allclose(hess, hess.T)
    assert np.max(np.abs(fd - hess)) <= 1e-5 * np.max(np.abs(hess))


def test_translation_moves_offsets():
    m = square().translated([0.5, -0.25])
    assert np.allclose(m.h, [1.5, 0.75, 0.5, 1.25])
    assert np.allclose(m.centroid(), [0.5, -0.25], atol=1e-12)


def test_centroid_of_triangle():
    dirs = DirectionSet.from_vectors([[0.0, 1.0], [-np.sqrt(3) / 2, -0.5], [np.sqrt(3) / 2, -0.5]])
    m = intersect_halfspaces(dirs, [1.0, 2.0, 1.5])
    assert np.allclose(m.centroid(), m.vertices.mean(axis=0), atol=1e-12)


def test_offsets_from_points_rebuilds_cube():
    pts = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float)
    dirs, h = offsets_from_points(pts)
    assert dirs.N == 6
    assert np.allclose(h, 1.0)
    assert intersect_halfspaces(dirs, h).volume == pytest.approx(8.0)


def test_cube_triangles_are_outward():
    m = cube()
    tris = triangles(m)
    assert tris.shape == (12, 3)
    v = m.vertices
    a, b, c = v[tris[:, 0]], v[tris[:, 1]], v[tris[:, 2]]
    normals = np.cross(b - a, c - a)
    centers = (a + b + c) / 3
    assert np.all(np.einsum("ij,ij->i", normals, centers) > 0)


def test_interior_point_hint_is_ignored_when_outside():
    m1 = intersect_halfspaces(SQUARE, np.ones(4), interior_point=[5.0, 5.0])
    assert m1.volume == pytest.approx(4.0)
