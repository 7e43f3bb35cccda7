import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpminkowski.errors import MaxIterations, OutsideDomain
from lpminkowski.generate import random_polytope
from lpminkowski.inner import InnerProblem, phi_eval, phi_grad_hess, solve_xi
from lpminkowski.polytope import DirectionSet
from oracles import box_dirs, central_diff, central_jacobian, grid_argmax

SQUARE = DirectionSet(box_dirs(2))  # e1, e2, -e1, -e2


def square_problem(alpha=(1, 1, 1, 1), p=0.5, h=1.0):
    return InnerProblem(SQUARE, np.array(alpha, dtype=float), p, np.full(4, h))


def test_needs_p_below_one():
    with pytest.raises(ValueError):
        square_problem(p=1.0)


def test_phi_values():
    prob = square_problem()
    assert phi_eval(prob, [0.0, 0.0]) == pytest.approx(4.0)
    assert phi_eval(prob, [0.5, 0.0]) == pytest.approx(np.sqrt(0.5) + np.sqrt(1.5) + 2.0, rel=1e-14)


def test_phi_outside_domain():
    with pytest.raises(OutsideDomain):
        phi_eval(square_problem(), [1.0, 0.0])


def test_phi_scales_with_body():
    prob = square_problem()
    big = square_problem(h=3.0)
    xi = np.array([0.2, -0.4])
    assert phi_eval(big, 3.0 * xi) == pytest.approx(3.0**0.5 * phi_eval(prob, xi), rel=1e-14)


def test_square_gradient_and_hessian_at_center():
    p = 0.5
    g, hess = phi_grad_hess(square_problem(p=p), [0.0, 0.0])
    assert np.allclose(g, 0.0, atol=1e-15)
    assert np.allclose(hess, -p * (1 - p) * 2 * np.eye(2), rtol=1e-14)
    assert np.min(np.linalg.eigvalsh(hess)) < 0


def _random_interior_point(rng, mesh):
    w = rng.dirichlet(np.ones(len(mesh.vertices)))
    return 0.5 * (w @ mesh.vertices) + 0.5 * mesh.interior_point


@pytest.mark.parametrize("seed", range(20))
def test_gradient_and_hessian_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    dim = 2 + seed % 2
    mesh = random_polytope(rng, dim, 8)
    prob = InnerProblem(mesh.dirs, rng.uniform(0.5, 2.0, 8), rng.uniform(0.1, 0.9), mesh.h)
    xi = _random_interior_point(rng, mesh)
    step = 1e-6 * mesh.diameter
    g, hess = phi_grad_hess(prob, xi)
    g_fd = central_diff(lambda x: phi_eval(prob, x), xi, step)
    h_fd = central_jacobian(lambda x: phi_grad_hess(prob, x)[0], xi, step)
    assert np.linalg.norm(g - g_fd) <= 1e-5 * np.linalg.norm(g)
    assert np.linalg.norm(hess - h_fd) <= 1e-4 * np.linalg.norm(hess)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.9])
def test_symmetric_square_centers(p):
    sol = solve_xi(square_problem(p=p))
    assert np.allclose(sol.xi, 0.0, atol=1e-10)


def test_heavy_weight_pushes_away_from_that_facet():
    # stationarity: 4 / sqrt(1 - x) = 1 / sqrt(1 + x), so x = -15/17
    prob = square_problem(alpha=(4, 1, 1, 1))
    sol = solve_xi(prob)
    assert sol.xi[0] == pytest.approx(-15.0 / 17.0, abs=1e-10)
    assert sol.xi[1] == pytest.approx(0.0, abs=1e-10)
    g, spacing = grid_argmax(SQUARE.dirs, prob.alpha, 0.5, prob.s, [-1, -1], [1, 1])
    assert np.all(np.abs(sol.xi - g) <= spacing)


@pytest.mark.parametrize("p", [0.01, 0.3, 0.5, 0.9])
def test_maximizer_satisfies_first_order_condition(p):
    rng = np.random.default_rng(7)
    mesh = random_polytope(rng, 3, 9)
    prob = InnerProblem(mesh.dirs, rng.uniform(0.5, 2.0, 9), p, mesh.h)
    sol = solve_xi(prob, tol=1e-12)
    w = prob.alpha * sol.slacks ** (p - 1.0)
    assert np.linalg.norm(w @ mesh.dirs.dirs) <= 1e-10 * np.sum(w)
    assert sol.value == pytest.approx(phi_eval(prob, sol.xi), rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([0.5, 2.0]), st.floats(0.1, 0.9))
def test_maximizer_scales_with_body(seed, lam, p):
    rng = np.random.default_rng(seed)
    mesh = random_polytope(rng, 2 + seed % 2, 7)
    alpha = rng.uniform(0.5, 2.0, 7)
    x1 = solve_xi(InnerProblem(mesh.dirs, alpha, p, mesh.h), tol=1e-13).xi
    x2 = solve_xi(InnerProblem(mesh.dirs, alpha, p, lam * np.array(mesh.h)), tol=1e-13).xi
    assert np.linalg.norm(x2 - lam * x1) <= 1e-8 * lam * mesh.diameter


def test_unrepresentable_maximizer_raises_with_best_iterate():
    # the optimum sits about 1e-60 from the -e1 facet, below double resolution
    prob = square_problem(alpha=(4, 1, 1, 1), p=0.99)
    with pytest.raises(MaxIterations) as info:
        solve_xi(prob)
    best = info.value.best
    assert best is not None and best.xi[0] < -0.99


def test_warm_start_is_used():
    prob = square_problem(alpha=(4, 1, 1, 1))
    cold = solve_xi(prob)
    warm = solve_xi(prob, x0=cold.xi)
    assert warm.iterations <= 1


@pytest.mark.parametrize("seed", range(20))
def test_maximizer_beats_every_grid_point(seed):
    rng = np.random.default_rng(300 + seed)
    mesh = random_polytope(rng, 2, int(rng.integers(3, 13)))
    p = float(rng.uniform(0.2, 0.8))
    prob = InnerProblem(mesh.dirs, rng.uniform(0.5, 2.0, mesh.N), p, mesh.h)
    sol = solve_xi(prob)
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    g, _ = grid_argmax(mesh.dirs.dirs, prob.alpha, p, prob.s, lo, hi, 400)
    assert sol.value >= phi_eval(prob, g)
    w = prob.alpha * sol.slacks ** (p - 1.0)
    assert np.linalg.norm(w @ mesh.dirs.dirs) <= 1e-10 * np.sum(w)
