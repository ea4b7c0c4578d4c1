import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustadapt.trust_region import (TrModel, accept_tr, cauchy_bound, fd_diagonal_hessian,
                                      solve_subproblem)


def test_linear_model_boundary_step():
    m = TrModel(0.0, np.array([1.0, 0.0]), np.zeros((2, 2)))
    s = solve_subproblem(m, 0.5)
    assert np.allclose(s, [-0.5, 0.0])
    assert m.decrease(s) == pytest.approx(0.5)


def test_identity_hessian_interior_cauchy_point():
    m = TrModel(0.0, np.array([0.6, 0.8]), np.eye(2))
    for alpha in (1.0, 3.0):
        s = solve_subproblem(m, alpha)
        assert m.decrease(s) == pytest.approx(0.5)


def test_zero_gradient_gives_zero_step():
    m = TrModel(1.0, np.zeros(3), np.eye(3))
    assert not np.any(solve_subproblem(m, 1.0))


def test_kappa_fcd_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        g = rng.standard_normal(5)
        A = rng.standard_normal((5, 5))
        H = 0.5 * (A + A.T)
        m = TrModel(0.0, g, H)
        alpha = float(np.exp(rng.uniform(-5, 3)))
        s = solve_subproblem(m, alpha)
        assert np.linalg.norm(s) <= alpha * (1 + 1e-12)
        assert m.decrease(s) >= cauchy_bound(m, alpha, 1.0) * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.floats(1e-4, 1e3), st.floats(0.01, 1.0))
def test_cauchy_point_dominates_random_feasible_steps_on_the_gradient_line(g, hdiag, alpha, kfcd):
    g = np.array(g)
    m = TrModel(0.0, g, np.diag(hdiag))
    s = solve_subproblem(m, alpha, kfcd)
    gn = np.linalg.norm(g)
    if gn == 0:
        return
    # brute force along -g: the Cauchy point is the best step on that segment
    ts = np.linspace(0, alpha / gn, 201)
    best = max(m.decrease(-t * g) for t in ts)
    assert m.decrease(s) >= best - 1e-9 * (1 + abs(best))


def test_kappa_h_enforced():
    with pytest.raises(ValueError):
        TrModel(0.0, np.ones(2), 3 * np.eye(2), kappa_H=1.0)
    with pytest.raises(ValueError):
        TrModel(0.0, np.ones(2), np.eye(3))
    with pytest.raises(ValueError):
        solve_subproblem(TrModel(0.0, np.ones(2), np.eye(2)), 0.0)


def test_ratio_arithmetic():
    rho, ok, inc = accept_tr(1.0, 0.8, 0.5, 1.0, 0.1, 0.1, 1.0, 0.05)
    assert rho == pytest.approx(0.6)
    assert ok and inc


def test_ratio_boundaries_inclusive():
    # f - f+ + 2 eps_f = 0.25 exactly, md = 1 -> rho = 0.25 = eta_1
    rho, ok, _ = accept_tr(1.0, 0.75, 1.0, 1.0, 1.0, 0.25, 1.0, 0.0)
    assert rho == 0.25 and ok
    _, ok, inc = accept_tr(1.0, 0.0, 1.0, 0.5, 0.25, 0.1, 2.0, 0.0)
    assert ok and inc  # ||g|| = eta_2 alpha
    _, ok, inc = accept_tr(1.0, 0.0, 1.0, 0.4999, 0.25, 0.1, 2.0, 0.0)
    assert ok and not inc


def test_nonpositive_model_decrease_rejected():
    assert accept_tr(1.0, 0.0, 0.0, 1.0, 1.0, 0.1, 1.0, 0.0) == (None, False, False)


def test_fd_diagonal_hessian_clipped():
    H = np.diag([1.0, 50.0])
    grad = lambda x: H @ x
    x = np.array([0.2, 0.1])
    D = fd_diagonal_hessian(grad, x, grad(x), kappa_H=10.0)
    assert np.allclose(np.diag(D), [1.0, 10.0], atol=1e-4)
