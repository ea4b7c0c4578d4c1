import numpy as np
import pytest

from robustadapt.line_search import LsState, accept_ls


def test_trial_point():
    st = LsState(np.array([1.0, 2.0]), np.array([2.0, 0.0]), 0.25)
    assert np.allclose(st.direction, [-2.0, 0.0])
    assert np.allclose(st.trial, [0.5, 2.0])


def test_insufficient_decrease():
    # threshold 1 - 0.1*0.5*4 + 0.02 = 0.82 < 0.9
    ok, inc = accept_ls(1.0, 0.9, 0.1, np.array([2.0, 0.0]), 0.5, 1e-3, 0.01)
    assert not ok and not inc


def test_boundary_inclusive():
    g = np.array([0.0, 2.0])
    f_plus = 1.0 - 0.25 * 0.5 * 4.0 + 2 * 0.125
    ok, inc = accept_ls(1.0, f_plus, 0.25, g, 0.5, 1.0, 0.125)
    assert ok and inc


def test_eps_rej_gate_is_strict():
    eps_rej = 1.0
    g = np.array([eps_rej - 1e-12])
    ok, inc = accept_ls(1.0, -5.0, 0.1, g, 0.5, eps_rej, 0.0)
    assert ok and not inc
    ok, inc = accept_ls(1.0, -5.0, 0.1, np.array([eps_rej]), 0.5, eps_rej, 0.0)
    assert ok and inc
