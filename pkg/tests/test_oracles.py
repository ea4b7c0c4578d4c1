import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustadapt.oracles import (
    CORRUPTION_STRATEGIES, CzoSpec, OracleSuite, SfoSpec, SzoSpec, czo_sample, ground_truth,
    minibatch_clean_prob, sfo_sample, szo_sample, zero_order_sample,
)
from robustadapt.problems import make_problem

QUAD = make_problem("quadratic", 2)
X = np.array([0.3, -0.7])


def test_zero_noise_is_exact():
    rng = np.random.default_rng(0)
    for spec in (SzoSpec(0.0), CzoSpec(0.0, 0.0, 0.0)):
        s = zero_order_sample(spec, QUAD, X, rng)
        assert s.value == QUAD.value_at(X)


def test_gaussian_folded_mean():
    spec = SzoSpec(0.1)
    a = spec.draw_abs(np.random.default_rng(1), 1_000_000)
    assert 0.09 <= a.mean() <= 0.11


def test_pareto_third_moment():
    spec = SzoSpec(1.0, q=3, zeta_q=1.0, zeta_2=1.0, noise_family="pareto-mixture")
    a = spec.draw_abs(np.random.default_rng(2), 1_000_000)
    assert np.mean(np.abs(a - a.mean()) ** 3) <= 1.05
    assert a.mean() <= 1.0


@pytest.mark.parametrize("family,kw", [
    ("gaussian-folded", {}),
    ("pareto-mixture", {"q": 3.0}),
    ("subexponential", {"subexp_nu": 0.1, "subexp_b": 0.1}),
])
def test_calibrated_families_meet_mean(family, kw):
    spec = SzoSpec(0.1, noise_family=family, **kw)
    a = spec.draw_abs(np.random.default_rng(3), 400_000)
    se = a.std() / math.sqrt(a.size)
    assert a.mean() <= 0.1 + 3 * se
    assert spec.calibration["mean"] <= 0.1 + 1e-12


def test_szo_sign_is_symmetric_and_truth_hidden():
    rng = np.random.default_rng(4)
    s = szo_sample(SzoSpec(0.1), QUAD, X, rng)
    assert not hasattr(s, "true_error")
    t = ground_truth(s)
    assert s.value - QUAD.value_at(X) == pytest.approx(t.true_error)
    assert t.was_corrupted is False


def test_czo_bounds_and_fraction():
    spec = CzoSpec(0.01, eps_c=1.0, delta_0=0.05)
    rng = np.random.default_rng(5)
    n = 100_000
    errs, corrupt = [], 0
    for _ in range(n):
        t = ground_truth(czo_sample(spec, QUAD, X, rng))
        errs.append(abs(t.true_error))
        corrupt += t.was_corrupted
    assert max(errs) <= 1.01
    sigma = math.sqrt(0.05 * 0.95 / n)
    assert abs(corrupt / n - 0.05) <= 3 * sigma


def test_czo_clean_only():
    spec = CzoSpec(0.02, eps_c=5.0, delta_0=0.0)
    rng = np.random.default_rng(6)
    for _ in range(2000):
        assert abs(czo_sample(spec, QUAD, X, rng).value - QUAD.value_at(X)) <= 0.02


def test_czo_zero_eps_c_reduces_to_uniform():
    a = CzoSpec(0.1, eps_c=0.0, delta_0=0.5).draw_abs(np.random.default_rng(7), 200_000)
    b = CzoSpec(0.1, eps_c=0.0, delta_0=0.0).draw_abs(np.random.default_rng(8), 200_000)
    assert a.max() <= 0.1 and b.max() <= 0.1
    # the corrupt branch puts mass at eps_f exactly; the law of |e| is otherwise uniform
    assert abs(np.mean(a[a < 0.1]) - 0.05) < 2e-3


def test_sfo_exact_trust_region_form():
    spec = SfoSpec(eps_g=0.0, kappa=1.0, delta_1=0.0)
    rng = np.random.default_rng(9)
    for _ in range(1000):
        s = sfo_sample(spec, QUAD, X, 0.1, rng)
        assert np.linalg.norm(s.value - QUAD.gradient_at(X)) <= 0.1


def test_sfo_dfo_fraction():
    spec = SfoSpec(kappa=1.0, delta_1=0.64)
    rng = np.random.default_rng(10)
    n = 100_000
    k = sum(ground_truth(sfo_sample(spec, QUAD, X, 1.0, rng)).was_corrupted for _ in range(n))
    assert abs(k / n - 0.64) <= 3 * math.sqrt(0.64 * 0.36 / n)


def test_zero_vector_strategy():
    spec = SfoSpec(delta_1=0.999999, corruption_strategy="zero-vector")
    rng = np.random.default_rng(11)
    s = sfo_sample(spec, QUAD, X, 1.0, rng)
    assert ground_truth(s).was_corrupted
    assert not np.any(s.value)


@pytest.mark.parametrize("strategy", CORRUPTION_STRATEGIES)
def test_corruption_breaks_accuracy(strategy):
    spec = SfoSpec(kappa=0.01, delta_1=0.999999, corruption_strategy=strategy, corruption_magnitude=1e6)
    s = sfo_sample(spec, QUAD, X, 1.0, np.random.default_rng(12))
    t = ground_truth(s)
    assert t.was_corrupted
    assert not spec.is_accurate(float(np.linalg.norm(t.true_error)), 1.0, float(np.linalg.norm(s.value)))


@settings(max_examples=200, deadline=None)
@given(eps_g=st.floats(0, 1), kappa=st.floats(0, 5), tau=st.floats(0, 1),
       alpha=st.floats(1e-6, 10), seed=st.integers(0, 2**32 - 1),
       form=st.sampled_from(["trust-region", "line-search"]))
def test_clean_branch_accuracy_per_draw(eps_g, kappa, tau, alpha, seed, form):
    spec = SfoSpec(eps_g=eps_g, kappa=kappa, tau=tau, delta_1=0.0, accuracy_form=form)
    s = sfo_sample(spec, QUAD, X, alpha, np.random.default_rng(seed))
    err = float(np.linalg.norm(ground_truth(s).true_error))
    assert spec.is_accurate(err, alpha, float(np.linalg.norm(s.value)))


def test_stream_layout_independent_of_branch():
    # same seed, different delta_1: the zeroth-order draws after the gradient call line up
    rng_a, rng_b = np.random.default_rng(13), np.random.default_rng(13)
    sfo_sample(SfoSpec(delta_1=0.0), QUAD, X, 1.0, rng_a)
    sfo_sample(SfoSpec(delta_1=0.999), QUAD, X, 1.0, rng_b)
    assert rng_a.random() == rng_b.random()


def test_minibatch_clean_prob_values():
    assert round(minibatch_clean_prob(0.05, 32), 3) == 0.194
    # 0.99**101 = 0.362372...
    assert minibatch_clean_prob(0.01, 101) == pytest.approx(0.362372, abs=1e-6)
    assert minibatch_clean_prob(0.0, 32) == 1.0
    with pytest.raises(ValueError):
        minibatch_clean_prob(1.5, 3)


def test_spec_validation():
    with pytest.raises(ValueError):
        SzoSpec(-1.0)
    with pytest.raises(ValueError):
        SzoSpec(0.1, q=1.5)
    with pytest.raises(ValueError):
        SzoSpec(0.1, noise_family="subexponential")
    with pytest.raises(ValueError):
        CzoSpec(0.1, delta_0=1.0)
    with pytest.raises(ValueError):
        SfoSpec(corruption_strategy="nope")
    with pytest.raises(ValueError):
        sfo_sample(SfoSpec(), QUAD, X, 0.0, np.random.default_rng(0))
    assert OracleSuite.exact().first.delta_1 == 0.0
