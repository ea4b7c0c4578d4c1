"""Statistical compliance checks for the simulated oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..oracles import (CzoSpec, OracleSuite, SzoSpec, czo_sample, ground_truth, sfo_sample,
                       szo_sample)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    estimate: float
    limit: float
    ci: tuple = ()

    def line(self) -> str:
        ci = f" CI=({self.ci[0]:.4g}, {self.ci[1]:.4g})" if self.ci else ""
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name}: estimate={self.estimate:.6g} limit={self.limit:.6g}{ci}"


def _bootstrap_ci(values, stat, rng, reps=200):
    n = len(values)
    boots = np.empty(reps)
    for r in range(reps):
        boots[r] = stat(values[rng.integers(0, n, n)])
    return float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))


def _binomial_band(count, n, p):
    """Is count/n within p +- 3 sigma?"""
    sigma = math.sqrt(p * (1 - p) / n)
    est = count / n
    return abs(est - p) <= 3 * sigma + 1e-12, est, (p - 3 * sigma, p + 3 * sigma)


def _validate_szo(spec: SzoSpec, problem, x, draws, rng):
    phi = problem.value_at(x)
    errs = np.array([szo_sample(spec, problem, x, rng).value - phi for _ in range(draws)])
    a = np.abs(errs)
    out = []
    lo, hi = _bootstrap_ci(a, np.mean, rng)
    out.append(Check("szo mean |e| <= eps_f", lo <= spec.eps_f, float(a.mean()), spec.eps_f, (lo, hi)))

    def mq(v):
        return float(np.mean(np.abs(v - v.mean()) ** spec.q))

    lo, hi = _bootstrap_ci(a, mq, rng)
    out.append(Check(f"szo centered moment q={spec.q:g} <= zeta_q", lo <= spec.zeta_q, mq(a), spec.zeta_q, (lo, hi)))
    lo, hi = _bootstrap_ci(a, np.var, rng)
    out.append(Check("szo variance <= zeta_2", lo <= spec.zeta_2, float(a.var()), spec.zeta_2, (lo, hi)))
    ok, est, band = _binomial_band(int(np.sum(errs > 0)), draws, 0.5)
    if spec.eps_f > 0:
        out.append(Check("szo sign symmetric", ok, est, 0.5, band))
    return out


def _validate_czo(spec: CzoSpec, problem, x, draws, rng):
    samples = [czo_sample(spec, problem, x, rng) for _ in range(draws)]
    truth = [ground_truth(s) for s in samples]
    errs = np.abs([t.true_error for t in truth])
    corrupted = np.array([t.was_corrupted for t in truth])
    out = []
    worst = float(errs.max()) if draws else 0.0
    cap = spec.eps_f + spec.eps_c
    out.append(Check("czo hard bound |e| <= eps_f + eps_c", worst <= cap, worst, cap))
    clean_worst = float(errs[~corrupted].max()) if np.any(~corrupted) else 0.0
    out.append(Check("czo clean branch |e| <= eps_f", clean_worst <= spec.eps_f, clean_worst, spec.eps_f))
    if 0 < spec.delta_0:
        ok, est, band = _binomial_band(int(corrupted.sum()), draws, spec.delta_0)
        out.append(Check("czo corruption fraction ~ delta_0", ok, est, spec.delta_0, band))
    else:
        out.append(Check("czo corruption fraction = 0", not corrupted.any(), float(corrupted.mean()), 0.0))
    return out


def _validate_sfo(sfo, problem, x, alpha, draws, rng):
    grad = problem.gradient_at(x)
    clean = 0
    bad_clean = 0
    form_ok = True
    gnorm = float(np.linalg.norm(grad))
    M = sfo.corruption_magnitude
    for _ in range(draws):
        s = sfo_sample(sfo, problem, x, alpha, rng)
        t = ground_truth(s)
        if t.was_corrupted:
            g = s.value
            strategy = sfo.corruption_strategy
            if strategy == "anti-descent" and gnorm == 0.0:
                strategy = "huge-random"
            if strategy == "huge-random":
                form_ok &= math.isclose(np.linalg.norm(g), M * (1 + gnorm), rel_tol=1e-9)
            elif strategy == "negated-scaled":
                form_ok &= bool(np.allclose(g, -M * grad))
            elif strategy == "zero-vector":
                form_ok &= not np.any(g)
            else:
                form_ok &= math.isclose(np.linalg.norm(g), M, rel_tol=1e-9) and float(g @ grad) <= 0
            continue
        clean += 1
        if not sfo.is_accurate(float(np.linalg.norm(t.true_error)), alpha, float(np.linalg.norm(s.value))):
            bad_clean += 1
    out = [Check("sfo clean branch accurate on every draw", bad_clean == 0, float(bad_clean), 0.0)]
    p = 1.0 - sfo.delta_1
    if 0 < sfo.delta_1:
        ok, est, band = _binomial_band(clean, draws, p)
        out.append(Check("sfo clean fraction ~ 1 - delta_1", ok, est, p, band))
    else:
        out.append(Check("sfo clean fraction = 1", clean == draws, clean / max(draws, 1), 1.0))
    out.append(Check(f"sfo corruption form ({sfo.corruption_strategy})", bool(form_ok), float(form_ok), 1.0))
    return out


def validate_oracles(specs: OracleSuite, problem, draws: int = 100_000, seed: int = 0,
                     x=None, alphas=(1.0, 0.1)) -> list[Check]:
    """Moment, bound and fraction checks for both oracles at a fixed point."""
    if draws < 1:
        raise ValueError("draws must be positive")
    rng = np.random.default_rng(seed)
    x = problem.default_start if x is None else np.asarray(x, dtype=float)
    z = specs.zeroth
    if isinstance(z, SzoSpec):
        checks = _validate_szo(z, problem, x, draws, rng)
    else:
        checks = _validate_czo(z, problem, x, draws, rng)
    per = max(1, draws // len(alphas))
    for a in alphas:
        for c in _validate_sfo(specs.first, problem, x, a, per, rng):
            checks.append(Check(f"{c.name} [alpha={a:g}]", c.passed, c.estimate, c.limit, c.ci))
    return checks


def noise_tail_mc(zeroth, t: int, s_values, reps: int = 1_000_000, seed: int = 0,
                  mean: float | None = None, chunk: int = 20_000):
    """Monte Carlo counts of S_t >= t s for the centred sums of E_k + E_k^+.

    ``mean`` is the exact E|e| when known; otherwise it is estimated from a
    separate sample of 10^7 draws. Returns (counts per s, reps).
    """
    rng = np.random.default_rng(seed)
    if mean is None:
        mean = float(np.mean(zeroth.draw_abs(rng, 10_000_000)))
    s_values = np.asarray(s_values, dtype=float)
    counts = np.zeros(len(s_values), dtype=np.int64)
    done = 0
    while done < reps:
        n = min(chunk, reps - done)
        sums = zeroth.draw_abs(rng, (n, 2 * t)).sum(axis=1) - 2 * t * mean
        counts += (sums[:, None] >= t * s_values[None, :]).sum(axis=0)
        done += n
    return counts, reps
