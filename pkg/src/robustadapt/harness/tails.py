"""Empirical stopping-time tails and their comparison with the theoretical bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..theory import TheoryReport

Z95 = 1.959963984540054


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # exact endpoints at k = 0 and k = n; the difference below leaves round-off
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class TailCurve:
    t: np.ndarray
    empirical_tail: np.ndarray
    wilson_lo: np.ndarray
    wilson_hi: np.ndarray
    azuma_term: np.ndarray
    noise_term: np.ndarray
    total_bound: np.ndarray
    t_threshold: float
    trials: int

    def rows(self):
        for j in range(len(self.t)):
            yield (int(self.t[j]), float(self.empirical_tail[j]), float(self.wilson_hi[j]),
                   float(self.azuma_term[j]), float(self.noise_term[j]), float(self.total_bound[j]))


def t_grid(t_threshold: float, budget: int, points: int = 20) -> np.ndarray:
    """Geometric grid of integer horizons from t_threshold to budget."""
    lo = max(1.0, t_threshold)
    hi = max(float(budget), lo)
    g = np.unique(np.ceil(np.geomspace(lo, hi, points)).astype(np.int64))
    return g


def tail_curve(stopping_times, budget: int, report: TheoryReport, grid=None) -> TailCurve:
    """Empirical P(T_eps > t) on a grid; censored trials (None) count as exceeding every t."""
    if grid is None:
        grid = t_grid(report.t_threshold, budget)
    n = len(stopping_times)
    T = np.array([math.inf if s is None else s for s in stopping_times], dtype=float)
    emp, lo, hi = [], [], []
    for t in grid:
        k = int(np.sum(T > t))
        emp.append(k / n if n else 0.0)
        a, b = wilson_interval(k, n)
        lo.append(a)
        hi.append(b)
    az, nz, total = report.tail_terms(grid)
    return TailCurve(np.asarray(grid), np.array(emp), np.array(lo), np.array(hi),
                     np.broadcast_to(az, grid.shape).astype(float),
                     np.broadcast_to(nz, grid.shape).astype(float),
                     np.broadcast_to(total, grid.shape).astype(float),
                     report.t_threshold, n)


def compare_tail(curve: TailCurve) -> list[str]:
    """'consistent' where the empirical tail is within the bound plus the Wilson margin."""
    out = []
    for j, t in enumerate(curve.t):
        if t <= curve.t_threshold or curve.total_bound[j] >= 1.0:
            out.append("consistent")
            continue
        margin = curve.wilson_hi[j] - curve.empirical_tail[j]
        ok = curve.empirical_tail[j] <= curve.total_bound[j] + margin
        out.append("consistent" if ok else "violation")
    return out
