"""Pathwise inequalities checked on recorded traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..theory import TheoryReport, bound_coefficients, compute_m, decay_steps

# slack for the floating-point sums in (b) and (c)
ABS_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    inequality: str
    holds: bool
    margin: float
    prefixes_checked: int
    note: str = ""


def step_dynamics_margins(theta, alpha, alpha_next, alpha_bar, alpha_0, gamma_inc, gamma_dec):
    """Per-prefix margin of sum U(1-Theta) <= ceil(m) sum U Theta + decay steps.

    Returns an array whose entry t-1 is rhs - lhs for the prefix of length t.
    """
    theta = np.asarray(theta, dtype=bool)
    a = np.asarray(alpha, dtype=float)
    an = np.asarray(alpha_next, dtype=float)
    if alpha_0 < alpha_bar:
        alpha_bar = alpha_0
    u = np.maximum(a, an) > alpha_bar
    _, _, mc, _ = compute_m(gamma_inc, gamma_dec)
    extra = decay_steps(alpha_bar, alpha_0, gamma_dec)
    lhs = np.cumsum(u & ~theta)
    rhs = mc * np.cumsum(u & theta) + extra
    return rhs - lhs


def synthetic_alphas(thetas, alpha_0, gamma_inc, gamma_dec):
    """Step sizes produced by a success pattern under the update rule."""
    a = np.empty(len(thetas) + 1)
    a[0] = alpha_0
    for k, th in enumerate(thetas):
        a[k + 1] = a[k] * (gamma_inc if th else gamma_dec)
    return a[:-1], a[1:]


def check_trace(records, report: TheoryReport, gamma_inc: float, gamma_dec: float,
                alpha_0: float, eps_f: float, final_phi: float | None = None):
    """Evaluate the three pathwise inequalities on every prefix of a trace.

    (a) large unsuccessful vs large successful counts, unconditional;
    (b) true-iteration count bound, on prefixes where every small true
        iteration was successful;
    (c) the combined bound with accumulated noise, on prefixes where in
        addition every large successful iteration made the required
        progress.
    Returns a list of :class:`CheckResult`.
    """
    n = len(records)
    if n == 0:
        return [CheckResult(k, True, float("inf"), 0, "empty trace") for k in ("a", "b", "c")]
    alpha_bar = min(report.alpha_bar, alpha_0)
    theta = np.array([r.theta_k for r in records], dtype=bool)
    alpha = np.array([r.alpha_k for r in records])
    alpha_next = np.array([r.alpha_next for r in records])
    i = np.array([r.i_k for r in records], dtype=bool)
    u = np.maximum(alpha, alpha_next) > alpha_bar
    phi = np.array([r.phi_k for r in records])
    phi_next = np.array([r.phi_next for r in records])
    noise = 2.0 * eps_f + np.array([r.e_k + r.e_k_plus for r in records])

    results = []
    ma = step_dynamics_margins(theta, alpha, alpha_next, alpha_bar, alpha_0, gamma_inc, gamma_dec)
    results.append(CheckResult("a", bool(np.all(ma >= 0)), float(ma.min()), n))

    A, B, C = bound_coefficients(gamma_inc, gamma_dec)
    t = np.arange(1, n + 1)
    # Assumption: small and true => successful
    ok_small = ~(i & ~u) | theta
    valid_b = np.cumprod(ok_small).astype(bool)
    sum_i = np.cumsum(i)
    rhs_b = B * np.cumsum(u) + C * t
    mb = rhs_b - sum_i
    nb = int(valid_b.sum())
    if nb:
        results.append(CheckResult("b", bool(np.all(mb[valid_b] >= -ABS_TOL)), float(mb[valid_b].min()), nb))
    else:
        results.append(CheckResult("b", True, float("nan"), 0, "assumption failed at k=0"))

    # Assumption: large and successful => progress h - noise
    progress = (phi - phi_next) - (report.h_eps - noise)
    ok_prog = ~(u & theta) | (progress >= -ABS_TOL * (1 + np.abs(phi)))
    valid_c = valid_b & np.cumprod(ok_prog).astype(bool)
    z0 = records[0].z_k
    k_decay = decay_steps(alpha_bar, alpha_0, gamma_dec)
    rhs_c = A * (z0 + np.cumsum(noise)) / report.h_eps + B * k_decay + C * t
    mc_ = rhs_c - sum_i
    nc = int(valid_c.sum())
    if nc:
        results.append(CheckResult("c", bool(np.all(mc_[valid_c] >= -ABS_TOL)), float(mc_[valid_c].min()), nc))
    else:
        results.append(CheckResult("c", True, float("nan"), 0, "assumptions failed at k=0"))
    for r in results[1:]:
        if r.prefixes_checked < n:
            object.__setattr__(r, "note", f"conditional: assumptions held on {r.prefixes_checked} of {n} prefixes")
    return results
