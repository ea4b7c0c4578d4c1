"""The adaptive step-size framework with full ground-truth instrumentation.

:func:`run` executes one trajectory. The method code (ratio test, Cauchy
step, sufficient-decrease test) only sees oracle values; the engine uses
the oracles' ground truth to fill in the analysis indicators (true,
successful, large) and to detect the stopping time.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from . import line_search as ls
from . import trust_region as tr
from .oracles import OracleSuite, SfoSpec, ground_truth, sfo_sample, zero_order_sample
from .problems import ProblemInstance
from .theory import InfeasibleTheory, MethodParams, TheoryReport, build_report

log = logging.getLogger(__name__)

ALPHA_FLOOR = 1e-300
# relative slack for floating-point comparisons in the progress lemma
PROGRESS_RTOL = 1e-12


class NonFiniteOracleError(RuntimeError):
    pass


class LemmaViolation(AssertionError):
    pass


@dataclass(frozen=True)
class IterationRecord:
    k: int
    alpha_k: float
    x_norm_grad: float
    phi_k: float
    z_k: float
    theta_k: bool
    i_k: bool
    u_k: bool | None
    e_k: float
    e_k_plus: float
    model_decrease: float
    accepted: bool
    # extra columns, after the documented ones
    alpha_next: float
    phi_next: float
    g_norm: float
    grad_error: float
    corrupted: bool
    lemma_small: bool | None
    lemma_progress: bool | None


RECORD_FIELDS = tuple(f.name for f in fields(IterationRecord))


@dataclass(frozen=True)
class RunTrace:
    records: tuple
    stopping_time: int | None
    epsilon: float
    seed: int
    max_iters: int
    status: str
    final_alpha: float
    final_phi: float
    final_grad_norm: float
    alpha_bar: float | None
    left_box: bool = False
    lemma_status: dict = field(default_factory=dict)
    violations: tuple = ()

    @property
    def reached(self) -> bool:
        return self.stopping_time is not None

    def counts(self) -> dict:
        return {
            "n_true": sum(r.i_k for r in self.records),
            "n_successful": sum(r.theta_k for r in self.records),
            "n_large": sum(bool(r.u_k) for r in self.records),
            "n_accepted": sum(r.accepted for r in self.records),
        }


def classify_iteration(grad_error_norm: float, g_norm: float, alpha_k: float,
                       e_k: float, e_k_plus: float, sfo: SfoSpec, eps_f: float) -> bool:
    """True-iteration indicator from ground-truth errors and the oracles' true parameters."""
    return sfo.is_accurate(grad_error_norm, alpha_k, g_norm) and e_k + e_k_plus <= 2.0 * eps_f


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def write_trace_csv(trace: RunTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in trace.records:
            w.writerow([_fmt(v) for v in astuple(r)])


def read_trace_csv(path) -> list[IterationRecord]:
    ints = {"k"}
    bools = {"theta_k", "i_k", "u_k", "accepted", "corrupted", "lemma_small", "lemma_progress"}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {}
            for name in RECORD_FIELDS:
                raw = row[name]
                if name in ints:
                    vals[name] = int(raw)
                elif name in bools:
                    vals[name] = None if raw == "" else bool(int(raw))
                else:
                    vals[name] = float(raw)
            out.append(IterationRecord(**vals))
    return out


def _lemma_preconditions(params: MethodParams, oracles: OracleSuite, report: TheoryReport,
                         epsilon: float, eps_f_alg: float) -> dict:
    """Decide which per-iteration lemma checks are meaningful for this configuration."""
    sfo = oracles.first
    eps_f_true = oracles.zeroth.eps_f
    status = {}
    noise_ok = eps_f_alg <= eps_f_true
    # the small-step lemma needs the acceptance slack to cover the true noise
    slack_ok = eps_f_alg >= eps_f_true
    if params.method == "trust-region":
        small = epsilon > sfo.eps_g / report.eta and epsilon >= report.epsilon * (1 - 1e-12)
        reason = "skipped: eps <= eps_g/eta or eps below report eps"
    else:
        mult = max(1.0 / report.eta, 1.0 + sfo.tau)
        small = params.eps_rej >= sfo.eps_g and epsilon >= mult * params.eps_rej * (1 - 1e-12)
        reason = "skipped: eps_rej < eps_g or eps below max(1/eta, 1+tau) eps_rej"
    if small and not slack_ok:
        small, reason = False, "skipped: eps_f_assumed below oracle eps_f"
    status["small_true_successful"] = "active" if small else reason
    status["large_successful_progress"] = (
        "active" if noise_ok else "skipped: eps_f_assumed exceeds oracle eps_f"
    )
    return status


def run(problem: ProblemInstance, oracles: OracleSuite, params: MethodParams,
        epsilon: float, max_iters: int, seed: int, *, report: TheoryReport | None = None,
        x0=None, strict: bool = False) -> RunTrace:
    """Run one trajectory until the true gradient norm drops to ``epsilon``.

    The per-iteration lemma checks need the analysis constants; pass a
    ``report`` or one is built from the configuration. With ``strict=True``
    a lemma violation raises :class:`LemmaViolation`; otherwise it is
    recorded on the trace.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    zeroth, sfo = oracles.zeroth, oracles.first
    is_tr = params.method == "trust-region"
    eps_f_true = zeroth.eps_f
    eps_f_alg = eps_f_true if params.eps_f_assumed is None else params.eps_f_assumed

    if x0 is None:
        x0 = params.x0 if params.x0 is not None else problem.default_start
    x = np.array(x0, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({problem.dim},)")

    if report is None:
        try:
            report = build_report(problem, oracles, params, epsilon, x0=x)
        except InfeasibleTheory as exc:
            log.warning("no analysis constants (%s); lemma checks disabled", exc)
    if report is not None:
        alpha_bar, h_eps = report.alpha_bar, report.h_eps
        if params.alpha_0 < alpha_bar:
            alpha_bar = params.alpha_0
        lemma_status = _lemma_preconditions(params, oracles, report, epsilon, eps_f_alg)
    else:
        alpha_bar = h_eps = None
        lemma_status = {"small_true_successful": "skipped: no theory", "large_successful_progress": "skipped: no theory"}
    check_small = lemma_status["small_true_successful"] == "active"
    check_progress = lemma_status["large_successful_progress"] == "active"
    for name, st in lemma_status.items():
        if st != "active":
            log.info("lemma check %s %s", name, st)

    rng = np.random.default_rng(seed)
    alpha = params.alpha_0
    phi = problem.value_at(x)
    grad = problem.gradient_at(x)
    gnorm_true = float(np.linalg.norm(grad))
    records = []
    violations = []
    left_box = False
    status = "budget"
    stopping_time = None
    n = problem.dim

    for k in range(max_iters + 1):
        if gnorm_true <= epsilon:
            stopping_time, status = k, "converged"
            break
        if k == max_iters:
            break
        in_box = problem.in_box(x)

        g_sample = sfo_sample(sfo, problem, x, alpha, rng)
        g = g_sample.value
        if not np.all(np.isfinite(g)):
            raise NonFiniteOracleError(f"gradient oracle returned non-finite values at k={k}")
        g_norm = float(np.linalg.norm(g))
        f_sample = zero_order_sample(zeroth, problem, x, rng)

        if is_tr:
            if params.hessian_mode == "fd-diagonal" and params.kappa_H > 0:
                H = tr.fd_diagonal_hessian(
                    lambda z: sfo_sample(sfo, problem, z, alpha, rng).value, x, g, params.kappa_H)
            else:
                H = np.zeros((n, n))
            model = tr.TrModel(f_sample.value, g, H, params.kappa_H if params.kappa_H > 0 else np.inf)
            step = tr.solve_subproblem(model, alpha, params.kappa_fcd)
            model_dec = model.decrease(step)
        else:
            state = ls.LsState(x, g, alpha)
            step = state.trial - x
            # model f + g's + |s|^2/(2 alpha) at s = -alpha g
            model_dec = 0.5 * alpha * g_norm * g_norm
        x_plus = x + step
        fp_sample = zero_order_sample(zeroth, problem, x_plus, rng)
        f_k, f_plus = f_sample.value, fp_sample.value
        if not (math.isfinite(f_k) and math.isfinite(f_plus)):
            raise NonFiniteOracleError(f"function oracle returned non-finite values at k={k}")

        if is_tr:
            _, accepted, increase = tr.accept_tr(f_k, f_plus, model_dec, g_norm, alpha,
                                                 params.eta_1, params.eta_2, eps_f_alg)
        else:
            accepted, increase = ls.accept_ls(f_k, f_plus, alpha, g, params.theta,
                                              params.eps_rej, eps_f_alg)
        theta_k = accepted and increase
        alpha_next = alpha * (params.gamma_inc if theta_k else params.gamma_dec)

        # ground truth, harness side only
        e_k = abs(float(ground_truth(f_sample).true_error))
        e_kp = abs(float(ground_truth(fp_sample).true_error))
        g_err = float(np.linalg.norm(ground_truth(g_sample).true_error))
        corrupted = ground_truth(g_sample).was_corrupted
        i_k = classify_iteration(g_err, g_norm, alpha, e_k, e_kp, sfo, eps_f_true)
        phi_plus = problem.value_at(x_plus) if accepted else phi
        u_k = None if alpha_bar is None else max(alpha, alpha_next) > alpha_bar
        plus_in_box = problem.in_box(x_plus)
        if not (in_box and plus_in_box) and not left_box:
            left_box = True
            log.warning("iterate left the box %s where L = %g is certified (k=%d)",
                        problem.box, problem.lipschitz_L, k)

        lemma_small = lemma_progress = None
        if check_small and in_box and plus_in_box and i_k:
            small = alpha <= alpha_bar if is_tr else max(alpha, alpha_next) <= alpha_bar
            if small:
                lemma_small = theta_k
                if not theta_k:
                    violations.append((k, "small_true_successful", 0.0))
        if check_progress and u_k and theta_k:
            dec = phi - phi_plus
            need = h_eps - (2.0 * eps_f_true + e_k + e_kp)
            margin = dec - need
            lemma_progress = margin >= -PROGRESS_RTOL * (abs(phi) + abs(phi_plus) + 1.0)
            if not lemma_progress:
                violations.append((k, "large_successful_progress", margin))
        if violations and strict:
            raise LemmaViolation(f"lemma {violations[-1][1]} violated at k={violations[-1][0]}")

        records.append(IterationRecord(
            k=k, alpha_k=alpha, x_norm_grad=gnorm_true, phi_k=phi,
            z_k=phi - problem.lower_bound, theta_k=theta_k, i_k=i_k, u_k=u_k,
            e_k=e_k, e_k_plus=e_kp, model_decrease=model_dec, accepted=accepted,
            alpha_next=alpha_next, phi_next=phi_plus, g_norm=g_norm, grad_error=g_err,
            corrupted=corrupted, lemma_small=lemma_small, lemma_progress=lemma_progress,
        ))

        if accepted:
            x, phi = x_plus, phi_plus
            grad = problem.gradient_at(x)
            gnorm_true = float(np.linalg.norm(grad))
        alpha = alpha_next
        if alpha < ALPHA_FLOOR:
            if gnorm_true <= epsilon:
                stopping_time, status = k + 1, "converged"
                break
            status = "step-collapse"
            log.warning("step size %.3g fell below %.0e at k=%d: drift condition violated (p <= p_m)",
                        alpha, ALPHA_FLOOR, k)
            break

    return RunTrace(
        records=tuple(records), stopping_time=stopping_time, epsilon=epsilon, seed=seed,
        max_iters=max_iters, status=status, final_alpha=alpha, final_phi=phi,
        final_grad_norm=gnorm_true, alpha_bar=alpha_bar, left_box=left_box,
        lemma_status=lemma_status, violations=tuple(violations),
    )
