"""Seeded Monte Carlo experiments: many trials, summary CSV, tail CSV, theory JSON."""

from __future__ import annotations

import csv
import dataclasses
import functools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import engine
from ..problems import make_problem
from ..theory import InfeasibleTheory, TheoryReport, build_report
from .checks import check_trace
from .config import ExperimentConfig, from_dict, set_path
from .tails import TailCurve, compare_tail, tail_curve

log = logging.getLogger(__name__)

SUMMARY_FIELDS = (
    "trial_id", "seed", "stopping_time", "censored", "status", "final_grad_norm", "final_alpha",
    "n_iters", "n_true", "n_successful", "n_large", "n_accepted", "n_lemma_violations",
    "check_a", "check_b", "check_c", "left_box",
)
TAIL_FIELDS = ("t", "empirical_tail", "wilson_hi", "azuma_term", "noise_term", "total_bound")
AUTO_SAFETY = 2.0
PILOT_ITERS = 1000
FALLBACK_BUDGET = 10_000


@dataclass
class ExperimentResult:
    report: TheoryReport
    epsilon: float
    max_iters: int
    summary: list = field(default_factory=list)
    curve: TailCurve | None = None
    verdicts: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    negative_control: bool = False

    @property
    def invariant_ok(self) -> bool:
        rows_ok = all(r["n_lemma_violations"] == 0 and r["check_a"] and r["check_b"] and r["check_c"]
                      for r in self.summary)
        return rows_ok and "violation" not in self.verdicts


@functools.lru_cache(maxsize=8)
def _problem(name, dim, options):
    return make_problem(name, dim, **dict(options))


def _problem_of(cfg: ExperimentConfig):
    return _problem(cfg.problem_name, cfg.dim, tuple(sorted(cfg.problem_options.items())))


def estimate_p_pilot(cfg: ExperimentConfig, epsilon: float, iters: int = PILOT_ITERS) -> float:
    """Fraction of true iterations over one pilot run (an empirical estimate, not a bound)."""
    problem = _problem_of(cfg)
    trace = engine.run(problem, cfg.oracles, cfg.params, epsilon, iters, seed=cfg.base_seed - 1,
                       x0=cfg.x0)
    if not trace.records:
        return 1.0
    return float(np.mean([r.i_k for r in trace.records]))


def resolve(cfg: ExperimentConfig) -> tuple[ExperimentConfig, TheoryReport, float]:
    """Settle epsilon (or eps_rej), the p estimate and the theory report for a config.

    Returns the possibly updated config, the report and the target epsilon.
    Raises :class:`InfeasibleTheory` when "auto" has nothing feasible to pick.
    """
    problem = _problem_of(cfg)
    th = dict(cfg.theory)
    p_src = th.pop("p_lower", None)
    kwargs = {k: th[k] for k in ("eta", "s", "p_hat", "tail_variant") if k in th}
    params = cfg.params
    eps = cfg.epsilon
    p_lower = None if p_src in (None, "pilot") else float(p_src)

    if eps == "auto":
        probe = build_report(problem, cfg.oracles, params, 1.0, p_lower=p_lower, x0=cfg.x0, **kwargs)
        if params.method == "trust-region":
            base = probe.eps_feasible
        else:
            base = probe.eps_feasible / max(1.0 / probe.eta, 1.0 + cfg.oracles.first.tau)
        if not math.isfinite(base):
            raise InfeasibleTheory("epsilon='auto' needs p_lower > p_m for some epsilon")
        if base <= 0:
            raise InfeasibleTheory("epsilon='auto' is undefined for noiseless oracles; set epsilon")
        if params.method == "trust-region":
            eps = AUTO_SAFETY * base
        else:
            params = dataclasses.replace(params, eps_rej=AUTO_SAFETY * base)
            eps = None
    if params.method == "line-search":
        eps = None
    report = build_report(problem, cfg.oracles, params, eps, p_lower=p_lower, x0=cfg.x0, **kwargs)
    if p_src == "pilot":
        p_est = estimate_p_pilot(dataclasses.replace(cfg, params=params), report.epsilon)
        report = build_report(problem, cfg.oracles, params, report.epsilon, p_lower=p_est,
                              x0=cfg.x0, **kwargs)
        report.p_lower_source = f"pilot estimate: fraction of true iterations over {PILOT_ITERS} iterations"
    cfg = dataclasses.replace(cfg, params=params)
    return cfg, report, report.epsilon


def _budget(cfg: ExperimentConfig, report: TheoryReport) -> int:
    if cfg.max_iters is not None:
        return cfg.max_iters
    if math.isfinite(report.t_threshold):
        return int(math.ceil(10 * report.t_threshold))
    return FALLBACK_BUDGET


def _trial(job):
    cfg, report, epsilon, budget, trial_id, trace_dir = job
    problem = _problem_of(cfg)
    seed = cfg.base_seed + trial_id
    tr = engine.run(problem, cfg.oracles, cfg.params, epsilon, budget, seed, report=report, x0=cfg.x0)
    checks = {c.inequality: c.holds for c in check_trace(
        tr.records, report, cfg.params.gamma_inc, cfg.params.gamma_dec, cfg.params.alpha_0,
        cfg.oracles.zeroth.eps_f)}
    if trace_dir is not None:
        engine.write_trace_csv(tr, Path(trace_dir) / f"trace_{trial_id}.csv")
    c = tr.counts()
    return {
        "trial_id": trial_id, "seed": seed, "stopping_time": tr.stopping_time,
        "censored": not tr.reached, "status": tr.status, "final_grad_norm": tr.final_grad_norm,
        "final_alpha": tr.final_alpha, "n_iters": len(tr.records), **{k: c[k] for k in
        ("n_true", "n_successful", "n_large", "n_accepted")},
        "n_lemma_violations": len(tr.violations), "check_a": checks["a"], "check_b": checks["b"],
        "check_c": checks["c"], "left_box": tr.left_box,
    }


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def collapse_diagnostic(summary, alpha_0: float) -> dict:
    if not summary:
        return {"trials": 0}
    fa = np.array([r["final_alpha"] for r in summary])
    return {
        "trials": len(summary),
        "median_final_alpha": float(np.median(fa)),
        "median_final_alpha_ratio": float(np.median(fa) / alpha_0),
        "fraction_below_1e-8_alpha0": float(np.mean(fa < 1e-8 * alpha_0)),
        "fraction_reached": float(np.mean([not r["censored"] for r in summary])),
    }


def run_experiment(cfg: ExperimentConfig, *, output_dir=None, force: bool | None = None,
                   workers: int | None = None) -> ExperimentResult:
    """Run ``cfg.trials`` seeded trials and write the CSV/JSON artifacts.

    Trials use seeds base_seed + i and are merged by trial id, so the output
    does not depend on scheduling. An infeasible theory regime raises
    :class:`InfeasibleTheory` unless forced, in which case the run is a
    negative control and records the step-size collapse diagnostic instead of
    a tail comparison.
    """
    force = cfg.force if force is None else force
    workers = cfg.workers if workers is None else workers
    out = output_dir if output_dir is not None else cfg.output_dir
    cfg, report, epsilon = resolve(cfg)
    negative = not report.feasible
    if negative and not force:
        raise InfeasibleTheory("theory regime infeasible (p_lower <= p_m); use force for a negative control")
    budget = _budget(cfg, report)
    trace_dir = None
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        if cfg.save_traces:
            trace_dir = str(out)
    jobs = [(cfg, report, epsilon, budget, i, trace_dir) for i in range(cfg.trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_trial(j) for j in jobs]
    rows.sort(key=lambda r: r["trial_id"])

    res = ExperimentResult(report=report, epsilon=epsilon, max_iters=budget, summary=rows,
                           negative_control=negative)
    if negative:
        res.diagnostics = collapse_diagnostic(rows, cfg.params.alpha_0)
    elif rows:
        res.curve = tail_curve([r["stopping_time"] for r in rows], budget, report)
        res.verdicts = compare_tail(res.curve)
    if out is not None:
        _write(res, Path(out))
    return res


def _write(res: ExperimentResult, out: Path) -> None:
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in res.summary:
            w.writerow([_cell(r[k]) for k in SUMMARY_FIELDS])
    if res.curve is not None:
        with open(out / "tail.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TAIL_FIELDS + ("verdict",))
            for row, v in zip(res.curve.rows(), res.verdicts):
                w.writerow([_cell(x) for x in row] + [v])
    meta = res.report.to_dict()
    meta["budget"] = res.max_iters
    with open(out / "theory.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if res.negative_control:
        with open(out / "diagnostics.json", "w") as fh:
            json.dump(res.diagnostics, fh, indent=2, sort_keys=True)
            fh.write("\n")


def parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def sweep(cfg: ExperimentConfig, param: str, values, *, output_dir=None, force=None, workers=None):
    """Run one experiment per value of ``param`` (``section.key``); returns (value, result) pairs."""
    base = output_dir if output_dir is not None else cfg.output_dir
    results = []
    for v in values:
        sub = from_dict(set_path(cfg.raw, param, v))
        sub_out = None if base is None else str(Path(base) / f"{param}={v}")
        try:
            res = run_experiment(sub, output_dir=sub_out, force=force, workers=workers)
        except InfeasibleTheory as exc:
            log.warning("%s=%s: %s", param, v, exc)
            res = None
        results.append((v, res))
    if base is not None:
        Path(base).mkdir(parents=True, exist_ok=True)
        with open(Path(base) / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("value", "feasible", "epsilon", "p_lower", "p_m", "t_threshold", "trials",
                        "fraction_reached", "median_stopping_time", "consistent"))
            for v, res in results:
                if res is None:
                    w.writerow((v, 0, "", "", "", "", 0, "", "", ""))
                    continue
                st = [r["stopping_time"] for r in res.summary if r["stopping_time"] is not None]
                frac = len(st) / len(res.summary) if res.summary else ""
                med = float(np.median(st)) if st else ""
                w.writerow([_cell(x) for x in (v, res.report.feasible, res.epsilon, res.report.p_lower,
                                               res.report.p_m, res.report.t_threshold,
                                               len(res.summary), frac, med,
                                               "violation" not in res.verdicts)])
    return results
