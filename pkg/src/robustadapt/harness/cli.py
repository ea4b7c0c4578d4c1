"""Command line entry point: ``robustadapt {run,sweep,theory,validate-oracles,check-trace}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .. import engine
from ..theory import InfeasibleTheory
from .checks import check_trace
from .config import ConfigError, load_config
from .experiment import parse_value, resolve, run_experiment, sweep
from .validation import validate_oracles

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_INVARIANT = 3


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = run_experiment(cfg, output_dir=args.output, force=args.force or None, workers=args.workers)
    n = len(res.summary)
    reached = sum(not r["censored"] for r in res.summary)
    print(f"epsilon={res.epsilon:.6g} budget={res.max_iters} trials={n} reached={reached}")
    if res.negative_control:
        print("negative control (p_lower <= p_m): " + json.dumps(res.diagnostics, sort_keys=True))
    elif res.curve is not None:
        bad = res.verdicts.count("violation")
        print(f"tail grid points={len(res.verdicts)} violations={bad} t_threshold={res.report.t_threshold:.6g}")
    if not res.invariant_ok:
        print("invariant violation detected", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = [parse_value(v.strip()) for v in args.values.split(",") if v.strip()]
    results = sweep(cfg, args.param, values, output_dir=args.output, force=args.force or None,
                    workers=args.workers)
    code = EXIT_OK
    for v, res in results:
        if res is None:
            print(f"{args.param}={v}: infeasible")
            code = max(code, EXIT_INFEASIBLE)
            continue
        reached = sum(not r["censored"] for r in res.summary)
        print(f"{args.param}={v}: epsilon={res.epsilon:.6g} p_m={res.report.p_m:.6g} "
              f"reached={reached}/{len(res.summary)}")
        if not res.invariant_ok:
            code = EXIT_INVARIANT
    return code


def _cmd_theory(args) -> int:
    cfg = load_config(args.config)
    _, report, _ = resolve(cfg)
    if args.format in ("text", "both"):
        print(report.render())
    if args.format in ("json", "both"):
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    checks = validate_oracles(cfg.oracles, cfg.problem(), draws=args.draws, seed=args.seed,
                              alphas=(cfg.params.alpha_0, 0.1 * cfg.params.alpha_0))
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


def _cmd_check_trace(args) -> int:
    cfg = load_config(args.config)
    cfg, report, _ = resolve(cfg)
    records = engine.read_trace_csv(args.trace)
    p = cfg.params
    results = check_trace(records, report, p.gamma_inc, p.gamma_dec, p.alpha_0, cfg.oracles.zeroth.eps_f)
    for r in results:
        verdict = "holds" if r.holds else "VIOLATED"
        note = f"  ({r.note})" if r.note else ""
        print(f"({r.inequality}) {verdict} margin={r.margin:.6g} prefixes={r.prefixes_checked}{note}")
    return EXIT_OK if all(r.holds for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustadapt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def exp_opts(p):
        p.add_argument("config")
        p.add_argument("-o", "--output", help="output directory (overrides the config)")
        p.add_argument("--force", action="store_true", help="run infeasible configs as negative controls")
        p.add_argument("--workers", type=int, default=None, help="parallel worker processes")

    p = sub.add_parser("run", help="run a Monte Carlo experiment")
    exp_opts(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run one experiment per parameter value")
    exp_opts(p)
    p.add_argument("--param", required=True, help="section.key, e.g. first_order.delta_1")
    p.add_argument("--values", required=True, help="comma separated values")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("theory", help="print the analysis constants")
    p.add_argument("config")
    p.add_argument("--format", choices=("text", "json", "both"), default="both")
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("validate-oracles", help="statistical checks of the configured oracles")
    p.add_argument("config")
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("check-trace", help="check the pathwise inequalities on a trace CSV")
    p.add_argument("trace")
    p.add_argument("config")
    p.set_defaults(func=_cmd_check_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleTheory as exc:
        print(f"infeasible theory: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
