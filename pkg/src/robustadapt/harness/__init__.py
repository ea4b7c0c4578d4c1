"""Experiment harness: configs, trials, pathwise checks, tail comparison."""

from .checks import CheckResult, check_trace, step_dynamics_margins, synthetic_alphas
from .config import ConfigError, ExperimentConfig, from_dict, load_config
from .experiment import ExperimentResult, resolve, run_experiment, sweep
from .tails import TailCurve, compare_tail, t_grid, tail_curve, wilson_interval
from .validation import Check, validate_oracles

__all__ = [
    "Check", "CheckResult", "ConfigError", "ExperimentConfig", "ExperimentResult", "TailCurve",
    "check_trace", "compare_tail", "from_dict", "load_config", "resolve", "run_experiment",
    "step_dynamics_margins", "sweep", "synthetic_alphas", "t_grid", "tail_curve",
    "validate_oracles", "wilson_interval",
]
