"""Experiment configuration files (TOML).

Sections: ``[problem]``, ``[method]``, ``[zeroth_order]``, ``[first_order]``,
``[theory]`` and ``[experiment]``. See ``configs/`` for examples.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..oracles import CzoSpec, OracleSuite, SfoSpec, SzoSpec
from ..problems import ProblemInstance, make_problem
from ..theory import MethodParams

SECTIONS = ("problem", "method", "zeroth_order", "first_order", "theory", "experiment")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem_name: str
    dim: int
    params: MethodParams
    oracles: OracleSuite
    epsilon: float | str = "auto"
    trials: int = 100
    max_iters: int | None = None
    base_seed: int = 0
    output_dir: str | None = None
    save_traces: bool = False
    workers: int = 1
    force: bool = False
    x0: tuple | None = None
    problem_options: dict = field(default_factory=dict)
    theory: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def problem(self) -> ProblemInstance:
        return make_problem(self.problem_name, self.dim, **self.problem_options)


def _known(cls, section: dict, name: str, skip=()):
    allowed = {f.name for f in fields(cls)} - set(skip)
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return dict(section)


def from_dict(data: dict) -> ExperimentConfig:
    data = copy.deepcopy(data)
    extra = set(data) - set(SECTIONS)
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")
    prob = dict(data.get("problem", {}))
    if "name" not in prob:
        raise ConfigError("[problem] needs a name")
    name = prob.pop("name")
    dim = prob.pop("dim", 2)
    x0 = prob.pop("x0", None)
    x0 = tuple(float(v) for v in x0) if x0 is not None else None

    method = _known(MethodParams, data.get("method", {}), "method", skip=("x0",))
    try:
        params = MethodParams(**method, x0=x0)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[method]: {exc}") from exc

    zo = dict(data.get("zeroth_order", {"oracle": "czo", "eps_f": 0.0}))
    kind = zo.pop("oracle", "czo")
    try:
        if kind == "czo":
            zeroth = CzoSpec(**_known(CzoSpec, zo, "zeroth_order"))
        elif kind == "szo":
            zeroth = SzoSpec(**_known(SzoSpec, zo, "zeroth_order"))
        else:
            raise ConfigError(f"[zeroth_order] oracle must be 'szo' or 'czo', got {kind!r}")
    except TypeError as exc:
        raise ConfigError(f"[zeroth_order]: {exc}") from exc

    fo = _known(SfoSpec, data.get("first_order", {}), "first_order")
    fo.setdefault("accuracy_form", params.method)
    try:
        sfo = SfoSpec(**fo)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[first_order]: {exc}") from exc

    exp = dict(data.get("experiment", {}))
    allowed = {"epsilon", "trials", "max_iters", "base_seed", "output_dir", "save_traces", "workers", "force"}
    if set(exp) - allowed:
        raise ConfigError(f"unknown keys in [experiment]: {sorted(set(exp) - allowed)}")
    eps = exp.get("epsilon", "auto")
    if eps != "auto":
        eps = float(eps)
        if eps <= 0:
            raise ConfigError("epsilon must be positive or 'auto'")
    trials = int(exp.get("trials", 100))
    if trials < 0:
        raise ConfigError("trials must be nonnegative")
    theory = dict(data.get("theory", {}))
    t_allowed = {"eta", "p_lower", "s", "p_hat", "tail_variant"}
    if set(theory) - t_allowed:
        raise ConfigError(f"unknown keys in [theory]: {sorted(set(theory) - t_allowed)}")
    return ExperimentConfig(
        problem_name=name, dim=int(dim), params=params, oracles=OracleSuite(zeroth, sfo),
        epsilon=eps, trials=trials,
        max_iters=None if exp.get("max_iters") is None else int(exp["max_iters"]),
        base_seed=int(exp.get("base_seed", 0)), output_dir=exp.get("output_dir"),
        save_traces=bool(exp.get("save_traces", False)), workers=int(exp.get("workers", 1)),
        force=bool(exp.get("force", False)), x0=x0, problem_options=prob, theory=theory, raw=data,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    cfg = from_dict(data)
    if cfg.output_dir is not None and not Path(cfg.output_dir).is_absolute():
        cfg.output_dir = str(Path(path).resolve().parent / cfg.output_dir)
    return cfg


def set_path(data: dict, path: str, value) -> dict:
    """Return a copy of ``data`` with ``section.key`` set to ``value``."""
    out = copy.deepcopy(data)
    section, _, key = path.partition(".")
    if not key or section not in SECTIONS:
        raise ConfigError(f"parameter path must look like 'section.key', got {path!r}")
    out.setdefault(section, {})[key] = value
    return out
