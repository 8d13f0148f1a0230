"""Experiment configuration: JSON in, validated dataclass out.

A config file looks like::

    {
      "family": {"family": "mab", "structured": true},
      "rule": {"rule": "td1", "alpha0": 0.1, "gamma": 1.0},
      "optimizer": {"name": "ce"},
      "N": 50, "T": 100, "pop": 32, "generations": 40,
      "master_seed": 1
    }

Optional keys are listed in :data:`OPTIONAL`; anything else is rejected.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .emulator import EmulatorConfig, Mode
from .environments import Family, MabFamily, check_capacity, parse_family
from .l2l import FITNESS_KINDS, Experiment
from .optimizers import OptimizerSpec, parse_optimizer
from .plasticity import AnnRule, PlasticityRule, parse_rule, rule_to_dict

SEED_ENV = "NEURO_L2L_SEED"

REQUIRED = ("family", "rule", "optimizer", "N", "T", "generations", "master_seed")
OPTIONAL = {
    "name": None,
    "emulator": {},
    "mode": "hardware",
    "pop": 32,
    "n_select": None,
    "n_eval": 200,
    "fitness": "raw",
    "shared_tasks": True,
    "random_baseline": True,
    "output_dir": "out",
    "compare": None,
    "curves": None,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class CompareSpec:
    """Several optimizers run on one shared fitness-evaluation budget."""

    optimizers: tuple[OptimizerSpec, ...]
    budget: int
    seeds: tuple[int, ...]
    n_boot: int = 2000

    def to_dict(self) -> dict[str, Any]:
        return {
            "optimizers": [o.to_dict() for o in self.optimizers],
            "budget": self.budget,
            "seeds": list(self.seeds),
            "n_boot": self.n_boot,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    family: Family
    rule: PlasticityRule
    emulator: EmulatorConfig
    optimizer: OptimizerSpec
    N: int
    T: int
    pop: int
    generations: int
    master_seed: int
    mode: Mode = Mode.HARDWARE
    output_dir: str = "out"
    name: str | None = None
    n_select: int | None = None
    n_eval: int = 200
    fitness: str = "raw"
    shared_tasks: bool = True
    random_baseline: bool = True
    compare: CompareSpec | None = None
    curves: Mapping[str, Any] | None = field(default=None)

    def experiment(self) -> Experiment:
        return Experiment(self.family, self.rule, self.emulator, self.T, self.fitness, self.shared_tasks)

    def to_dict(self) -> dict[str, Any]:
        emu = self.emulator.to_dict()
        if self.mode is Mode.IDEAL:
            del emu["bits"]
        return {
            "name": self.name,
            "family": self.family.to_dict(),
            "rule": rule_to_dict(self.rule),
            "emulator": emu,
            "mode": self.mode.value,
            "optimizer": self.optimizer.to_dict(),
            "N": self.N,
            "T": self.T,
            "pop": self.pop,
            "generations": self.generations,
            "master_seed": self.master_seed,
            "n_select": self.n_select,
            "n_eval": self.n_eval,
            "fitness": self.fitness,
            "shared_tasks": self.shared_tasks,
            "random_baseline": self.random_baseline,
            "output_dir": self.output_dir,
            "compare": self.compare.to_dict() if self.compare else None,
            "curves": dict(self.curves) if self.curves else None,
        }

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    def with_(self, **changes: Any) -> "ExperimentConfig":
        cfg = replace(self, **changes)
        validate(cfg)
        return cfg


def config_hash(d: Mapping[str, Any]) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form.

    ``output_dir`` is excluded so moving a run does not change its identity.
    """
    d = {k: v for k, v in d.items() if k != "output_dir"}
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _int(d: Mapping[str, Any], key: str, minimum: int) -> int:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{key}: expected an integer >= {minimum}, got {v!r}")
    return v


def _compare(desc: Mapping[str, Any] | None, master_seed: int) -> CompareSpec | None:
    if desc is None:
        return None
    try:
        opts = tuple(parse_optimizer(o) for o in desc["optimizers"])
    except KeyError:
        raise ConfigError("compare: missing required field 'optimizers'") from None
    except ValueError as exc:
        raise ConfigError(f"compare: {exc}") from None
    if len(opts) < 2:
        raise ConfigError("compare: name at least two optimizers")
    if "budget" not in desc:
        raise ConfigError("compare: missing required field 'budget'")
    budget = desc["budget"]
    own = {o.options.get("budget", budget) for o in opts}
    if own != {budget}:
        raise ConfigError(f"compare: budget mismatch across optimizers {sorted(own)}")
    if isinstance(budget, bool) or not isinstance(budget, int) or budget < 0:
        raise ConfigError("compare: budget must be a non-negative integer")
    opts = tuple(OptimizerSpec(o.name, {k: v for k, v in o.options.items() if k != "budget"}) for o in opts)
    seeds = tuple(int(s) for s in desc.get("seeds", [master_seed]))
    return CompareSpec(opts, budget, seeds, int(desc.get("n_boot", 2000)))


def parse_config(raw: Mapping[str, Any], *, seed_override: int | None = None) -> ExperimentConfig:
    """Validate a config mapping. ``NEURO_L2L_SEED`` beats the file; ``seed_override`` beats both."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a JSON object")
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required field '{key}'")
    unknown = set(raw) - set(REQUIRED) - set(OPTIONAL)
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)}")
    d = {**OPTIONAL, **raw}

    env_seed = os.environ.get(SEED_ENV)
    if seed_override is not None:
        d["master_seed"] = seed_override
    elif env_seed:
        try:
            d["master_seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None

    try:
        mode = Mode(d["mode"])
    except ValueError:
        raise ConfigError(f"mode: expected 'hardware' or 'ideal', got {d['mode']!r}") from None
    try:
        family = parse_family(d["family"])
        rule = parse_rule(d["rule"])
        emulator = EmulatorConfig.from_dict(d["emulator"] or {}, mode)
        optimizer = parse_optimizer(d["optimizer"])
    except (ValueError, TypeError, AttributeError) as exc:
        raise ConfigError(str(exc)) from None
    if d["fitness"] not in FITNESS_KINDS:
        raise ConfigError(f"fitness: expected one of {FITNESS_KINDS}")
    n_select = d["n_select"]
    if n_select is not None:
        n_select = _int(d, "n_select", 1)

    cfg = ExperimentConfig(
        family=family,
        rule=rule,
        emulator=emulator,
        optimizer=optimizer,
        N=_int(d, "N", 1),
        T=_int(d, "T", 1),
        pop=_int(d, "pop", 2),
        generations=_int(d, "generations", 0),
        master_seed=_int(d, "master_seed", 0),
        mode=mode,
        output_dir=str(d["output_dir"]),
        name=d["name"],
        n_select=n_select,
        n_eval=_int(d, "n_eval", 0),
        fitness=d["fitness"],
        shared_tasks=bool(d["shared_tasks"]),
        random_baseline=bool(d["random_baseline"]),
        compare=_compare(d["compare"], d["master_seed"]),
        curves=d["curves"],
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    """Cross-field checks."""
    if isinstance(cfg.rule, AnnRule) and not isinstance(cfg.family, MabFamily):
        raise ConfigError("rule: the ANN rule needs a two-armed bandit family")
    if cfg.mode is not cfg.emulator.mode:
        raise ConfigError("emulator: bits=null needs mode 'ideal'")
    if cfg.mode is Mode.HARDWARE:
        try:
            check_capacity(cfg.family.n_states, cfg.family.n_actions)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if cfg.optimizer.name in ("ce", "es") and int(cfg.optimizer.options.get("pop", cfg.pop)) < 2:
        raise ConfigError("pop: need at least 2 candidates")


def load_config(path: str | Path, *, seed_override: int | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, seed_override=seed_override)
