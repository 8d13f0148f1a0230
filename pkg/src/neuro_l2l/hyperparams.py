"""Hyperparameter vectors and their encodings.

Optimizers work on an encoded vector ``z``. Each dimension decodes to its
natural value through one of four maps:

* ``linear``:    z in [0, 1]  ->  lo + z (hi - lo)
* ``log``:       z in [0, 1]  ->  lo (hi / lo)**z
* ``sigmoid``:   z in [-1, 1] ->  lo + (hi - lo) sigmoid(8 z)
* ``unbounded``: z in R       ->  z  (ANN rule weights)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping

import numpy as np

from .emulator import EmulatorConfig, rescale_period_from_frequency
from .environments import Family, MabFamily, MdpFamily
from .plasticity import N_ANN_PARAMS, AnnRule, PlasticityRule, Td1Rule, TdLambdaRule, TdParams

SIGMOID_GAIN = 8.0
THETA_PRIOR_STD = 0.5


class Encoding(str, Enum):
    LINEAR = "linear"
    LOG = "log"
    SIGMOID = "sigmoid"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lo: float
    hi: float
    encoding: Encoding = Encoding.LINEAR

    def __post_init__(self) -> None:
        if self.encoding is not Encoding.UNBOUNDED and not self.lo < self.hi:
            raise ValueError(f"{self.name}: need lo < hi")
        if self.encoding is Encoding.LOG and self.lo <= 0:
            raise ValueError(f"{self.name}: log encoding needs lo > 0")

    @property
    def z_bounds(self) -> tuple[float, float]:
        if self.encoding is Encoding.UNBOUNDED:
            return -math.inf, math.inf
        if self.encoding is Encoding.SIGMOID:
            return -1.0, 1.0
        return 0.0, 1.0

    @property
    def z_center(self) -> float:
        lo, hi = self.z_bounds
        return 0.0 if math.isinf(lo) else 0.5 * (lo + hi)

    @property
    def z_prior_std(self) -> float:
        lo, hi = self.z_bounds
        return THETA_PRIOR_STD if math.isinf(lo) else (hi - lo) / math.sqrt(12.0)

    def decode(self, z: float) -> float:
        """Natural value of ``z``; ``z`` outside the encoded box decodes as its nearest edge."""
        lo, hi = self.lo, self.hi
        z_lo, z_hi = self.z_bounds
        z = min(max(z, z_lo), z_hi)
        if self.encoding is Encoding.LINEAR:
            return lo + z * (hi - lo)
        if self.encoding is Encoding.LOG:
            return lo * (hi / lo) ** z
        if self.encoding is Encoding.SIGMOID:
            return lo + (hi - lo) / (1.0 + math.exp(-SIGMOID_GAIN * z))
        return float(z)

    def encode(self, value: float) -> float:
        lo, hi = self.lo, self.hi
        if self.encoding is Encoding.LINEAR:
            return (value - lo) / (hi - lo)
        if self.encoding is Encoding.LOG:
            return math.log(value / lo) / math.log(hi / lo)
        if self.encoding is Encoding.SIGMOID:
            y = (value - lo) / (hi - lo)
            y = min(max(y, 1e-12), 1.0 - 1e-12)
            return min(max(math.log(y / (1.0 - y)) / SIGMOID_GAIN, -1.0), 1.0)
        return float(value)


@dataclass(frozen=True)
class HyperSpace:
    specs: tuple[ParamSpec, ...]

    @property
    def dim(self) -> int:
        return len(self.specs)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    @property
    def z_lo(self) -> np.ndarray:
        return np.array([s.z_bounds[0] for s in self.specs])

    @property
    def z_hi(self) -> np.ndarray:
        return np.array([s.z_bounds[1] for s in self.specs])

    @property
    def z_center(self) -> np.ndarray:
        return np.array([s.z_center for s in self.specs])

    @property
    def z_prior_std(self) -> np.ndarray:
        return np.array([s.z_prior_std for s in self.specs])

    def clip(self, z: np.ndarray) -> np.ndarray:
        return np.clip(z, self.z_lo, self.z_hi)

    def sample_prior(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Uniform over the encoded box; N(0, 0.5^2) for unbounded dimensions."""
        shape = (self.dim,) if n is None else (n, self.dim)
        lo, hi = self.z_lo, self.z_hi
        bounded = np.isfinite(lo)
        u = rng.random(shape)
        g = rng.standard_normal(shape) * THETA_PRIOR_STD
        return np.where(bounded, np.where(bounded, lo, 0.0) + u * np.where(bounded, hi - lo, 0.0), g)

    def decode(self, z: np.ndarray) -> "HyperParams":
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} encoded values, got shape {z.shape}")
        return HyperParams(self, z.copy())

    def from_values(self, values: Mapping[str, float] | Iterable[float]) -> "HyperParams":
        if isinstance(values, Mapping):
            missing = set(self.names) - set(values)
            if missing:
                raise ValueError(f"missing hyperparameters {sorted(missing)}")
            vals = [values[n] for n in self.names]
        else:
            vals = list(values)
        if len(vals) != self.dim:
            raise ValueError(f"expected {self.dim} values, got {len(vals)}")
        return self.decode(np.array([s.encode(float(v)) for s, v in zip(self.specs, vals)]))


@dataclass(frozen=True)
class HyperParams:
    """A point of a :class:`HyperSpace`, stored encoded."""

    space: HyperSpace
    z: np.ndarray = field(repr=False)

    @property
    def names(self) -> list[str]:
        return self.space.names

    @property
    def values(self) -> np.ndarray:
        return np.array([s.decode(float(x)) for s, x in zip(self.space.specs, self.z)])

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return [(s.lo, s.hi) for s in self.space.specs]

    @property
    def encoding(self) -> list[Encoding]:
        return [s.encoding for s in self.space.specs]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))

    def __getitem__(self, name: str) -> float:
        return self.as_dict()[name]


# -- experiment spaces ---------------------------------------------------------


def _p(name, lo, hi, enc):
    return ParamSpec(name, lo, hi, Encoding(enc))


ALPHA = _p("alpha", 1e-3, 1.0, "log")
XI = _p("xi", 0.0, 63.0, "linear")
ZETA = _p("zeta", 0.0, 63.0, "linear")


def space_for(family: Family, rule: PlasticityRule, T: int) -> HyperSpace:
    """The optimized hyperparameters of an (family, rule) experiment."""
    if isinstance(rule, AnnRule):
        if not isinstance(family, MabFamily):
            raise ValueError("the ANN rule is only defined for two-armed bandits")
        theta = tuple(ParamSpec(f"theta_{k:02d}", 0.0, 0.0, Encoding.UNBOUNDED) for k in range(N_ANN_PARAMS))
        return HyperSpace(theta + (XI, ZETA))
    lam = (_p("lambda", 0.0, 1.0, "sigmoid"),) if isinstance(rule, TdLambdaRule) else ()
    if isinstance(family, MdpFamily):
        specs = (
            ALPHA,
            _p("gamma", 0.0, 1.0, "sigmoid"),
            *lam,
            XI,
            ZETA,
            _p("f_rescale", 1.0 / max(T, 2), 1.0, "log"),
            _p("w_max", 32.0, 63.0, "linear"),
            _p("w_min", 0.0, 31.0, "linear"),
        )
        return HyperSpace(specs)
    return HyperSpace((replace(ALPHA, name="alpha0"), _p("alpha_decay", 0.0, 1.0, "sigmoid"), *lam, XI, ZETA))


def realize(
    hp: HyperParams, rule: PlasticityRule, emulator: EmulatorConfig, T: int
) -> tuple[PlasticityRule, EmulatorConfig]:
    """Apply ``hp`` on top of the fixed parts of ``rule`` and ``emulator``."""
    v = hp.as_dict()
    emu = {k: v[k] for k in ("xi", "zeta") if k in v}
    if "f_rescale" in v:
        emu["rescale_period"] = rescale_period_from_frequency(v["f_rescale"], T)
    if "w_max" in v:
        emu["w_max"] = v["w_max"]
        emu["w_min"] = v["w_min"]
    cfg = replace(emulator, **emu)
    if isinstance(rule, AnnRule):
        return AnnRule(hp.z[:N_ANN_PARAMS], rule.out_scale, rule.squash), cfg
    p = rule.params
    params = TdParams(
        alpha0=v.get("alpha0", v.get("alpha", p.alpha0)),
        alpha_decay=max(v.get("alpha_decay", p.alpha_decay), 1e-12),
        gamma=v.get("gamma", p.gamma),
        lam=v.get("lambda", p.lam),
    )
    return type(rule)(params), cfg


def hyperparams_to_dict(hp: HyperParams) -> dict[str, Any]:
    return {
        "names": hp.names,
        "values": hp.values.tolist(),
        "encoded": hp.z.tolist(),
        "bounds": [list(b) for b in hp.bounds],
        "encoding": [e.value for e in hp.encoding],
    }


def hyperparams_from_dict(space: HyperSpace, d: Mapping[str, Any]) -> HyperParams:
    if list(d.get("names", [])) != space.names:
        raise ValueError("stored hyperparameter names do not match the experiment")
    if "encoded" in d:
        return space.decode(np.asarray(d["encoded"], dtype=float))
    return space.from_values(d["values"])
