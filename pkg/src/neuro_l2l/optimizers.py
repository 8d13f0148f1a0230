"""Gradient-free outer-loop optimizers, all maximizing.

Each optimizer follows an ask/tell protocol over encoded hyperparameter
vectors: ``ask()`` returns a ``(n, dim)`` array of candidates to evaluate and
``tell(fitness)`` consumes their fitness values. ``incumbents()`` lists the
points the optimizer currently believes in, which the driver re-evaluates on
held-out tasks to pick the final answer. The pure ``*_step`` functions carry
the update rules and are usable on their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

import numpy as np

EvalFn = Callable[[np.ndarray], np.ndarray]


def _clip(z: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.clip(z, lo, hi)


# -- cross-entropy -------------------------------------------------------------


@dataclass(frozen=True)
class CeState:
    mean: np.ndarray
    cov: np.ndarray
    elite_frac: float = 0.25
    eps: float = 1e-6
    diagonal: bool = False
    smoothing: float = 1.0  # weight of the new fit; 1 = plain refit
    min_std: float = 0.0  # per-dimension floor on the sampling std
    generation: int = 0


def ce_fit(elites: np.ndarray, eps: float = 1e-6, diagonal: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian maximum-likelihood fit to the elite set, regularized by ``eps * I``."""
    elites = np.atleast_2d(np.asarray(elites, dtype=float))
    if elites.shape[0] < 2:
        raise ValueError("the cross-entropy update needs at least 2 elites")
    mean = elites.mean(axis=0)
    centered = elites - mean
    cov = centered.T @ centered / elites.shape[0]
    if diagonal:
        cov = np.diag(np.diag(cov))
    return mean, cov + eps * np.eye(mean.size)


def n_elites(pop: int, elite_frac: float) -> int:
    return int(math.ceil(elite_frac * pop))


def ce_step(state: CeState, candidates: np.ndarray, fitness: np.ndarray) -> CeState:
    """Refit the sampling distribution to the top ``ceil(elite_frac * pop)`` candidates."""
    candidates = np.asarray(candidates, dtype=float)
    fitness = np.asarray(fitness, dtype=float)
    k = n_elites(len(fitness), state.elite_frac)
    if k < 2:
        raise ValueError(f"population of {len(fitness)} gives {k} elite(s); need at least 2")
    # stable sort on -fitness: ties keep candidate order
    order = np.argsort(-fitness, kind="stable")[:k]
    mean, cov = ce_fit(candidates[order], state.eps, state.diagonal)
    s = state.smoothing
    if s < 1.0:
        mean = s * mean + (1.0 - s) * state.mean
        cov = s * cov + (1.0 - s) * state.cov
    if state.min_std > 0:
        var = np.diag(cov)
        cov = cov + np.diag(np.maximum(state.min_std**2 - var, 0.0))
    return replace(state, mean=mean, cov=cov, generation=state.generation + 1)


def ce_sample(state: CeState, n: int, rng: np.random.Generator, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    if state.diagonal:
        z = state.mean + rng.standard_normal((n, state.mean.size)) * np.sqrt(np.diag(state.cov))
    else:
        chol = np.linalg.cholesky(state.cov)
        z = state.mean + rng.standard_normal((n, state.mean.size)) @ chol.T
    return _clip(z, lo, hi)


class CrossEntropy:
    name = "ce"

    def __init__(self, lo, hi, mean0, std0, rng, pop=32, elite_frac=0.25, eps=1e-6, diagonal=False, smoothing=1.0,
                 min_std=0.0):
        if pop * elite_frac < 2:
            raise ValueError("population size must be at least 2 / elite_frac")
        self.lo, self.hi, self.rng, self.pop = lo, hi, rng, pop
        cov = np.diag(np.asarray(std0, dtype=float) ** 2)
        self.state = CeState(np.asarray(mean0, float), cov, elite_frac, eps, diagonal, smoothing, min_std)
        self._pending: np.ndarray | None = None
        self._elites: np.ndarray = np.empty((0, len(lo)))

    @property
    def evals_per_generation(self) -> int:
        return self.pop

    def ask(self) -> np.ndarray:
        self._pending = ce_sample(self.state, self.pop, self.rng, self.lo, self.hi)
        return self._pending

    def tell(self, fitness: np.ndarray) -> None:
        k = n_elites(self.pop, self.state.elite_frac)
        self._elites = self._pending[np.argsort(-np.asarray(fitness), kind="stable")[:k]]
        self.state = ce_step(self.state, self._pending, fitness)

    def incumbents(self, k: int = 4) -> np.ndarray:
        mean = _clip(self.state.mean, self.lo, self.hi)[None]
        return np.vstack([mean, self._elites[: k - 1]])


# -- evolution strategies ------------------------------------------------------


@dataclass(frozen=True)
class EsState:
    base: np.ndarray
    sigma: float = 0.1
    learn_rate: float = 0.05
    generation: int = 0


def centered_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks scaled to [-0.5, 0.5]; ties share their average rank."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two fitness values")
    order = np.argsort(x, kind="stable")
    ranks = np.empty(n)
    ranks[order] = np.arange(n, dtype=float)
    # average ranks of tied values so equal fitness gives equal weight
    _, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    sums = np.bincount(inv, weights=ranks)
    ranks = (sums / counts)[inv]
    return ranks / (n - 1) - 0.5


def mirrored_noise(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    if n < 2 or n % 2:
        raise ValueError("antithetic sampling needs an even number n >= 2")
    half = rng.standard_normal((n // 2, dim))
    return np.concatenate([half, -half])


def es_step(state: EsState, perturbations: np.ndarray, fitnesses: np.ndarray) -> EsState:
    """``base += lr / (n sigma) * sum_i F(f_i) eps_i`` with centered-rank ``F``."""
    eps = np.asarray(perturbations, dtype=float)
    n = eps.shape[0]
    if n < 2:
        raise ValueError("need at least two perturbations")
    weights = centered_ranks(fitnesses)
    step = state.learn_rate / (n * state.sigma) * (weights @ eps)
    return replace(state, base=state.base + step, generation=state.generation + 1)


class EvolutionStrategy:
    name = "es"

    def __init__(self, lo, hi, base0, rng, pop=32, sigma=0.1, learn_rate=0.05):
        self.lo, self.hi, self.rng, self.pop = lo, hi, rng, pop
        self.state = EsState(np.asarray(base0, float), sigma, learn_rate)
        if pop < 2 or pop % 2:
            raise ValueError("antithetic sampling needs an even population >= 2")
        self._eps: np.ndarray | None = None

    @property
    def evals_per_generation(self) -> int:
        return self.pop

    def ask(self) -> np.ndarray:
        self._eps = mirrored_noise(self.rng, self.pop, self.state.base.size)
        return _clip(self.state.base + self.state.sigma * self._eps, self.lo, self.hi)

    def tell(self, fitness: np.ndarray) -> None:
        new = es_step(self.state, self._eps, fitness)
        self.state = replace(new, base=_clip(new.base, self.lo, self.hi))

    def incumbents(self, k: int = 1) -> np.ndarray:
        return self.state.base[None].copy()


# -- simulated annealing -------------------------------------------------------


def sa_acceptance(f_new: float, f_old: float, temperature: float) -> float:
    """Metropolis acceptance for maximization: ``min(1, exp((f_new - f_old) / T))``."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    gain = f_new - f_old
    return 1.0 if gain >= 0 else math.exp(gain / temperature)


def linear_temperature(t0: float, t_min: float, generation: int, generations: int) -> float:
    if generations <= 1:
        return t0
    frac = min(generation / (generations - 1), 1.0)
    return max(t0 + frac * (t_min - t0), t_min)


@dataclass(frozen=True)
class SaState:
    chains: np.ndarray  # (K, dim)
    fitness: np.ndarray  # (K,), NaN before the first evaluation
    temperature: float
    t0: float = 0.1
    t_min: float = 1e-3
    step_scale: float = 0.2
    generation: int = 0
    generations: int = 1


def sa_step(
    state: SaState,
    rng: np.random.Generator,
    eval_fn: EvalFn,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
    width: np.ndarray | None = None,
) -> SaState:
    """Perturb every chain, evaluate, accept or reject, then cool linearly."""
    fit = state.fitness
    if np.any(np.isnan(fit)):
        fit = np.asarray(eval_fn(state.chains), dtype=float)
        state = replace(state, fitness=fit)
    proposals = sa_propose(state, rng, lo, hi, width)
    return sa_accept(state, proposals, np.asarray(eval_fn(proposals), dtype=float), rng)


def sa_propose(state: SaState, rng, lo=None, hi=None, width=None) -> np.ndarray:
    k, dim = state.chains.shape
    width = np.ones(dim) if width is None else width
    scale = state.step_scale * state.temperature / state.t0
    z = state.chains + rng.standard_normal((k, dim)) * scale * width
    return z if lo is None else _clip(z, lo, hi)


def sa_accept(state: SaState, proposals: np.ndarray, f_new: np.ndarray, rng: np.random.Generator) -> SaState:
    u = rng.random(len(f_new))
    chains = state.chains.copy()
    fit = state.fitness.copy()
    for i, (fn, fo) in enumerate(zip(f_new, fit)):
        if u[i] < sa_acceptance(fn, fo, state.temperature):
            chains[i], fit[i] = proposals[i], fn
    g = state.generation + 1
    temp = linear_temperature(state.t0, state.t_min, g, state.generations)
    return replace(state, chains=chains, fitness=fit, temperature=temp, generation=g)


class SimulatedAnnealing:
    """Independent annealing chains sharing one linear cooling schedule.

    Chain 0 starts at the center of the space, the others at prior draws.
    The first generation only evaluates the starting points.
    """

    name = "sa"

    def __init__(self, lo, hi, start, prior, width, rng, chains=8, t0=0.1, t_min=1e-3, step_scale=0.2, generations=1):
        self.lo, self.hi, self.width, self.rng = lo, hi, width, rng
        starts = np.vstack([np.asarray(start, float)[None], prior[: chains - 1]])
        self.state = SaState(
            starts, np.full(chains, np.nan), t0, t0, t_min, step_scale, 0, max(generations - 1, 1)
        )
        self._pending: np.ndarray | None = None

    @property
    def evals_per_generation(self) -> int:
        return self.state.chains.shape[0]

    def ask(self) -> np.ndarray:
        if np.any(np.isnan(self.state.fitness)):
            self._pending = self.state.chains.copy()
        else:
            self._pending = sa_propose(self.state, self.rng, self.lo, self.hi, self.width)
        return self._pending

    def tell(self, fitness: np.ndarray) -> None:
        fitness = np.asarray(fitness, dtype=float)
        if np.any(np.isnan(self.state.fitness)):
            self.state = replace(self.state, fitness=fitness)
        else:
            self.state = sa_accept(self.state, self._pending, fitness, self.rng)

    def incumbents(self, k: int | None = None) -> np.ndarray:
        return self.state.chains.copy()


# -- numerical gradient descent ------------------------------------------------


@dataclass(frozen=True)
class GdState:
    theta: np.ndarray
    probe_eps: float = 0.01
    step_size: float = 0.1
    generation: int = 0


def central_difference_probes(theta: np.ndarray, eps: float) -> np.ndarray:
    """``2 * dim`` probes: ``theta + eps e_k`` for every k, then ``theta - eps e_k``."""
    d = theta.size
    return np.vstack([theta + eps * np.eye(d), theta - eps * np.eye(d)])


def random_direction_probes(theta: np.ndarray, eps: float, n_dirs: int, rng) -> tuple[np.ndarray, np.ndarray]:
    u = rng.standard_normal((n_dirs, theta.size))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return np.vstack([theta + eps * u, theta - eps * u]), u


def gradient_from_probes(f: np.ndarray, eps: float, directions: np.ndarray | None = None) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    k = f.size // 2
    diff = (f[:k] - f[k:]) / (2.0 * eps)
    if directions is None:
        return diff
    # projected differences, rescaled so E[g] equals the gradient
    return directions.shape[1] / k * (diff @ directions)


def gd_step(
    state: GdState,
    eval_fn: EvalFn,
    rng: np.random.Generator | None = None,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
    n_dirs: int | None = None,
) -> GdState:
    """One ascent step on a central-difference gradient estimate."""
    if state.probe_eps <= 0:
        raise ValueError("probe_eps must be positive")
    if n_dirs:
        probes, dirs = random_direction_probes(state.theta, state.probe_eps, n_dirs, rng)
    else:
        probes, dirs = central_difference_probes(state.theta, state.probe_eps), None
    grad = gradient_from_probes(np.asarray(eval_fn(probes)), state.probe_eps, dirs)
    theta = state.theta + state.step_size * grad
    if lo is not None:
        theta = _clip(theta, lo, hi)
    return replace(state, theta=theta, generation=state.generation + 1)


class GradientDescent:
    name = "gd"

    def __init__(self, lo, hi, start, rng, probe_eps=0.01, step_size=0.1, n_dirs=None):
        self.lo, self.hi, self.rng, self.n_dirs = lo, hi, rng, n_dirs
        self.state = GdState(np.asarray(start, float), probe_eps, step_size)
        self._dirs: np.ndarray | None = None

    @property
    def evals_per_generation(self) -> int:
        return 2 * (self.n_dirs or self.state.theta.size)

    def ask(self) -> np.ndarray:
        # probes may step just outside the box; decoding handles any real z
        if self.n_dirs:
            probes, self._dirs = random_direction_probes(self.state.theta, self.state.probe_eps, self.n_dirs, self.rng)
            return probes
        return central_difference_probes(self.state.theta, self.state.probe_eps)

    def tell(self, fitness: np.ndarray) -> None:
        grad = gradient_from_probes(fitness, self.state.probe_eps, self._dirs)
        theta = _clip(self.state.theta + self.state.step_size * grad, self.lo, self.hi)
        self.state = replace(self.state, theta=theta, generation=self.state.generation + 1)

    def incumbents(self, k: int = 1) -> np.ndarray:
        return self.state.theta[None].copy()


# -- construction --------------------------------------------------------------

OPTIMIZERS = ("ce", "es", "sa", "gd")


@dataclass(frozen=True)
class OptimizerSpec:
    name: str
    options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in OPTIMIZERS:
            raise ValueError(f"optimizer: unknown optimizer {self.name!r} (expected one of {OPTIMIZERS})")

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, **dict(self.options)}


def parse_optimizer(desc: Mapping[str, Any] | str) -> OptimizerSpec:
    if isinstance(desc, str):
        return OptimizerSpec(desc)
    d = dict(desc)
    name = d.pop("name", None)
    if name is None:
        raise ValueError("optimizer: missing field 'name'")
    return OptimizerSpec(name, d)


def evals_per_generation(spec: OptimizerSpec, dim: int, pop: int) -> int:
    o = spec.options
    if spec.name in ("ce", "es"):
        return int(o.get("pop", pop))
    if spec.name == "sa":
        return int(o.get("chains", 8))
    return 2 * int(o.get("n_dirs") or dim)


def build_optimizer(spec: OptimizerSpec, space, rng: np.random.Generator, pop: int, generations: int):
    """Instantiate ``spec`` on an encoded :class:`~neuro_l2l.hyperparams.HyperSpace`."""
    o = dict(spec.options)
    lo, hi = space.z_lo, space.z_hi
    center = space.z_center
    if spec.name == "ce":
        return CrossEntropy(
            lo, hi, center, space.z_prior_std, rng,
            pop=int(o.get("pop", pop)),
            elite_frac=float(o.get("elite_frac", 0.25)),
            eps=float(o.get("eps", 1e-6)),
            diagonal=bool(o.get("diagonal", space.dim > 16)),
            smoothing=float(o.get("smoothing", 1.0)),
            min_std=float(o.get("min_std", 0.1)),
        )
    if spec.name == "es":
        return EvolutionStrategy(
            lo, hi, center, rng,
            pop=int(o.get("pop", pop)),
            sigma=float(o.get("sigma", 0.1)),
            learn_rate=float(o.get("learn_rate", 0.05)),
        )
    if spec.name == "sa":
        chains = int(o.get("chains", 8))
        width = np.where(np.isfinite(hi - lo), hi - lo, 2.0 * space.z_prior_std)
        return SimulatedAnnealing(
            lo, hi, center, space.sample_prior(rng, chains), width, rng,
            chains=chains,
            t0=float(o.get("t0", 0.02)),
            t_min=float(o.get("t_min", 1e-3)),
            step_scale=float(o.get("step_scale", 0.2)),
            generations=generations,
        )
    return GradientDescent(
        lo, hi, center, rng,
        probe_eps=float(o.get("probe_eps", 0.01)),
        step_size=float(o.get("step_size", 0.1)),
        n_dirs=o.get("n_dirs"),
    )
