"""Learning-to-learn driver.

Every task a candidate sees is generated from
``SeedSequence([master_seed, tag, generation, candidate_id, task_idx])``, so a
fitness value is a pure function of its arguments and parallel scheduling
cannot change results.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .baselines import mab_reference_curves, mab_references, mdp_reference_curves, mdp_references
from .emulator import EmulatorConfig, draw_trial_inputs, run_trial
from .environments import Family, Mab, MabFamily, Mdp, Task, batch_normalized_score
from .hyperparams import HyperParams, HyperSpace, realize, space_for
from .optimizers import OptimizerSpec, build_optimizer
from .plasticity import PlasticityRule

# stream tags
TAG_TRAIN = 0
TAG_SELECT = 1
TAG_EVAL = 2
TAG_OPTIMIZER = 3
TAG_RANDOM_THETA = 4
TAG_BASELINE = 5

FITNESS_KINDS = ("raw", "normalized")


@dataclass(frozen=True)
class Experiment:
    """The inner loop: what is learned, by which rule, on which emulator."""

    family: Family
    rule: PlasticityRule
    emulator: EmulatorConfig
    T: int
    fitness: str = "raw"
    shared_tasks: bool = False

    def __post_init__(self) -> None:
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if self.fitness not in FITNESS_KINDS:
            raise ValueError(f"fitness must be one of {FITNESS_KINDS}")

    @property
    def space(self) -> HyperSpace:
        return space_for(self.family, self.rule, self.T)

    @property
    def gamma(self) -> float:
        return self.family.eval_gamma

    @property
    def return_scale(self) -> float:
        """Largest attainable discounted return; raw fitness is divided by it."""
        g = self.gamma
        if self.T == 0:
            return 1.0
        return float(self.T) if g == 1.0 else (1.0 - g**self.T) / (1.0 - g)


def task_rng(master_seed: int, tag: int, generation: int, candidate_id: int, task_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, tag, generation, candidate_id, task_idx]))


def _is_degenerate(task: Task) -> bool:
    if isinstance(task, Mab):
        return bool(task.p_arm.max() == task.p_arm.min())
    return False


def draw_task(family: Family, rng: np.random.Generator) -> Task:
    """Sample from ``family``; bandits with equal arms are redrawn (they cannot be normalized)."""
    task = family.sample(rng)
    while _is_degenerate(task):
        task = family.sample(rng)
    return task


@dataclass(frozen=True)
class TaskResult:
    raw: float  # discounted return, sum of gamma^t r(t)
    random_ref: float
    optimal_ref: float

    @property
    def normalized(self) -> float:
        d = self.optimal_ref - self.random_ref
        return (self.raw - self.random_ref) / d if d != 0 else 0.0


def run_task(exp: Experiment, z: np.ndarray, rng: np.random.Generator, curves: bool = False):
    """Sample one task, let the agent with encoded hyperparameters ``z`` learn it.

    Returns a :class:`TaskResult`; with ``curves=True`` also the per-step
    discounted rewards and the per-step random/optimal reference curves.
    """
    rule, cfg = realize(exp.space.decode(z), exp.rule, exp.emulator, exp.T)
    task = draw_task(exp.family, rng)
    inputs = draw_trial_inputs(task, cfg, exp.T, rng)
    traj = run_trial(task, rule, cfg, exp.T, inputs=inputs)
    disc = exp.gamma ** np.arange(exp.T)
    raw = float(disc @ traj.rewards)
    if isinstance(task, Mdp):
        if curves:
            rnd_c, opt_c = mdp_reference_curves(task, inputs.s0, exp.T, exp.gamma)
            rnd, opt = float(rnd_c.sum()), float(opt_c.sum())
        else:
            rnd, opt = mdp_references(task, inputs.s0, exp.T, exp.gamma)
    else:
        rnd, opt = mab_references(task, exp.T)
        if curves:
            rnd_c, opt_c = mab_reference_curves(task, exp.T)
    res = TaskResult(raw, rnd, opt)
    if curves:
        return res, disc * traj.rewards, rnd_c, opt_c
    return res


@dataclass(frozen=True)
class FitnessRecord:
    candidate_id: int
    theta: HyperParams
    per_task_scores: np.ndarray
    mean_fitness: float
    generation: int
    raw: np.ndarray = field(repr=False, default=None)
    random_ref: np.ndarray = field(repr=False, default=None)
    optimal_ref: np.ndarray = field(repr=False, default=None)

    @property
    def normalized_score(self) -> float:
        """Batch normalized score (ratio of means over the batch)."""
        return batch_normalized_score(self.raw, self.random_ref, self.optimal_ref)


def _record(exp: Experiment, z, results: Sequence[TaskResult], generation: int, candidate_id: int) -> FitnessRecord:
    raw = np.array([r.raw for r in results])
    rnd = np.array([r.random_ref for r in results])
    opt = np.array([r.optimal_ref for r in results])
    if exp.fitness == "raw":
        scores = raw / exp.return_scale
    else:
        scores = np.array([r.normalized for r in results])
    mean = float(scores.mean()) if scores.size else 0.0
    return FitnessRecord(candidate_id, exp.space.decode(z), scores, mean, generation, raw, rnd, opt)


def evaluate_fitness(
    theta: HyperParams | np.ndarray,
    exp: Experiment,
    N: int,
    master_seed: int,
    generation: int,
    candidate_id: int,
    tag: int = TAG_TRAIN,
) -> FitnessRecord:
    """Mean fitness of ``theta`` over ``N`` tasks drawn for this (generation, candidate)."""
    z = theta.z if isinstance(theta, HyperParams) else np.asarray(theta, dtype=float)
    seed_cand = 0 if exp.shared_tasks else candidate_id
    results = [run_task(exp, z, task_rng(master_seed, tag, generation, seed_cand, i)) for i in range(N)]
    return _record(exp, z, results, generation, candidate_id)


def _job(args) -> FitnessRecord:
    return evaluate_fitness(*args)


class Evaluator:
    """Evaluates candidate batches serially or on a process pool."""

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers
        self._pool: ProcessPoolExecutor | None = None

    def __enter__(self) -> "Evaluator":
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def map(self, zs: np.ndarray, exp: Experiment, N: int, master_seed: int, generation: int, tag: int,
            ids: Sequence[int] | None = None) -> list[FitnessRecord]:
        ids = list(range(len(zs))) if ids is None else list(ids)
        jobs = [(z, exp, N, master_seed, generation, cid, tag) for z, cid in zip(zs, ids)]
        if self._pool is None:
            return [_job(j) for j in jobs]
        return list(self._pool.map(_job, jobs))


# -- driver --------------------------------------------------------------------


@dataclass
class L2LResult:
    best: HyperParams
    history: list[FitnessRecord]
    selection: list[FitnessRecord]
    evaluation: FitnessRecord | None


def run_l2l(
    exp: Experiment,
    optimizer: OptimizerSpec,
    *,
    N: int,
    generations: int,
    master_seed: int,
    pop: int = 32,
    n_select: int | None = None,
    n_eval: int = 200,
    workers: int = 1,
    progress: Callable[[int, list[FitnessRecord]], None] | None = None,
) -> L2LResult:
    """Optimize ``exp``'s hyperparameters with ``optimizer`` for ``generations`` generations.

    The final answer is the incumbent (CE mean and elites, ES base, SA chains,
    GD point) with the best mean fitness on a held-out selection batch shared
    by all incumbents. It is then scored once more on a separate evaluation
    batch of ``n_eval`` tasks.
    """
    if generations < 0:
        raise ValueError("generations must be >= 0")
    space = exp.space
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, TAG_OPTIMIZER]))
    opt = build_optimizer(optimizer, space, rng, pop, generations)
    history: list[FitnessRecord] = []
    shared = Experiment(exp.family, exp.rule, exp.emulator, exp.T, exp.fitness, shared_tasks=True)
    with Evaluator(workers) as ev:
        if generations == 0:
            best = space.decode(space.z_center)
            evaluation = ev.map(best.z[None], shared, n_eval, master_seed, 0, TAG_EVAL)[0] if n_eval else None
            return L2LResult(best, [], [], evaluation)
        for g in range(generations):
            zs = opt.ask()
            records = ev.map(zs, exp, N, master_seed, g, TAG_TRAIN)
            opt.tell(np.array([r.mean_fitness for r in records]))
            history.extend(records)
            if progress is not None:
                progress(g, records)
        incumbents = opt.incumbents()
        selection = ev.map(incumbents, shared, n_select or N, master_seed, 0, TAG_SELECT)
        best_i = int(np.argmax([r.mean_fitness for r in selection]))
        best = space.decode(incumbents[best_i])
        evaluation = ev.map(best.z[None], shared, n_eval, master_seed, 0, TAG_EVAL)[0] if n_eval else None
    return L2LResult(best, history, selection, evaluation)


def evaluate_theta(exp: Experiment, theta: HyperParams | np.ndarray, n_tasks: int, seed: int,
                   tag: int = TAG_EVAL) -> FitnessRecord:
    """Score a fixed Θ on the ``n_tasks`` evaluation tasks of ``seed`` (shared across Θs)."""
    shared = Experiment(exp.family, exp.rule, exp.emulator, exp.T, exp.fitness, shared_tasks=True)
    return evaluate_fitness(theta, shared, n_tasks, seed, 0, 0, tag)


def random_theta_baseline(exp: Experiment, n_tasks: int, seed: int, tag: int = TAG_EVAL) -> FitnessRecord:
    """Each evaluation task is learned with its own Θ drawn from the prior.

    Uses the same task seeds as :func:`evaluate_theta`, so the two are paired.
    """
    space = exp.space
    draws = space.sample_prior(np.random.default_rng(np.random.SeedSequence([seed, TAG_RANDOM_THETA])), n_tasks)
    results = [run_task(exp, draws[i], task_rng(seed, tag, 0, 0, i)) for i in range(n_tasks)]
    return _record(exp, space.z_center, results, 0, -1)


def bootstrap_ci(x: np.ndarray, stat: Callable[[np.ndarray], float], n_boot: int = 2000, seed: int = 0,
                 level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap over rows of ``x``."""
    x = np.asarray(x)
    rng = np.random.default_rng(seed)
    n = len(x)
    stats = np.array([stat(x[rng.integers(0, n, n)]) for _ in range(n_boot)])
    a = (1.0 - level) / 2.0
    return float(np.quantile(stats, a)), float(np.quantile(stats, 1.0 - a))


def sem(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
