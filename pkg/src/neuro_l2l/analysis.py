"""Post-hoc analysis of evolved plasticity rules and of transfer experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .environments import batch_normalized_score
from .l2l import Experiment, bootstrap_ci, evaluate_theta
from .hyperparams import HyperParams
from .plasticity import ANN_INPUT_NAMES, AnnRule, ann_forward

Sampler = Callable[[np.random.Generator, int], np.ndarray]

MIN_SAMPLES = 1000


def _uniform(rng, n):
    return rng.random(n)


def _bernoulli_half(rng, n):
    return (rng.random(n) < 0.5).astype(float)


@dataclass(frozen=True)
class InputDistributions:
    """Independent marginals of the five rule inputs."""

    samplers: Mapping[str, Sampler] = field(
        default_factory=lambda: {
            "t": _uniform,
            "action_flag": _bernoulli_half,
            "reward": _bernoulli_half,
            "w_self": _uniform,
            "w_other": _uniform,
        }
    )

    def __post_init__(self) -> None:
        missing = set(ANN_INPUT_NAMES) - set(self.samplers)
        if missing:
            raise ValueError(f"input distributions missing {sorted(missing)}")

    def sample(self, name: str, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray(self.samplers[name](rng, n), dtype=float)

    @classmethod
    def from_samples(cls, rows: np.ndarray) -> "InputDistributions":
        """Empirical marginals of recorded ``(n, 5)`` input rows, resampled independently."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(ANN_INPUT_NAMES):
            raise ValueError("expected rows of five rule inputs")

        def column(k):
            return lambda rng, n: rows[rng.integers(0, len(rows), n), k]

        return cls({name: column(k) for k, name in enumerate(ANN_INPUT_NAMES)})


@dataclass(frozen=True)
class ImportanceReport:
    fractions: dict[str, float]
    residual_interactions: float
    n_samples: int
    total_variance: float
    degenerate: bool = False


def input_importance(
    rule: AnnRule,
    rng: np.random.Generator,
    n_samples: int = 65536,
    distributions: InputDistributions | None = None,
    n_inner: int = 64,
) -> ImportanceReport:
    """First-order Sobol fractions ``Var(E[f | x_k]) / Var(f)`` of the rule output.

    Double-loop Monte Carlo: for each input, ``n_samples / n_inner`` outer draws
    of ``x_k``, each averaged over ``n_inner`` draws of the other inputs. The
    outer variance is corrected for the inner sampling noise.
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_SAMPLES}")
    if n_inner < 2:
        raise ValueError("n_inner must be >= 2")
    dists = distributions or InputDistributions()
    n_outer = max(n_samples // n_inner, 2)

    def draw(n):
        return np.column_stack([dists.sample(name, rng, n) for name in ANN_INPUT_NAMES])

    total = float(np.var(ann_forward(draw(n_samples), rule), ddof=1))
    if not total > 1e-24:
        zeros = {name: 0.0 for name in ANN_INPUT_NAMES}
        return ImportanceReport(zeros, 0.0, n_samples, 0.0, degenerate=True)

    fractions = {}
    for k, name in enumerate(ANN_INPUT_NAMES):
        x = draw(n_outer * n_inner).reshape(n_outer, n_inner, len(ANN_INPUT_NAMES))
        x[:, :, k] = dists.sample(name, rng, n_outer)[:, None]
        f = ann_forward(x, rule)
        inner_mean = f.mean(axis=1)
        inner_var = f.var(axis=1, ddof=1)
        v = np.var(inner_mean, ddof=1) - inner_var.mean() / n_inner
        fractions[name] = float(max(v, 0.0) / total)
    residual = 1.0 - sum(fractions.values())
    return ImportanceReport(fractions, residual, n_samples, total)


@dataclass(frozen=True)
class UpdateCurve:
    case: tuple[int, int]  # (action_flag, reward)
    grid: np.ndarray
    mean_dw: np.ndarray
    band: np.ndarray  # (len(grid), 2): 10th and 90th percentile

    @property
    def label(self) -> str:
        return f"{self.case[0]}{self.case[1]}"


CASES = ((0, 0), (0, 1), (1, 0), (1, 1))


def update_curves(
    rule: AnnRule,
    rng: np.random.Generator,
    grid_size: int = 33,
    n_marginal: int = 2000,
    distributions: InputDistributions | None = None,
) -> list[UpdateCurve]:
    """Weight update versus ``w_self`` for each (flag, reward) case.

    ``t`` and ``w_other`` are marginalized by sampling; the band is their
    10-90 percentile spread.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    dists = distributions or InputDistributions()
    grid = np.linspace(0.0, 1.0, grid_size)
    t = dists.sample("t", rng, n_marginal)
    w_other = dists.sample("w_other", rng, n_marginal)
    curves = []
    for flag, r in CASES:
        x = np.empty((grid_size, n_marginal, 5))
        x[..., 0] = t
        x[..., 1] = flag
        x[..., 2] = r
        x[..., 3] = grid[:, None]
        x[..., 4] = w_other
        dw = ann_forward(x, rule)
        band = np.column_stack([np.quantile(dw, 0.1, axis=1), np.quantile(dw, 0.9, axis=1)])
        curves.append(UpdateCurve((flag, r), grid, dw.mean(axis=1), band))
    return curves


# -- transfer ------------------------------------------------------------------


@dataclass(frozen=True)
class TransferReport:
    score_structured: float
    score_unstructured: float
    difference: float
    ci: tuple[float, float]
    n_tasks: int

    @property
    def significant(self) -> bool:
        return self.ci[0] > 0 or self.ci[1] < 0

    def rows(self) -> list[list]:
        return [
            ["trained_on", "eval_family", "n_tasks", "mean_normalized_score"],
            ["structured", "structured", self.n_tasks, self.score_structured],
            ["unstructured", "structured", self.n_tasks, self.score_unstructured],
            ["difference", "", self.n_tasks, self.difference],
            ["ci95_low", "", self.n_tasks, self.ci[0]],
            ["ci95_high", "", self.n_tasks, self.ci[1]],
        ]


def _paired_difference(x: np.ndarray) -> float:
    return batch_normalized_score(x[:, 0], x[:, 2], x[:, 3]) - batch_normalized_score(x[:, 1], x[:, 2], x[:, 3])


def transfer_report(
    theta_structured: HyperParams | np.ndarray,
    theta_unstructured: HyperParams | np.ndarray,
    eval_exp: Experiment,
    n_tasks: int,
    seed: int,
    n_boot: int = 2000,
) -> TransferReport:
    """Score both Θs on the same ``n_tasks`` tasks of ``eval_exp`` and bootstrap their gap."""
    zs = [t.z if isinstance(t, HyperParams) else np.asarray(t, float) for t in (theta_structured, theta_unstructured)]
    if zs[0].shape != zs[1].shape or zs[0].shape != (eval_exp.space.dim,):
        raise ValueError("both hyperparameter vectors must match the evaluation experiment")
    a = evaluate_theta(eval_exp, zs[0], n_tasks, seed)
    b = evaluate_theta(eval_exp, zs[1], n_tasks, seed)
    x = np.column_stack([a.raw, b.raw, a.random_ref, a.optimal_ref])
    diff = _paired_difference(x)
    ci = bootstrap_ci(x, _paired_difference, n_boot=n_boot, seed=seed)
    return TransferReport(a.normalized_score, b.normalized_score, diff, ci, n_tasks)


def importance_rows(report: ImportanceReport) -> list[list]:
    rows = [["input", "fraction"]]
    rows += [[k, v] for k, v in report.fractions.items()]
    rows.append(["residual_interactions", report.residual_interactions])
    return rows


def curve_rows(curve: UpdateCurve) -> list[list]:
    rows = [["w_self", "mean_dw", "p10", "p90"]]
    rows += [[g, m, lo, hi] for g, m, (lo, hi) in zip(curve.grid, curve.mean_dw, curve.band)]
    return rows

