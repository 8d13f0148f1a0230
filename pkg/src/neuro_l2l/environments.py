"""Task families: random finite MDPs and two-armed Bernoulli bandits.

Tasks are plain value objects. Anything random takes an explicit
``numpy.random.Generator`` so that a task (and every step taken in it) is a
pure function of its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Union

import numpy as np

CROSSBAR_SIZE = 32


class NotNormalizable(ValueError):
    """Raised when the random and optimal reference returns coincide."""


class CapacityError(ValueError):
    """Raised when a task does not fit onto the 32x32 synapse crossbar."""


class MabFamilyKind(str, Enum):
    UNSTRUCTURED = "unstructured"
    STRUCTURED = "structured"


@dataclass(frozen=True)
class Mdp:
    """Finite MDP with dense transition-attached rewards.

    ``p[s, a, s']`` are transition probabilities and ``r[s, a, s']`` the reward
    received on that transition.
    """

    p: np.ndarray
    r: np.ndarray
    gamma: float

    def __post_init__(self) -> None:
        if self.p.ndim != 3 or self.p.shape != self.r.shape:
            raise ValueError("p and r must both have shape (S, A, S)")
        if self.p.shape[0] != self.p.shape[2]:
            raise ValueError("transition tensor must be (S, A, S)")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if np.any(self.p < 0) or np.any(self.p > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if np.any(np.abs(self.p.sum(axis=2) - 1.0) > 1e-9):
            raise ValueError("every (s, a) row of p must sum to 1")
        if np.any(self.r < 0) or np.any(self.r > 1):
            raise ValueError("rewards must lie in [0, 1]")

    @property
    def n_states(self) -> int:
        return self.p.shape[0]

    @property
    def n_actions(self) -> int:
        return self.p.shape[1]


@dataclass(frozen=True)
class Mab:
    """Two-armed (or k-armed) Bernoulli bandit."""

    p_arm: np.ndarray
    family: MabFamilyKind = MabFamilyKind.UNSTRUCTURED

    def __post_init__(self) -> None:
        p = np.asarray(self.p_arm, dtype=float)
        object.__setattr__(self, "p_arm", p)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("p_arm must be a non-empty vector")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("arm probabilities must lie in [0, 1]")
        if self.family is MabFamilyKind.STRUCTURED:
            if p.size != 2 or p[1] != 1.0 - p[0]:
                raise ValueError("structured bandits need p_arm[1] == 1 - p_arm[0]")

    @property
    def n_states(self) -> int:
        return 1

    @property
    def n_actions(self) -> int:
        return self.p_arm.size


Task = Union[Mdp, Mab]


@dataclass
class Trajectory:
    """One inner-loop trial. Arrays are indexed by step ``t``."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    cases: np.ndarray
    weights: np.ndarray | None = field(default=None, repr=False)
    final_weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return int(self.rewards.size)

    @property
    def raw_return(self) -> float:
        return float(self.rewards.sum())

    @property
    def steps(self) -> list[tuple[int, int, int, float, int, int]]:
        return [
            (t, int(s), int(a), float(r), int(s2), int(c))
            for t, (s, a, r, s2, c) in enumerate(
                zip(self.states, self.actions, self.rewards, self.next_states, self.cases)
            )
        ]

    def __len__(self) -> int:
        return self.horizon


def sample_mdp(n_states: int, n_actions: int, gamma: float, rng: np.random.Generator) -> Mdp:
    if n_states < 1 or n_actions < 1:
        raise ValueError("need at least one state and one action")
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    p = rng.random((n_states, n_actions, n_states))
    r = rng.random((n_states, n_actions, n_states))
    totals = p.sum(axis=2, keepdims=True)
    # an all-zero row has probability zero for continuous draws; fall back to uniform
    p = np.where(totals > 0, p / np.where(totals > 0, totals, 1.0), 1.0 / n_states)
    return Mdp(p=p, r=r, gamma=float(gamma))


def mdp_step(mdp: Mdp, s: int, a: int, rng: np.random.Generator) -> tuple[int, float]:
    if not (0 <= s < mdp.n_states and 0 <= a < mdp.n_actions):
        raise IndexError(f"(s={s}, a={a}) out of range for {mdp.n_states}x{mdp.n_actions} MDP")
    s_next = transition_from_uniform(mdp.p[s, a], rng.random())
    return s_next, float(mdp.r[s, a, s_next])


def transition_from_uniform(row: np.ndarray, u: float) -> int:
    """Inverse-CDF draw; the same rule is used inside the compiled trial loop."""
    cdf = np.cumsum(row)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, row.size - 1)


def sample_mab(family: MabFamilyKind | str, rng: np.random.Generator) -> Mab:
    family = MabFamilyKind(family)
    if family is MabFamilyKind.STRUCTURED:
        p1 = rng.random()
        return Mab(np.array([p1, 1.0 - p1]), family)
    return Mab(rng.random(2), family)


def mab_pull(mab: Mab, arm: int, rng: np.random.Generator) -> int:
    if not 0 <= arm < mab.n_actions:
        raise IndexError(f"arm {arm} out of range")
    return int(rng.random() < mab.p_arm[arm])


def discounted_return(trajectory: Trajectory | np.ndarray, gamma: float) -> float:
    """Sum of ``gamma**t * r(t)``; ``gamma=1`` gives the plain cumulative reward."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    rewards = trajectory.rewards if isinstance(trajectory, Trajectory) else np.asarray(trajectory, float)
    if rewards.size == 0:
        return 0.0
    return float(np.dot(gamma ** np.arange(rewards.size), rewards))


def normalized_score(raw: float, random_ref: float, optimal_ref: float) -> float:
    if optimal_ref == random_ref:
        raise NotNormalizable("optimal and random reference returns are equal")
    return (raw - random_ref) / (optimal_ref - random_ref)


def batch_normalized_score(raw, random_ref, optimal_ref) -> float:
    """Normalized score of a batch of tasks: ratio of the batch means.

    Averaging per-task scores is heavy tailed (the denominator of a nearly
    symmetric bandit is close to zero), so batches are normalized as a whole.
    """
    raw, rnd, opt = (np.asarray(x, dtype=float) for x in (raw, random_ref, optimal_ref))
    denom = float(np.sum(opt - rnd))
    if denom == 0.0:
        raise NotNormalizable("batch has zero optimal-minus-random spread")
    return float(np.sum(raw - rnd)) / denom


# -- family descriptors -------------------------------------------------------


@dataclass(frozen=True)
class MdpFamily:
    """Random MDPs. ``gamma`` defines the task (and its VI optimum);
    ``score_gamma`` discounts the agent's rewards when scoring a trial."""

    n_states: int = 2
    n_actions: int = 4
    gamma: float = 0.9
    score_gamma: float = 1.0

    kind = "mdp"

    def sample(self, rng: np.random.Generator) -> Mdp:
        return sample_mdp(self.n_states, self.n_actions, self.gamma, rng)

    @property
    def eval_gamma(self) -> float:
        return self.score_gamma

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": "mdp",
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "gamma": self.gamma,
            "score_gamma": self.score_gamma,
        }


@dataclass(frozen=True)
class MabFamily:
    structured: bool = True

    kind = "mab"
    n_states = 1
    n_actions = 2

    def sample(self, rng: np.random.Generator) -> Mab:
        kind = MabFamilyKind.STRUCTURED if self.structured else MabFamilyKind.UNSTRUCTURED
        return sample_mab(kind, rng)

    @property
    def eval_gamma(self) -> float:
        return 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"family": "mab", "structured": self.structured}


Family = Union[MdpFamily, MabFamily]


def parse_family(desc: Mapping[str, Any]) -> Family:
    """Build a family from its JSON descriptor."""
    kind = desc.get("family")
    if kind == "mdp":
        fam = MdpFamily(
            n_states=int(desc.get("n_states", 2)),
            n_actions=int(desc.get("n_actions", 4)),
            gamma=float(desc.get("gamma", 0.9)),
            score_gamma=float(desc.get("score_gamma", 1.0)),
        )
        if fam.n_states < 1 or fam.n_actions < 1:
            raise ValueError("family: n_states and n_actions must be positive")
        if not 0.0 <= fam.gamma < 1.0:
            raise ValueError("family: gamma must lie in [0, 1)")
        if not 0.0 <= fam.score_gamma <= 1.0:
            raise ValueError("family: score_gamma must lie in [0, 1]")
        return fam
    if kind == "mab":
        return MabFamily(structured=bool(desc.get("structured", True)))
    raise ValueError(f"family: unknown family {kind!r} (expected 'mdp' or 'mab')")


def check_capacity(n_states: int, n_actions: int) -> None:
    if n_states + n_actions > CROSSBAR_SIZE:
        raise CapacityError(
            f"{n_states} state + {n_actions} action neurons exceed the {CROSSBAR_SIZE}-neuron crossbar"
        )
