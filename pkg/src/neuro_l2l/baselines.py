"""Reference policies used to normalize and benchmark the agent.

Value iteration gives the MDP ceiling, the Gittins index policy is the bandit
comparison baseline, and the random / oracle policies anchor the 0 and 1 of
the normalized score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environments import Mab, Mdp, Task, Trajectory, mab_pull, transition_from_uniform

# -- value iteration -----------------------------------------------------------


@dataclass(frozen=True)
class QTable:
    q: np.ndarray
    gamma: float


def value_iteration(mdp: Mdp, tol: float = 1e-8, max_sweeps: int = 100_000) -> QTable:
    """Bellman optimality fixed point, accurate to ``tol`` in sup-norm."""
    gamma = mdp.gamma
    if gamma >= 1.0:
        raise ValueError("infinite-horizon value iteration needs gamma < 1")
    expected_r = np.einsum("ijk,ijk->ij", mdp.p, mdp.r)
    q = np.zeros_like(expected_r)
    stop = tol * (1.0 - gamma) / gamma if gamma > 0 else np.inf
    for _ in range(max_sweeps):
        q_new = expected_r + gamma * mdp.p @ q.max(axis=1)
        diff = np.max(np.abs(q_new - q))
        q = q_new
        if diff < stop:
            break
    return QTable(q=q, gamma=gamma)


def greedy_policy(q_table: QTable | np.ndarray) -> np.ndarray:
    """Greedy action per state; ``np.argmax`` breaks ties toward the lowest index."""
    q = q_table.q if isinstance(q_table, QTable) else np.asarray(q_table)
    return np.argmax(q, axis=-1)


def policy_matrix(policy: np.ndarray, n_actions: int) -> np.ndarray:
    """One-hot ``pi[s, a]`` for a deterministic policy."""
    pi = np.zeros((policy.size, n_actions))
    pi[np.arange(policy.size), policy] = 1.0
    return pi


# -- exact expected returns ----------------------------------------------------


def _policy_chain(mdp: Mdp, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_pi = np.einsum("sa,sat->st", pi, mdp.p)
    r_pi = np.einsum("sa,sat,sat->s", pi, mdp.p, mdp.r)
    return p_pi, r_pi


def expected_discounted_return(mdp: Mdp, pi: np.ndarray, s0: int, T: int, gamma: float) -> float:
    """``E[sum_{t<T} gamma^t r(t)]`` from start state ``s0`` under stochastic policy ``pi``."""
    if T <= 0:
        return 0.0
    p_pi, r_pi = _policy_chain(mdp, pi)
    n = mdp.n_states
    gp = gamma * p_pi
    if gamma < 1.0:
        # sum_{t<T} (gamma P)^t = (I - (gamma P)^T) (I - gamma P)^{-1}
        geo = np.linalg.solve(np.eye(n) - gp, np.eye(n) - np.linalg.matrix_power(gp, T))
        return float(geo[s0] @ r_pi)
    return float(reward_curve(mdp, pi, s0, T, gamma).sum())


def reward_curve(mdp: Mdp, pi: np.ndarray, s0: int, T: int, gamma: float) -> np.ndarray:
    """Per-step discounted expected reward ``gamma^t E[r(t)]``, by forward recursion."""
    p_pi, r_pi = _policy_chain(mdp, pi)
    d = np.zeros(mdp.n_states)
    d[s0] = 1.0
    out = np.empty(T)
    disc = 1.0
    for t in range(T):
        out[t] = disc * (d @ r_pi)
        d = d @ p_pi
        disc *= gamma
    return out


def mdp_references(mdp: Mdp, s0: int, T: int, gamma: float) -> tuple[float, float]:
    """(random-policy, VI-policy) expected discounted returns over ``T`` steps."""
    uniform = np.full((mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)
    vi = policy_matrix(greedy_policy(value_iteration(mdp)), mdp.n_actions)
    return (
        expected_discounted_return(mdp, uniform, s0, T, gamma),
        expected_discounted_return(mdp, vi, s0, T, gamma),
    )


def mdp_reference_curves(mdp: Mdp, s0: int, T: int, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    uniform = np.full((mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)
    vi = policy_matrix(greedy_policy(value_iteration(mdp)), mdp.n_actions)
    return reward_curve(mdp, uniform, s0, T, gamma), reward_curve(mdp, vi, s0, T, gamma)


def mab_references(mab: Mab, T: int) -> tuple[float, float]:
    return T * float(mab.p_arm.mean()), T * float(mab.p_arm.max())


def mab_reference_curves(mab: Mab, T: int) -> tuple[np.ndarray, np.ndarray]:
    return np.full(T, mab.p_arm.mean()), np.full(T, mab.p_arm.max())


# -- Gittins index -------------------------------------------------------------


def _play_value(a, b, lam, beta: float, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Value of pulling once more and then acting optimally, and its slope in ``lam``.

    The alternative to pulling is retiring on a standard arm paying ``lam``
    forever. Vectorized over starting posteriors ``(a, b)`` with per-start
    ``lam``. The lattice is truncated ``depth`` pulls deep; at the frontier the
    player commits forever to the better of the posterior mean and ``lam``.
    """
    inv = 1.0 / (1.0 - beta)
    lam_col = lam[:, None]
    retire = lam_col * inv
    i = np.arange(depth + 1)
    mu = (a[:, None] + i) / (a + b + depth)[:, None]
    value = np.maximum(mu * inv, retire)
    slope = np.where(mu * inv > retire, 0.0, inv)
    for k in range(depth - 1, -1, -1):
        i = np.arange(k + 1)
        mu = (a[:, None] + i) / (a + b + k)[:, None]
        play = mu * (1.0 + beta * value[:, 1 : k + 2]) + (1.0 - mu) * beta * value[:, : k + 1]
        dplay = beta * (mu * slope[:, 1 : k + 2] + (1.0 - mu) * slope[:, : k + 1])
        if k == 0:
            return play[:, 0], dplay[:, 0]
        keep = play > retire
        value = np.where(keep, play, retire)
        slope = np.where(keep, dplay, inv)
    raise ValueError("depth must be >= 1")


def gittins_indices(a, b, beta: float = 0.9, depth: int = 200, tol: float = 1e-12) -> np.ndarray:
    """Bernoulli/Beta Gittins indices by calibration against a standard arm.

    The index of Beta(a, b) is the retirement payoff ``lam`` at which pulling
    once more and retiring are equally good. The gap ``play(lam) - lam/(1-beta)``
    is convex, piecewise linear and decreasing in ``lam``, so Newton steps from
    the posterior mean climb monotonically onto the root.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    inv = 1.0 / (1.0 - beta)
    lam = a / (a + b)
    active = np.ones(lam.size, dtype=bool)
    for _ in range(200):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        play, dplay = _play_value(a[idx], b[idx], lam[idx], beta, depth)
        step = np.maximum((play - lam[idx] * inv) / (inv - dplay), 0.0)
        lam[idx] = np.minimum(lam[idx] + step, 1.0)
        active[idx] = step > tol
    return lam


@dataclass(frozen=True)
class GittinsTable:
    """Indices for all Beta(a, b) with a, b >= 1 and a + b <= horizon + 2."""

    index: np.ndarray  # index[a, b]; NaN outside the covered triangle
    discount_beta: float
    horizon: int

    def __call__(self, a: int, b: int) -> float:
        if a < 1 or b < 1 or a + b > self.horizon + 2:
            raise KeyError(f"posterior Beta({a}, {b}) outside the table (horizon {self.horizon})")
        return float(self.index[a, b])

    def states(self):
        for a in range(1, self.horizon + 2):
            for b in range(1, self.horizon + 3 - a):
                yield a, b


def gittins_table(horizon: int, discount_beta: float = 0.9, depth: int = 200, tol: float = 1e-12) -> GittinsTable:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0.0 < discount_beta < 1.0:
        raise ValueError("discount_beta must lie in (0, 1)")
    n = horizon + 2
    pairs = [(a, b) for a in range(1, n) for b in range(1, n + 1 - a)]
    a, b = np.array(pairs, dtype=float).T
    values = gittins_indices(a, b, discount_beta, depth, tol)
    index = np.full((n + 1, n + 1), np.nan)
    index[a.astype(int), b.astype(int)] = values
    return GittinsTable(index=index, discount_beta=discount_beta, horizon=horizon)


def gittins_policy_run(mab: Mab, T: int, table: GittinsTable, rng: np.random.Generator) -> Trajectory:
    succ = np.ones(mab.n_actions, dtype=int)
    fail = np.ones(mab.n_actions, dtype=int)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    for t in range(T):
        idx = [table(int(succ[k]), int(fail[k])) for k in range(mab.n_actions)]
        arm = int(np.argmax(idx))
        r = mab_pull(mab, arm, rng)
        succ[arm] += r
        fail[arm] += 1 - r
        actions[t] = arm
        rewards[t] = r
    zeros = np.zeros(T, dtype=np.int64)
    return Trajectory(zeros, actions, rewards, zeros.copy(), zeros.copy())


def random_policy_run(mab: Mab, T: int, rng: np.random.Generator) -> Trajectory:
    actions = rng.integers(0, mab.n_actions, size=T)
    rewards = (rng.random(T) < mab.p_arm[actions]).astype(float)
    zeros = np.zeros(T, dtype=np.int64)
    return Trajectory(zeros, actions, rewards, zeros.copy(), zeros.copy())


def policy_rollout(task: Task, policy, s0: int, u_env: np.ndarray, rng: np.random.Generator | None = None) -> Trajectory:
    """Follow a fixed policy, consuming one uniform per step like the agent does.

    ``policy`` is an arm index for bandits and a per-state action vector for
    MDPs; ``None`` picks uniformly random actions from ``rng``. Sharing
    ``u_env`` with an agent trial pairs the two outcomes.
    """
    if policy is None:
        if rng is None:
            raise ValueError("a random policy needs an rng")
        random_actions = rng.integers(0, task.n_actions, size=len(u_env))
    T = len(u_env)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    states = np.empty(T, dtype=np.int64)
    nxt = np.empty(T, dtype=np.int64)
    s = int(s0)
    for t in range(T):
        if policy is None:
            a = int(random_actions[t])
        elif isinstance(task, Mab):
            a = int(policy)
        else:
            a = int(policy[s])
        if isinstance(task, Mab):
            r, s2 = float(u_env[t] < task.p_arm[a]), 0
        else:
            s2 = transition_from_uniform(task.p[s, a], u_env[t])
            r = float(task.r[s, a, s2])
        states[t], actions[t], rewards[t], nxt[t] = s, a, r, s2
        s = s2
    return Trajectory(states, actions, rewards, nxt, np.zeros(T, dtype=np.int64))


def optimal_policy(task: Task):
    if isinstance(task, Mab):
        return int(np.argmax(task.p_arm))
    return greedy_policy(value_iteration(task))
