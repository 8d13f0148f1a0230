"""Behavioral model of the spiking agent on a 32x32 synapse crossbar.

One state neuron per environment state, one action neuron per action. The
active state neuron fires every tick through its autapse and drives the
action neurons through the plastic weights ``w[s, a]``; the first action
neuron to cross threshold picks the action. Action neurons inhibit each other
(``xi``) and the state neuron (``zeta``) after a synaptic delay, so neurons
with similar weights can co-spike and the choice among them is random.

Learning acts on real-valued shadow weights. The spiking dynamics read a
6-bit view of them (``bits=None`` selects the ideal, unquantized model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Any, Mapping

import numpy as np
from numba import njit

from .environments import Mab, Mdp, Task, Trajectory, check_capacity
from .plasticity import (
    AnnRule,
    PlasticityRule,
    Td1Rule,
    TdLambdaRule,
    _ann_update_inplace,
    _td1_inplace,
    _td_lambda_inplace,
)


class Mode(str, Enum):
    HARDWARE = "hardware"
    IDEAL = "ideal"


class SelectionCase(IntEnum):
    TIMEOUT = 0
    MULTI_SPIKE = 1
    SINGLE_SPIKE = 2


@dataclass(frozen=True)
class EmulatorConfig:
    xi: float = 20.0
    zeta: float = 40.0
    w_min: float = 0.0
    w_max: float = 63.0
    rescale_period: int | None = 10
    tau_m: float = 20.0
    tau_syn: float = 10.0
    v_thresh: float = 500.0
    v_reset: float = 0.0
    syn_delay: int = 2
    select_timeout: int = 100
    bits: int | None = 6
    autapse: float = 550.0
    reward_scale: float = 1.0
    init_band: tuple[float, float] = (0.4, 0.6)

    def __post_init__(self) -> None:
        if not self.w_min < self.w_max:
            raise ValueError(f"need w_min < w_max, got {self.w_min} >= {self.w_max}")
        if self.rescale_period is not None and self.rescale_period < 1:
            raise ValueError("rescale_period must be >= 1 (or None to disable)")
        if self.syn_delay < (1 if self.bits is not None else 0):
            raise ValueError("syn_delay must be >= 1 tick on hardware")
        if self.select_timeout <= self.syn_delay:
            raise ValueError("select_timeout must exceed syn_delay")
        if self.tau_m <= 0 or self.tau_syn <= 0:
            raise ValueError("time constants must be positive")
        if self.xi < 0 or self.zeta < 0:
            raise ValueError("inhibition strengths must be non-negative")
        if self.bits is not None and not 1 <= self.bits <= 16:
            raise ValueError("bits must be between 1 and 16")
        lo, hi = self.init_band
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("init_band must be a sub-interval of [0, 1]")

    @property
    def mode(self) -> Mode:
        return Mode.IDEAL if self.bits is None else Mode.HARDWARE

    @property
    def qmax(self) -> int:
        return -1 if self.bits is None else 2**self.bits - 1

    def with_(self, **changes: Any) -> "EmulatorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["init_band"] = list(self.init_band)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], mode: Mode | str | None = None) -> "EmulatorConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"emulator: unknown keys {sorted(unknown)}")
        if "init_band" in known:
            known["init_band"] = tuple(known["init_band"])
        if mode is not None and Mode(mode) is Mode.IDEAL:
            known["bits"] = None
        return cls(**known)


def rescale_period_from_frequency(f_rescale: float, T: int) -> int:
    """Steps between rescales for a rescale frequency given in 1/steps."""
    return int(min(max(round(1.0 / f_rescale), 1), max(T, 1)))


# -- weights -------------------------------------------------------------------


def quantize(shadow: np.ndarray, bits: int | None) -> np.ndarray:
    """Hardware view of shadow weights: nearest integer, saturated to ``[0, 2**bits - 1]``."""
    if bits is None:
        return np.asarray(shadow, dtype=float)
    return np.clip(np.rint(shadow), 0, 2**bits - 1).astype(np.int64)


@dataclass
class WeightMatrix:
    shadow: np.ndarray
    bits: int | None = 6

    @property
    def quantized(self) -> np.ndarray:
        return quantize(self.shadow, self.bits)

    @property
    def drive(self) -> np.ndarray:
        return np.asarray(self.quantized, dtype=float)


def rescale_coefficients(w: np.ndarray, w_min: float, w_max: float) -> tuple[float, float] | None:
    """``(k, d)`` of the affine map onto ``[w_min, w_max]``; ``None`` when all weights are equal."""
    hi, lo = float(np.max(w)), float(np.min(w))
    if not hi > lo:
        return None
    k = (w_max - w_min) / (hi - lo)
    return k, w_max - k * hi


def rescale_weights(w: np.ndarray, w_min: float, w_max: float) -> np.ndarray:
    """Map the whole matrix affinely so its max is ``w_max`` and its min ``w_min``.

    A degenerate matrix (all entries equal) is returned unchanged.
    """
    w = np.asarray(w, dtype=float)
    coef = rescale_coefficients(w, w_min, w_max)
    if coef is None:
        return w.copy()
    k, d = coef
    # clamp and pin the extremes exactly; k*w+d can be off by one ulp
    out = np.clip(k * w + d, w_min, w_max)
    out[w == np.max(w)] = w_max
    out[w == np.min(w)] = w_min
    return out


# -- action selection ----------------------------------------------------------


@dataclass(frozen=True)
class SelectionOutcome:
    action: int
    case: SelectionCase
    spikers: frozenset[int] = field(default_factory=frozenset)


@njit(cache=True)
def _select(drive, xi, zeta, rho, rho_syn, v_thresh, v_reset, syn_delay, timeout, autapse, u,
            v, i_inh, cross, spiked, ring):
    """Tick simulation of one selection. Returns (action, case); ``spiked`` is filled in.

    Inhibition (``xi`` between action neurons, ``zeta`` onto the state neuron)
    is a current that decays with ``rho_syn`` per tick. The selection window
    stays open until the state neuron has been silenced; every action neuron
    that spiked inside it is a candidate.
    """
    n_act = drive.size
    lanes = syn_delay + 1
    for i in range(n_act):
        v[i] = 0.0
        i_inh[i] = 0.0
        spiked[i] = False
        for k in range(lanes):
            ring[k, i] = 0.0
    g = 0.0
    state_on = True
    first = -1
    for n in range(1, timeout + 1):
        slot = n % lanes
        arrived = 0.0
        if syn_delay > 0:
            for i in range(n_act):
                arrived += ring[slot, i]
        g *= rho_syn
        if arrived > 0.0:
            g += zeta * arrived
        if state_on and autapse - g < v_thresh:
            state_on = False

        n_fire = 0
        earliest = np.inf
        for i in range(n_act):
            i_inh[i] *= rho_syn
            if arrived > 0.0:
                others = arrived - ring[slot, i]
                if others > 0.0:
                    i_inh[i] += xi * others
            x = v[i] * rho - i_inh[i]
            if state_on:
                x += drive[i]
            cross[i] = np.inf
            if x >= v_thresh:
                # sub-tick crossing time by linear interpolation
                cross[i] = (v_thresh - v[i]) / (x - v[i]) if x > v[i] else 0.0
                n_fire += 1
                if cross[i] < earliest:
                    earliest = cross[i]
            v[i] = x
            ring[slot, i] = 0.0

        if n_fire > 0 and syn_delay == 0:
            # zero delay: the earliest crossers inhibit the rest within the tick
            n_first = 0
            for i in range(n_act):
                if cross[i] == earliest:
                    n_first += 1
            for i in range(n_act):
                if cross[i] != earliest:
                    i_inh[i] += xi * n_first
                    v[i] -= xi * n_first
                    cross[i] = 0.0 if v[i] >= v_thresh else np.inf
            g += zeta * n_first
            if state_on and autapse - g < v_thresh:
                state_on = False

        for i in range(n_act):
            if cross[i] < np.inf:
                v[i] = v_reset
                spiked[i] = True
                if first < 0:
                    first = n
                if syn_delay > 0:
                    ring[(n + syn_delay) % lanes, i] += 1.0
        if first >= 0 and not state_on:
            break

    if first < 0:
        return min(int(u * n_act), n_act - 1), 0
    count = 0
    for i in range(n_act):
        if spiked[i]:
            count += 1
    pick = min(int(u * count), count - 1)
    for i in range(n_act):
        if spiked[i]:
            if pick == 0:
                return i, 2 if count == 1 else 1
            pick -= 1
    return -1, -1


def _scratch(n_actions: int, syn_delay: int):
    return (
        np.zeros(n_actions),
        np.zeros(n_actions),
        np.zeros(n_actions),
        np.zeros(n_actions, dtype=np.bool_),
        np.zeros((syn_delay + 1, n_actions)),
    )


def select_action(weights, config: EmulatorConfig, state_index: int, rng: np.random.Generator) -> SelectionOutcome:
    """Run one first-spike action selection for the active state."""
    if isinstance(weights, WeightMatrix):
        drive = weights.drive
    else:
        drive = np.asarray(quantize(np.asarray(weights, dtype=float), config.bits), dtype=float)
    if not 0 <= state_index < drive.shape[0]:
        raise IndexError(f"state {state_index} out of range")
    row = np.ascontiguousarray(drive[state_index])
    v, i_inh, cross, spiked, ring = _scratch(row.size, config.syn_delay)
    action, case = _select(
        row,
        config.xi,
        config.zeta,
        math.exp(-1.0 / config.tau_m),
        math.exp(-1.0 / config.tau_syn),
        config.v_thresh,
        config.v_reset,
        config.syn_delay,
        config.select_timeout,
        config.autapse,
        rng.random(),
        v,
        i_inh,
        cross,
        spiked,
        ring,
    )
    return SelectionOutcome(int(action), SelectionCase(case), frozenset(np.flatnonzero(spiked).tolist()))


# -- trial loop ----------------------------------------------------------------

RULE_TD1, RULE_TDLAMBDA, RULE_ANN = 0, 1, 2


@njit(cache=True)
def _trial(
    is_mab, p_cum, r_tab, p_arm, s0, w, T, u_env, u_sel,
    rule_kind, alpha0, alpha_decay, gamma, lam, theta, out_scale, squash,
    xi, zeta, w_min, w_max, period, rho, rho_syn, v_thresh, v_reset, syn_delay, timeout, autapse,
    reward_scale, qmax, record,
):
    n_s, n_a = w.shape
    states = np.empty(T, np.int64)
    actions = np.empty(T, np.int64)
    rewards = np.empty(T)
    next_states = np.empty(T, np.int64)
    cases = np.empty(T, np.int64)
    hist = np.empty((T if record else 0, n_s, n_a))
    traces = np.zeros((n_s, n_a))
    drive = np.empty(n_a)
    v = np.empty(n_a)
    i_inh = np.empty(n_a)
    cross = np.empty(n_a)
    spiked = np.empty(n_a, np.bool_)
    ring = np.empty((syn_delay + 1, n_a))
    span = w_max - w_min
    s = s0
    for t in range(T):
        for j in range(n_a):
            if qmax >= 0:
                x = np.rint(w[s, j])
                drive[j] = min(max(x, 0.0), float(qmax))
            else:
                drive[j] = w[s, j]
        a, case = _select(drive, xi, zeta, rho, rho_syn, v_thresh, v_reset, syn_delay, timeout, autapse,
                          u_sel[t], v, i_inh, cross, spiked, ring)
        if is_mab:
            r = 1.0 if u_env[t] < p_arm[a] else 0.0
            s2 = 0
        else:
            s2 = np.searchsorted(p_cum[s, a], u_env[t], side="right")
            if s2 > n_s - 1:
                s2 = n_s - 1
            r = r_tab[s, a, s2]

        alpha = alpha0 * alpha_decay**t
        if rule_kind == 0:
            _td1_inplace(w, s, a, r * reward_scale, s2, alpha, gamma)
        elif rule_kind == 1:
            _td_lambda_inplace(w, traces, s, a, r * reward_scale, s2, alpha, gamma, lam)
        else:
            _ann_update_inplace(w, t / T, a, r, theta, out_scale, squash, w_min, span)
        if qmax >= 0:
            for i in range(n_s):
                for j in range(n_a):
                    w[i, j] = min(max(w[i, j], 0.0), float(qmax))
        if period > 0 and (t + 1) % period == 0:
            hi = w[0, 0]
            lo = w[0, 0]
            for i in range(n_s):
                for j in range(n_a):
                    hi = max(hi, w[i, j])
                    lo = min(lo, w[i, j])
            if hi > lo:
                k = span / (hi - lo)
                d = w_max - k * hi
                for i in range(n_s):
                    for j in range(n_a):
                        if w[i, j] == hi:
                            w[i, j] = w_max
                        elif w[i, j] == lo:
                            w[i, j] = w_min
                        else:
                            w[i, j] = min(max(k * w[i, j] + d, w_min), w_max)

        states[t] = s
        actions[t] = a
        rewards[t] = r
        next_states[t] = s2
        cases[t] = case
        if record:
            for i in range(n_s):
                for j in range(n_a):
                    hist[t, i, j] = w[i, j]
        s = s2
    return states, actions, rewards, next_states, cases, hist


@dataclass(frozen=True)
class TrialInputs:
    """All randomness a trial consumes, drawn up front from the trial generator."""

    w_init: np.ndarray
    s0: int
    u_env: np.ndarray
    u_sel: np.ndarray


def draw_trial_inputs(task: Task, config: EmulatorConfig, T: int, rng: np.random.Generator) -> TrialInputs:
    lo, hi = config.init_band
    frac = rng.uniform(lo, hi, size=(task.n_states, task.n_actions))
    w_init = config.w_min + frac * (config.w_max - config.w_min)
    s0 = int(rng.integers(task.n_states))
    return TrialInputs(w_init, s0, rng.random(T), rng.random(T))


_EMPTY3 = np.zeros((1, 1, 1))
_EMPTY1 = np.zeros(1)
_NO_THETA = np.zeros(50)


def run_trial(
    env: Task,
    rule: PlasticityRule,
    config: EmulatorConfig,
    T: int,
    rng: np.random.Generator | None = None,
    *,
    inputs: TrialInputs | None = None,
    record: bool = False,
) -> Trajectory:
    """Let the agent learn ``env`` for ``T`` steps.

    Either ``rng`` or pre-drawn ``inputs`` must be given. The returned
    trajectory carries the final shadow weights in ``final_weights`` and, with
    ``record=True``, the post-update shadow weights of every step in ``weights``.
    """
    if config.bits is not None:
        check_capacity(env.n_states, env.n_actions)
    if inputs is None:
        if rng is None:
            raise ValueError("run_trial needs an rng or pre-drawn inputs")
        inputs = draw_trial_inputs(env, config, T, rng)
    w = np.array(inputs.w_init, dtype=float)
    if w.shape != (env.n_states, env.n_actions):
        raise ValueError("initial weights do not match the task")

    if isinstance(env, Mab):
        is_mab, p_cum, r_tab, p_arm = True, _EMPTY3, _EMPTY3, env.p_arm
    elif isinstance(env, Mdp):
        is_mab, p_cum, r_tab, p_arm = False, np.cumsum(env.p, axis=2), env.r, _EMPTY1
    else:
        raise TypeError(f"unsupported task {type(env).__name__}")

    if isinstance(rule, AnnRule):
        if w.shape != (1, 2):
            raise ValueError("the ANN rule is defined for two-armed bandits only")
        kind, alpha0, alpha_decay, gamma, lam = RULE_ANN, 0.0, 1.0, 0.0, 0.0
        theta, out_scale, squash = rule.theta, rule.out_scale, rule.squash
    elif isinstance(rule, (Td1Rule, TdLambdaRule)):
        p = rule.params
        kind = RULE_TD1 if isinstance(rule, Td1Rule) else RULE_TDLAMBDA
        alpha0, alpha_decay, gamma, lam = p.alpha0, p.alpha_decay, p.gamma, p.lam
        theta, out_scale, squash = _NO_THETA, 1.0, False
    else:
        raise TypeError(f"unsupported rule {type(rule).__name__}")

    states, actions, rewards, next_states, cases, hist = _trial(
        is_mab, p_cum, r_tab, p_arm, inputs.s0, w, T, inputs.u_env, inputs.u_sel,
        kind, alpha0, alpha_decay, gamma, lam, theta, out_scale, squash,
        float(config.xi), float(config.zeta), float(config.w_min), float(config.w_max),
        config.rescale_period or 0, math.exp(-1.0 / config.tau_m), math.exp(-1.0 / config.tau_syn), float(config.v_thresh),
        float(config.v_reset), int(config.syn_delay), int(config.select_timeout), float(config.autapse),
        float(config.reward_scale), config.qmax, record,
    )
    traj = Trajectory(states, actions, rewards, next_states, cases, hist if record else None)
    traj.final_weights = w
    return traj


def trajectory_rows(traj: Trajectory, bits: int | None = 6):
    """Rows for the trajectory CSV dump: t, state, action, case, reward, then quantized weights."""
    if traj.weights is None:
        raise ValueError("trajectory was not recorded with record=True")
    for t in range(traj.horizon):
        q = np.ravel(quantize(traj.weights[t], bits))
        yield [t, int(traj.states[t]), int(traj.actions[t]), SelectionCase(int(traj.cases[t])).name,
               float(traj.rewards[t]), *q.tolist()]
