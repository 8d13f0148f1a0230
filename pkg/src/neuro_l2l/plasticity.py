"""Synaptic learning rules acting on the state->action weights.

Weights are indexed ``w[s, a]`` and play the role of Q-values. The small
``_*`` functions are numba-compiled and mutate in place; they are shared by
the public functions here and by the compiled trial loop in
:mod:`neuro_l2l.emulator`, so both paths do identical arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Union

import numpy as np
from numba import njit

N_INPUTS = 5
N_HIDDEN = 7
N_ANN_PARAMS = N_INPUTS * N_HIDDEN + N_HIDDEN + N_HIDDEN + 1  # 50
ANN_INPUT_NAMES = ("t", "action_flag", "reward", "w_self", "w_other")

# theta layout: input->hidden (7x5, row major), hidden biases, hidden->output, output bias
_W1 = slice(0, 35)
_B1 = slice(35, 42)
_W2 = slice(42, 49)
_B2 = 49


@dataclass(frozen=True)
class TdParams:
    alpha0: float
    alpha_decay: float = 1.0
    gamma: float = 0.9
    lam: float = 0.0

    def __post_init__(self) -> None:
        if self.alpha0 < 0:
            raise ValueError("alpha0 must be non-negative")
        if not 0.0 < self.alpha_decay <= 1.0:
            raise ValueError("alpha_decay must lie in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")

    def alpha(self, t: int) -> float:
        """Learning rate at step ``t``: ``alpha0 * alpha_decay**t``."""
        return self.alpha0 * self.alpha_decay**t


@dataclass(frozen=True)
class Td1Rule:
    params: TdParams
    kind = "td1"


@dataclass(frozen=True)
class TdLambdaRule:
    params: TdParams
    kind = "tdlambda"


@dataclass(frozen=True)
class AnnRule:
    """MLP plasticity rule: 5 inputs, 7 sigmoid hidden units, 1 output."""

    theta: np.ndarray = field(default_factory=lambda: np.zeros(N_ANN_PARAMS))
    out_scale: float = 1.0
    squash: bool = False  # tanh on the output before scaling

    kind = "ann"

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=float).ravel()
        if theta.size != N_ANN_PARAMS:
            raise ValueError(f"ANN rule needs {N_ANN_PARAMS} parameters, got {theta.size}")
        if not self.out_scale > 0:
            raise ValueError("out_scale must be positive")
        object.__setattr__(self, "theta", theta)

    @property
    def w1(self) -> np.ndarray:
        return self.theta[_W1].reshape(N_HIDDEN, N_INPUTS)

    @property
    def b1(self) -> np.ndarray:
        return self.theta[_B1]

    @property
    def w2(self) -> np.ndarray:
        return self.theta[_W2]

    @property
    def b2(self) -> float:
        return float(self.theta[_B2])

    @staticmethod
    def pack(w1, b1, w2, b2) -> np.ndarray:
        return np.concatenate([np.ravel(w1), np.ravel(b1), np.ravel(w2), [b2]]).astype(float)


PlasticityRule = Union[Td1Rule, TdLambdaRule, AnnRule]


# -- compiled cores ------------------------------------------------------------


@njit(cache=True)
def _row_max(w, s):
    best = w[s, 0]
    for k in range(1, w.shape[1]):
        if w[s, k] > best:
            best = w[s, k]
    return best


@njit(cache=True)
def _td1_inplace(w, s, a, r, s_next, alpha, gamma):
    target = r + gamma * _row_max(w, s_next)
    w[s, a] = w[s, a] + alpha * (target - w[s, a])


@njit(cache=True)
def _td_lambda_inplace(w, e, s, a, r, s_next, alpha, gamma, lam):
    decay = gamma * lam
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            e[i, j] = decay * e[i, j]
    e[s, a] += 1.0
    delta = (r + gamma * _row_max(w, s_next)) - w[s, a]
    step = alpha * delta
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            w[i, j] = w[i, j] + step * e[i, j]


@njit(cache=True)
def _ann_delta(x0, x1, x2, x3, x4, theta, out_scale, squash):
    z = theta[49]
    for h in range(7):
        k = 5 * h
        pre = theta[35 + h] + theta[k] * x0 + theta[k + 1] * x1 + theta[k + 2] * x2 + theta[k + 3] * x3 + theta[k + 4] * x4
        z += theta[42 + h] / (1.0 + np.exp(-pre))
    if squash:
        z = np.tanh(z)
    return out_scale * z


@njit(cache=True)
def _ann_update_inplace(w, t_norm, action, r, theta, out_scale, squash, w_lo, w_span):
    w0 = (w[0, 0] - w_lo) / w_span
    w1 = (w[0, 1] - w_lo) / w_span
    d0 = _ann_delta(t_norm, 1.0 if action == 0 else 0.0, r, w0, w1, theta, out_scale, squash)
    d1 = _ann_delta(t_norm, 1.0 if action == 1 else 0.0, r, w1, w0, theta, out_scale, squash)
    w[0, 0] = w[0, 0] + d0
    w[0, 1] = w[0, 1] + d1


# -- public API ----------------------------------------------------------------


def _check_indices(w: np.ndarray, s: int, a: int, s_next: int) -> None:
    n_s, n_a = w.shape
    if not (0 <= s < n_s and 0 <= a < n_a and 0 <= s_next < n_s):
        raise IndexError(f"(s={s}, a={a}, s'={s_next}) out of range for {n_s}x{n_a} weights")


def td1_update(weights: np.ndarray, s: int, a: int, r: float, s_next: int, params: TdParams, t: int = 0) -> np.ndarray:
    """One Q-learning step on the synapse of the visited (state, action) pair."""
    w = np.array(weights, dtype=float)
    _check_indices(w, s, a, s_next)
    _td1_inplace(w, s, a, float(r), s_next, params.alpha(t), params.gamma)
    return w


def td_lambda_update(
    weights: np.ndarray,
    traces: np.ndarray,
    s: int,
    a: int,
    r: float,
    s_next: int,
    params: TdParams,
    t: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Decay/bump all eligibility traces, then move every synapse by ``alpha * delta * e``."""
    w = np.array(weights, dtype=float)
    e = np.array(traces, dtype=float)
    if e.shape != w.shape:
        raise ValueError("traces must match the weight shape")
    _check_indices(w, s, a, s_next)
    _td_lambda_inplace(w, e, s, a, float(r), s_next, params.alpha(t), params.gamma, params.lam)
    return w, e


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def ann_forward(inputs, rule: AnnRule):
    """Weight update proposed by the MLP rule.

    ``inputs`` is ``(t_norm, action_flag, r, w_self, w_other)`` or a stack of
    such rows with shape ``(..., 5)``.
    """
    x = np.asarray(inputs, dtype=float)
    if x.shape[-1] != N_INPUTS:
        raise ValueError(f"expected {N_INPUTS} inputs, got shape {x.shape}")
    h = _sigmoid(x @ rule.w1.T + rule.b1)
    z = h @ rule.w2 + rule.b2
    if rule.squash:
        z = np.tanh(z)
    out = rule.out_scale * z
    return float(out) if np.ndim(out) == 0 else out


def ann_input_gradient(inputs, rule: AnnRule) -> np.ndarray:
    """Analytic ``d delta_w / d inputs`` for one input row."""
    x = np.asarray(inputs, dtype=float)
    h = _sigmoid(rule.w1 @ x + rule.b1)
    grad = (rule.w2 * h * (1.0 - h)) @ rule.w1
    if rule.squash:
        z = h @ rule.w2 + rule.b2
        grad = grad * (1.0 - np.tanh(z) ** 2)
    return rule.out_scale * grad


def ann_output_bound(rule: AnnRule) -> float:
    if rule.squash:
        return rule.out_scale
    return rule.out_scale * (np.abs(rule.w2).sum() + abs(rule.b2))


def ann_update_all(
    weights: np.ndarray,
    t: int,
    action: int,
    r: float,
    rule: AnnRule,
    T: int,
    w_range: tuple[float, float] = (0.0, 1.0),
) -> np.ndarray:
    """Update both arms of a two-armed bandit synchronously from pre-update weights.

    Weight inputs are mapped to ``[0, 1]`` through ``w_range`` before entering the
    network; time enters as ``t / T``.
    """
    w = np.array(weights, dtype=float)
    if w.shape != (1, 2):
        raise ValueError(f"the ANN rule needs a single-state two-armed bandit, got weights {w.shape}")
    if action not in (0, 1):
        raise IndexError(f"action {action} out of range")
    lo, hi = w_range
    _ann_update_inplace(w, t / T, action, float(r), rule.theta, rule.out_scale, rule.squash, lo, hi - lo)
    return w


# -- descriptors ---------------------------------------------------------------


def parse_rule(desc: Mapping[str, Any]) -> PlasticityRule:
    kind = desc.get("rule")
    if kind in ("td1", "tdlambda"):
        params = TdParams(
            alpha0=float(desc.get("alpha0", desc.get("alpha", 0.1))),
            alpha_decay=float(desc.get("alpha_decay", 1.0)),
            gamma=float(desc.get("gamma", 1.0 if kind == "td1" else 0.9)),
            lam=float(desc.get("lambda", 0.0)),
        )
        return Td1Rule(params) if kind == "td1" else TdLambdaRule(params)
    if kind == "ann":
        theta = desc.get("theta")
        return AnnRule(
            theta=np.zeros(N_ANN_PARAMS) if theta is None else np.asarray(theta, dtype=float),
            out_scale=float(desc.get("out_scale", 1.0)),
            squash=bool(desc.get("squash", False)),
        )
    raise ValueError(f"rule: unknown rule {kind!r} (expected 'td1', 'tdlambda' or 'ann')")


def rule_to_dict(rule: PlasticityRule) -> dict[str, Any]:
    if isinstance(rule, AnnRule):
        return {"rule": "ann", "theta": rule.theta.tolist(), "out_scale": rule.out_scale, "squash": rule.squash}
    p = rule.params
    out = {"rule": rule.kind, "alpha0": p.alpha0, "alpha_decay": p.alpha_decay, "gamma": p.gamma}
    if isinstance(rule, TdLambdaRule):
        out["lambda"] = p.lam
    return out
