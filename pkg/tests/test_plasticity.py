from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from neuro_l2l.plasticity import (
    N_ANN_PARAMS,
    AnnRule,
    Td1Rule,
    TdLambdaRule,
    TdParams,
    _ann_delta,
    ann_forward,
    ann_input_gradient,
    ann_output_bound,
    ann_update_all,
    parse_rule,
    rule_to_dict,
    td1_update,
    td_lambda_update,
)


def test_td1_worked_example():
    w = np.array([[0.5, 0.0], [0.6, 0.2]])
    out = td1_update(w, 0, 0, 1.0, 1, TdParams(0.1, gamma=0.9))
    assert out[0, 0] == pytest.approx(0.604)
    assert np.array_equal(np.delete(out.ravel(), 0), np.delete(w.ravel(), 0))


def test_td1_zero_rate_and_fixed_point():
    w = np.array([[0.3, 0.7]])
    assert np.array_equal(td1_update(w, 0, 1, 1.0, 0, TdParams(0.0)), w)
    fp = np.array([[1.0 / (1 - 0.9)]])
    assert td1_update(fp, 0, 0, 1.0, 0, TdParams(0.5, gamma=0.9))[0, 0] == pytest.approx(fp[0, 0])


def test_learning_rate_decay():
    assert TdParams(0.2, alpha_decay=0.5).alpha(3) == pytest.approx(0.025)


def test_lambda_zero_is_td1():
    rng = np.random.default_rng(0)
    w1 = rng.random((3, 2))
    w2 = w1.copy()
    e = np.zeros_like(w1)
    p = TdParams(0.1, gamma=0.9, lam=0.0)
    for t in range(200):
        s, a, s2 = rng.integers(3), rng.integers(2), rng.integers(3)
        r = rng.random()
        w1 = td1_update(w1, s, a, r, s2, p, t)
        w2, e = td_lambda_update(w2, e, s, a, r, s2, p, t)
        assert np.array_equal(w1, w2)


def test_trace_schedule():
    w = np.zeros((2, 2))
    e = np.zeros((2, 2))
    p = TdParams(0.0, gamma=0.9, lam=0.5)
    _, e = td_lambda_update(w, e, 0, 0, 0.0, 1, p)
    assert e[0, 0] == 1.0
    _, e = td_lambda_update(w, e, 1, 1, 0.0, 0, p)
    assert e[0, 0] == pytest.approx(0.45)


def test_zero_delta_changes_nothing():
    w = np.full((2, 2), 10.0)
    e = np.ones((2, 2))
    out, _ = td_lambda_update(w, e, 0, 0, 1.0, 1, TdParams(0.3, gamma=0.9, lam=0.7))
    assert np.allclose(out, w)


def test_ann_zero_and_constant():
    x = np.random.default_rng(0).random((10, 5))
    assert np.all(ann_forward(x, AnnRule()) == 0)
    theta = np.zeros(N_ANN_PARAMS)
    theta[-1] = 0.1
    assert np.allclose(ann_forward(x, AnnRule(theta)), 0.1)


def test_ann_gradient_finite_difference():
    rng = np.random.default_rng(4)
    for _ in range(5):
        rule = AnnRule(rng.normal(size=N_ANN_PARAMS))
        x = rng.random(5)
        h = 1e-6
        fd = [(ann_forward(x + h * np.eye(5)[k], rule) - ann_forward(x - h * np.eye(5)[k], rule)) / (2 * h) for k in range(5)]
        np.testing.assert_allclose(ann_input_gradient(x, rule), fd, atol=1e-6)


@given(arrays(np.float64, N_ANN_PARAMS, elements=st.floats(-3, 3)), arrays(np.float64, 5, elements=st.floats(0, 1)))
def test_compiled_matches_numpy(theta, x):
    rule = AnnRule(theta, out_scale=2.0)
    assert _ann_delta(*x, rule.theta, 2.0, False) == pytest.approx(ann_forward(x, rule), abs=1e-12)
    assert abs(ann_forward(x, rule)) <= ann_output_bound(rule) + 1e-12


def test_ann_symmetric_arms_differ_only_through_flag():
    theta = np.zeros(N_ANN_PARAMS)
    theta[1] = 2.0  # hidden unit 0 sees the action flag
    theta[42] = 1.0
    w = np.array([[0.5, 0.5]])
    out = ann_update_all(w, 3, 0, 1.0, AnnRule(theta), 10)
    assert out[0, 0] > out[0, 1]
    flat = np.zeros(N_ANN_PARAMS)
    flat[2] = 2.0  # reward only: both arms move together
    flat[42] = 1.0
    out = ann_update_all(w, 3, 0, 1.0, AnnRule(flat), 10)
    assert out[0, 0] == out[0, 1]


def test_zero_theta_keeps_weights():
    w = np.array([[0.2, 0.9]])
    for t in range(50):
        w = ann_update_all(w, t, t % 2, float(t % 3 == 0), AnnRule(), 50)
    assert np.array_equal(w, [[0.2, 0.9]])


def test_rule_descriptors_round_trip():
    for rule in (Td1Rule(TdParams(0.1, 0.99, 1.0)), TdLambdaRule(TdParams(0.2, 1.0, 0.9, 0.3)),
                 AnnRule(np.arange(50.0), out_scale=10.0)):
        back = parse_rule(rule_to_dict(rule))
        assert type(back) is type(rule)
        assert rule_to_dict(back) == rule_to_dict(rule)
    with pytest.raises(ValueError, match="unknown rule"):
        parse_rule({"rule": "hebbian"})
    with pytest.raises(ValueError):
        AnnRule(np.zeros(49))
