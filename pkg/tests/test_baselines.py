from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import brute_force_index

from neuro_l2l.baselines import (
    expected_discounted_return,
    gittins_indices,
    gittins_policy_run,
    greedy_policy,
    mab_references,
    mdp_references,
    optimal_policy,
    policy_matrix,
    policy_rollout,
    random_policy_run,
    value_iteration,
)
from neuro_l2l.environments import Mab, MabFamily, Mdp, mdp_step, normalized_score, sample_mdp
from neuro_l2l.l2l import draw_task


def test_vi_geometric_series():
    mdp = Mdp(np.ones((1, 1, 1)), np.full((1, 1, 1), 0.5), 0.9)
    assert value_iteration(mdp).q[0, 0] == pytest.approx(5.0, abs=1e-7)


def test_vi_zero_rewards():
    mdp = sample_mdp(3, 2, 0.9, np.random.default_rng(0))
    mdp = Mdp(mdp.p, np.zeros_like(mdp.r), 0.9)
    assert np.all(value_iteration(mdp).q == 0)


def test_vi_matches_monte_carlo():
    """Rollouts of the greedy policy from each (s, a) estimate Q* independently."""
    mdp = sample_mdp(2, 4, 0.9, np.random.default_rng(5))
    q = value_iteration(mdp).q
    pi = greedy_policy(q)
    cdf = np.cumsum(mdp.p, axis=2)
    rng = np.random.default_rng(1)
    horizon, n = 150, 100_000  # 0.9**150 < 2e-7
    for s in range(2):
        for a in range(4):
            state = np.full(n, s)
            act = np.full(n, a)
            ret = np.zeros(n)
            for t in range(horizon):
                u = rng.random(n)
                nxt = (u >= cdf[state, act, 0]).astype(np.int64)  # two states
                ret += 0.9**t * mdp.r[state, act, nxt]
                state, act = nxt, pi[nxt]
            assert ret.mean() == pytest.approx(q[s, a], abs=0.02)


def test_vi_contraction():
    mdp = sample_mdp(3, 3, 0.9, np.random.default_rng(2))
    q_star = value_iteration(mdp).q
    q = np.zeros_like(q_star)
    prev = np.abs(q - q_star).max()
    for _ in range(30):
        q = np.einsum("sat,sat->sa", mdp.p, mdp.r + 0.9 * q.max(axis=1)[None, None, :])
        gap = np.abs(q - q_star).max()
        assert gap <= 0.9 * prev + 1e-9
        prev = gap


def test_greedy_policy_ties_and_invariance():
    assert greedy_policy(np.array([[0.1, 0.9]]))[0] == 1
    assert greedy_policy(np.array([[0.5, 0.5]]))[0] == 0
    q = np.random.default_rng(0).random((4, 3))
    assert np.array_equal(greedy_policy(3.0 * q - 2.0), greedy_policy(q))


def test_vi_picks_rewarded_loop():
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = 1  # a0 loops on S1 with reward 1
    p[0, 1, 1] = 1  # a1 goes to S2
    p[1, :, 1] = 1
    r = np.zeros_like(p)
    r[0, 0, 0] = 1.0
    pi = greedy_policy(value_iteration(Mdp(p, r, 0.9)))
    assert pi[0] == 0


def test_reference_returns_exact():
    mdp = sample_mdp(2, 2, 0.9, np.random.default_rng(9))
    rnd, opt = mdp_references(mdp, 0, 50, 0.9)
    pi = policy_matrix(greedy_policy(value_iteration(mdp)), 2)
    assert opt == pytest.approx(expected_discounted_return(mdp, pi, 0, 50, 0.9))
    assert opt >= rnd
    assert mab_references(Mab(np.array([0.3, 0.7])), 100) == pytest.approx((50.0, 70.0))


def test_rollout_pairs_with_uniforms():
    mab = Mab(np.array([0.2, 0.9]))
    u = np.random.default_rng(0).random(1000)
    traj = policy_rollout(mab, optimal_policy(mab), 0, u)
    assert np.all(traj.actions == 1)
    assert np.array_equal(traj.rewards, (u < 0.9).astype(float))


# -- Gittins -------------------------------------------------------------------


def test_gittins_index_11_against_brute_force():
    fast = float(gittins_indices(1, 1)[0])
    slow = brute_force_index(1, 1)
    assert fast == pytest.approx(slow, abs=1e-6)
    assert 0.69 <= fast <= 0.71


@pytest.mark.parametrize("a,b", [(2, 1), (1, 3), (5, 4)])
def test_gittins_other_states_against_brute_force(a, b):
    assert float(gittins_indices(a, b)[0]) == pytest.approx(brute_force_index(a, b), abs=1e-6)


def test_gittins_monotone(gittins_100):
    t = gittins_100
    assert t(2, 1) > t(1, 1) > t(1, 2)
    for a, b in t.states():
        if a + b + 1 <= t.horizon + 2:
            assert t(a + 1, b) >= t(a, b) - 1e-12
            assert t(a, b + 1) <= t(a, b) + 1e-12


def test_gittins_confident_posterior():
    idx = float(gittins_indices(500, 1)[0])
    assert 500 / 501 - 1e-9 <= idx <= 1.0


def test_gittins_policy_on_certain_arm(gittins_100):
    mab = Mab(np.array([1.0, 0.0]))
    traj = gittins_policy_run(mab, 100, gittins_100, np.random.default_rng(0))
    assert traj.raw_return >= 99


def test_gittins_between_random_and_oracle(gittins_100):
    fam = MabFamily(structured=False)
    rng = np.random.default_rng(0)
    g, r, o, rnd = [], [], [], []
    for _ in range(1000):
        mab = draw_task(fam, rng)
        lo, hi = mab_references(mab, 100)
        g.append(gittins_policy_run(mab, 100, gittins_100, rng).raw_return)
        r.append(random_policy_run(mab, 100, rng).raw_return)
        rnd.append(lo)
        o.append(hi)
    score = (np.sum(g) - np.sum(rnd)) / (np.sum(o) - np.sum(rnd))
    assert 0 < score < 1
    assert abs(np.mean(r) - np.mean(rnd)) < 1.0


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_mab_reference_sandwich(p1, p2):
    lo, hi = mab_references(Mab(np.array([p1, p2])), 100)
    assert lo <= hi
    if p1 != p2:
        assert normalized_score(hi, lo, hi) == 1.0
