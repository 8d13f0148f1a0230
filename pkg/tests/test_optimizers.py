from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuro_l2l.hyperparams import space_for
from neuro_l2l.environments import MabFamily, MdpFamily
from neuro_l2l.optimizers import (
    CeState,
    CrossEntropy,
    EsState,
    GdState,
    GradientDescent,
    OptimizerSpec,
    SaState,
    build_optimizer,
    ce_fit,
    ce_step,
    centered_ranks,
    es_step,
    gd_step,
    gradient_from_probes,
    central_difference_probes,
    linear_temperature,
    mirrored_noise,
    parse_optimizer,
    sa_acceptance,
    sa_step,
)
from neuro_l2l.plasticity import AnnRule, Td1Rule, TdLambdaRule, TdParams

# -- cross-entropy -------------------------------------------------------------


def test_ce_fit_mean_of_two_elites():
    mean, cov = ce_fit(np.array([[0.0, 0.0], [2.0, 2.0]]))
    np.testing.assert_allclose(mean, [1.0, 1.0])
    np.testing.assert_allclose(cov, np.ones((2, 2)) + 1e-6 * np.eye(2))


def test_ce_needs_two_elites():
    state = CeState(np.zeros(2), np.eye(2))
    with pytest.raises(ValueError):
        ce_step(state, np.zeros((4, 2)), np.arange(4.0))  # ceil(0.25 * 4) = 1 elite


def test_ce_identical_elites_give_identical_fit():
    rng = np.random.default_rng(0)
    cands = rng.normal(size=(32, 3))
    fit = -np.sum(cands**2, axis=1)
    state = CeState(np.zeros(3), np.eye(3))
    a, b = ce_step(state, cands, fit), ce_step(state, cands.copy(), fit.copy())
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.cov, b.cov)


def test_ce_covariance_is_psd():
    rng = np.random.default_rng(1)
    cands = rng.normal(size=(32, 6))
    state = ce_step(CeState(np.zeros(6), np.eye(6)), cands, rng.normal(size=32))
    np.testing.assert_allclose(state.cov, state.cov.T)
    assert np.linalg.eigvalsh(state.cov).min() >= 1e-6 * 0.999


def _ce_on_quadratic(target, seed, **kw):
    d = target.size
    opt = CrossEntropy(np.full(d, -5.0), np.full(d, 5.0), np.zeros(d), np.full(d, 2.0), np.random.default_rng(seed),
                       pop=32, elite_frac=0.25, **kw)
    best = []
    for _ in range(30):
        z = opt.ask()
        f = -np.sum((z - target) ** 2, axis=1)
        best.append(f.max())
        opt.tell(f)
    return np.linalg.norm(opt.state.mean - target), np.array(best)


def test_ce_converges_on_quadratic():
    target = np.array([0.7, -1.2])
    errs = np.array([_ce_on_quadratic(target, seed)[0] for seed in range(20)])
    # plain refits occasionally collapse before reaching the optimum
    assert np.mean(errs <= 0.05) >= 0.85


def test_smoothed_ce_converges_in_three_dims():
    target = np.array([0.7, -1.2, 2.0])
    for seed in range(20):
        err, best = _ce_on_quadratic(target, seed, smoothing=0.5)
        assert err <= 0.05
        assert np.all(np.diff(np.maximum.accumulate(best)) >= 0)


# -- evolution strategies ------------------------------------------------------


def test_es_equal_fitness_does_not_move():
    eps = mirrored_noise(np.random.default_rng(0), 8, 3)
    state = EsState(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(es_step(state, eps, np.full(8, 4.2)).base, state.base)


def test_es_follows_linear_landscape():
    c = np.random.default_rng(7).normal(size=5)
    eps = mirrored_noise(np.random.default_rng(11), 512, 5)
    state = EsState(np.zeros(5), sigma=0.1)
    step = es_step(state, eps, (state.base + state.sigma * eps) @ c).base - state.base
    assert step @ c / (np.linalg.norm(step) * np.linalg.norm(c)) > 0.9


@given(st.floats(-1e3, 1e3))
def test_es_shift_invariance(shift):
    eps = mirrored_noise(np.random.default_rng(2), 16, 4)
    fit = np.random.default_rng(3).normal(size=16)
    state = EsState(np.zeros(4))
    np.testing.assert_array_equal(es_step(state, eps, fit).base, es_step(state, eps, fit + shift).base)


def test_es_mirrored_pair_moves_toward_winner():
    e = np.array([[0.3, -0.4], [-0.3, 0.4]])
    new = es_step(EsState(np.zeros(2)), e, np.array([1.0, 0.0])).base
    assert new @ e[0] > 0


def test_centered_ranks_ties_and_range():
    r = centered_ranks(np.array([3.0, 1.0, 3.0, 2.0]))
    np.testing.assert_allclose(r, np.array([2.5, 0.0, 2.5, 1.0]) / 3 - 0.5)
    assert r.min() >= -0.5 and r.max() <= 0.5


def test_mirrored_noise_needs_even_count():
    with pytest.raises(ValueError):
        mirrored_noise(np.random.default_rng(0), 3, 2)


# -- simulated annealing -------------------------------------------------------


@given(st.floats(-10, 10), st.floats(0, 10), st.floats(1e-6, 10))
def test_sa_improvements_always_accepted(f_old, gain, temp):
    assert sa_acceptance(f_old + gain, f_old, temp) == 1.0


def test_sa_half_probability_example():
    T = 0.37
    assert sa_acceptance(1.0 - T * math.log(2), 1.0, T) == pytest.approx(0.5, abs=1e-15)


def test_sa_cold_limit_rejects_worse():
    assert sa_acceptance(0.0, 1.0, 1e-4) < 1e-300


def test_sa_temperature_non_increasing():
    temps = [linear_temperature(0.1, 1e-3, g, 20) for g in range(25)]
    assert temps[0] == 0.1 and temps[19] == pytest.approx(1e-3)
    assert np.all(np.diff(temps) <= 0) and min(temps) > 0


def test_sa_step_chains_climb():
    rng = np.random.default_rng(5)
    f = lambda z: -np.sum(z**2, axis=1)  # noqa: E731
    state = SaState(np.full((4, 2), 3.0), np.full(4, np.nan), 0.5, t0=0.5, t_min=1e-3, step_scale=0.5,
                    generations=200)
    first = None
    for _ in range(200):
        state = sa_step(state, rng, f)
        first = state.fitness.copy() if first is None else first
    assert np.all(state.fitness >= first - 1e-12)
    assert state.fitness.max() > -0.5


# -- gradient descent ----------------------------------------------------------


def test_gd_recovers_linear_gradient():
    c = np.array([0.5, -2.0, 3.25, 0.0])
    theta = np.array([0.1, 0.2, -0.3, 1.0])
    probes = central_difference_probes(theta, 0.01)
    np.testing.assert_allclose(gradient_from_probes(probes @ c, 0.01), c, atol=1e-8)


def test_gd_zero_step_is_noop():
    state = GdState(np.array([1.0, -1.0]), step_size=0.0)
    new = gd_step(state, lambda z: np.sin(z).sum(axis=1))
    np.testing.assert_array_equal(new.theta, state.theta)


def test_gd_bowl_is_monotone():
    f = lambda z: -np.sum((z - 1.0) ** 2, axis=1)  # noqa: E731
    state = GdState(np.array([-2.0, 3.0]), probe_eps=1e-3, step_size=0.1)
    values = [f(state.theta[None])[0]]
    while np.linalg.norm(state.theta - 1.0) > 0.1:
        state = gd_step(state, f)
        values.append(f(state.theta[None])[0])
    assert np.all(np.diff(values) > 0)


def test_gd_rejects_nonpositive_probe():
    with pytest.raises(ValueError):
        gd_step(GdState(np.zeros(2), probe_eps=0.0), lambda z: z.sum(axis=1))


def test_gd_random_directions_unbiased_on_linear():
    c = np.array([1.0, -2.0, 0.5])
    opt = GradientDescent(np.full(3, -9.0), np.full(3, 9.0), np.zeros(3), np.random.default_rng(0), step_size=1.0,
                          n_dirs=2000)
    opt.tell(opt.ask() @ c)
    np.testing.assert_allclose(opt.state.theta, c, atol=0.25)


# -- construction and bounds ---------------------------------------------------

SPACES = {
    "mdp": space_for(MdpFamily(2, 4, 0.9), TdLambdaRule(TdParams(0.1, gamma=0.9, lam=0.5)), 500),
    "mab": space_for(MabFamily(True), Td1Rule(TdParams(0.1, gamma=1.0)), 100),
    "ann": space_for(MabFamily(True), AnnRule(), 100),
}


@pytest.mark.parametrize("name", ["ce", "es", "sa", "gd"])
@pytest.mark.parametrize("space", list(SPACES))
def test_candidates_decode_inside_bounds(name, space):
    sp = SPACES[space]
    opt = build_optimizer(OptimizerSpec(name), sp, np.random.default_rng(0), pop=8, generations=3)
    rng = np.random.default_rng(1)
    for _ in range(3):
        z = opt.ask()
        for row in z:
            hp = sp.decode(row)
            for v, (lo, hi), enc in zip(hp.values, hp.bounds, hp.encoding):
                if enc.value != "unbounded":
                    assert lo <= v <= hi
        opt.tell(rng.normal(size=len(z)))


def test_parse_optimizer_forms():
    assert parse_optimizer("es") == OptimizerSpec("es")
    assert parse_optimizer({"name": "ce", "pop": 8}).options == {"pop": 8}
    with pytest.raises(ValueError):
        parse_optimizer({"pop": 8})
    with pytest.raises(ValueError):
        parse_optimizer("bfgs")
