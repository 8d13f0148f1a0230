from __future__ import annotations

import numpy as np
import pytest

from neuro_l2l.baselines import mab_references
from neuro_l2l.emulator import EmulatorConfig, run_trial
from neuro_l2l.environments import Mab, MabFamily, MdpFamily
from neuro_l2l.hyperparams import realize
from neuro_l2l.l2l import (
    TAG_EVAL,
    TAG_TRAIN,
    Evaluator,
    Experiment,
    TaskResult,
    bootstrap_ci,
    evaluate_fitness,
    evaluate_theta,
    random_theta_baseline,
    run_l2l,
    task_rng,
)
from neuro_l2l.optimizers import OptimizerSpec
from neuro_l2l.plasticity import Td1Rule, TdLambdaRule, TdParams

MAB = Experiment(MabFamily(True), Td1Rule(TdParams(0.1, gamma=1.0)), EmulatorConfig(), 50)
MDP = Experiment(MdpFamily(2, 3, 0.9), TdLambdaRule(TdParams(0.1, gamma=0.9, lam=0.5)), EmulatorConfig(), 60)


def _fields(rec):
    return (rec.candidate_id, rec.generation, rec.mean_fitness, rec.theta.z.tolist(), rec.per_task_scores.tolist(),
            rec.raw.tolist())


def test_evaluate_fitness_is_pure():
    z = MAB.space.z_center
    a = evaluate_fitness(z, MAB, 8, 3, 2, 5)
    b = evaluate_fitness(z, MAB, 8, 3, 2, 5)
    assert _fields(a) == _fields(b)
    assert a.mean_fitness == pytest.approx(a.per_task_scores.mean())
    assert _fields(evaluate_fitness(z, MAB, 8, 4, 2, 5)) != _fields(a)


def test_streams_differ_by_every_key():
    draws = {tuple(task_rng(*key).random(2)) for key in
             [(1, 0, 0, 0, 0), (2, 0, 0, 0, 0), (1, 1, 0, 0, 0), (1, 0, 1, 0, 0), (1, 0, 0, 1, 0), (1, 0, 0, 0, 1)]}
    assert len(draws) == 6


def _certain_bandit_scores(n=5):
    task = Mab(np.array([1.0, 0.0]))
    out = []
    for seed in range(n):
        hp = MAB.space.decode(MAB.space.sample_prior(np.random.default_rng(seed)))
        rule, cfg = realize(hp, MAB.rule, MAB.emulator, 100)
        raw = run_trial(task, rule, cfg, 100, np.random.default_rng(seed)).raw_return
        out.append(TaskResult(raw, *mab_references(task, 100)).normalized)
    return np.array(out)


def test_certain_bandit_score_never_beats_optimal():
    assert np.all(_certain_bandit_scores() <= 1.05)


@pytest.mark.xfail(strict=True, reason="an agent locked onto the empty arm scores -1, below the random reference")
def test_certain_bandit_score_is_sandwiched():
    assert np.all(_certain_bandit_scores() >= 0.0)


def test_raw_fitness_is_scaled_to_unit_interval():
    rec = evaluate_fitness(MDP.space.z_center, MDP, 6, 1, 0, 0)
    assert np.all(rec.per_task_scores >= 0) and np.all(rec.per_task_scores <= 1)


def test_zero_generations_returns_center():
    res = run_l2l(MAB, OptimizerSpec("ce"), N=4, generations=0, master_seed=1, pop=8, n_eval=0)
    np.testing.assert_array_equal(res.best.z, MAB.space.z_center)
    assert res.history == [] and res.evaluation is None


def test_same_seed_same_history():
    kw = dict(N=3, generations=2, master_seed=7, pop=8, n_eval=4)
    a = run_l2l(MAB, OptimizerSpec("ce"), **kw)
    b = run_l2l(MAB, OptimizerSpec("ce"), **kw)
    assert [_fields(r) for r in a.history] == [_fields(r) for r in b.history]
    np.testing.assert_array_equal(a.best.z, b.best.z)
    assert len(a.history) == 16


@pytest.mark.slow
def test_worker_count_does_not_change_records():
    zs = MAB.space.sample_prior(np.random.default_rng(0), 6)
    with Evaluator(1) as ev:
        serial = ev.map(zs, MAB, 4, 9, 3, TAG_TRAIN)
    with Evaluator(3) as ev:
        pooled = ev.map(zs, MAB, 4, 9, 3, TAG_TRAIN)
    assert [_fields(r) for r in serial] == [_fields(r) for r in pooled]


def test_shared_tasks_are_common_across_candidates():
    exp = Experiment(MAB.family, MAB.rule, MAB.emulator, MAB.T, shared_tasks=True)
    zs = MAB.space.sample_prior(np.random.default_rng(3), 2)
    a, b = (evaluate_fitness(z, exp, 5, 1, 0, cid) for cid, z in enumerate(zs))
    np.testing.assert_array_equal(a.optimal_ref, b.optimal_ref)
    np.testing.assert_array_equal(a.random_ref, b.random_ref)


def test_random_theta_baseline_pairs_with_evaluation():
    rnd = random_theta_baseline(MAB, 6, 11)
    fixed = evaluate_theta(MAB, MAB.space.z_center, 6, 11)
    np.testing.assert_array_equal(rnd.optimal_ref, fixed.optimal_ref)
    assert rnd.candidate_id == -1


def test_bootstrap_ci_covers_mean():
    x = np.random.default_rng(0).normal(1.0, 1.0, 400)
    lo, hi = bootstrap_ci(x, np.mean, n_boot=500)
    assert lo < x.mean() < hi and hi - lo < 0.3


def test_eval_tag_is_separate_from_training():
    z = MAB.space.z_center
    assert _fields(evaluate_fitness(z, MAB, 4, 1, 0, 0, TAG_TRAIN)) != _fields(evaluate_fitness(z, MAB, 4, 1, 0, 0, TAG_EVAL))
