from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuro_l2l.emulator import EmulatorConfig
from neuro_l2l.environments import MabFamily, MdpFamily
from neuro_l2l.hyperparams import (
    Encoding,
    ParamSpec,
    hyperparams_from_dict,
    hyperparams_to_dict,
    realize,
    space_for,
)
from neuro_l2l.plasticity import AnnRule, Td1Rule, TdLambdaRule, TdParams

TDL = TdLambdaRule(TdParams(0.1, gamma=0.9, lam=0.5))
TD1 = Td1Rule(TdParams(0.1, gamma=1.0))


def test_dimensions_match_experiments():
    mdp = space_for(MdpFamily(2, 4, 0.9), TDL, 500)
    assert mdp.names == ["alpha", "gamma", "lambda", "xi", "zeta", "f_rescale", "w_max", "w_min"]
    assert space_for(MabFamily(True), TD1, 100).names == ["alpha0", "alpha_decay", "xi", "zeta"]
    ann = space_for(MabFamily(True), AnnRule(), 100)
    assert ann.dim == 52 and ann.names[-2:] == ["xi", "zeta"]


def test_ann_space_needs_bandit():
    with pytest.raises(ValueError):
        space_for(MdpFamily(2, 4, 0.9), AnnRule(), 100)


@pytest.mark.parametrize("enc,lo,hi", [("linear", 0.0, 63.0), ("log", 1e-3, 1.0), ("sigmoid", 0.0, 1.0)])
@given(u=st.floats(0.001, 0.999))
def test_encode_decode_round_trip(enc, lo, hi, u):
    spec = ParamSpec("p", lo, hi, Encoding(enc))
    value = lo + u * (hi - lo)
    if enc == "sigmoid":
        # the encoded box is [-1, 1], i.e. values within sigmoid(+-8) of the ends
        value = lo + (hi - lo) * min(max(u, 0.01), 0.99)
    assert spec.decode(spec.encode(value)) == pytest.approx(value, rel=1e-9, abs=1e-12)


@given(z=st.floats(-1e6, 1e6))
def test_decode_stays_in_bounds(z):
    for enc, lo, hi in (("linear", 0.0, 63.0), ("log", 1e-3, 1.0), ("sigmoid", 0.0, 1.0)):
        v = ParamSpec("p", lo, hi, Encoding(enc)).decode(z)
        assert lo <= v <= hi


def test_clip_and_prior_inside_box():
    sp = space_for(MdpFamily(2, 4, 0.9), TDL, 500)
    z = sp.sample_prior(np.random.default_rng(0), 100)
    assert np.all(z >= sp.z_lo) and np.all(z <= sp.z_hi)
    np.testing.assert_array_equal(sp.clip(np.full(sp.dim, 9.0)), sp.z_hi)


def test_dict_round_trip_through_json():
    sp = space_for(MabFamily(True), AnnRule(), 100)
    hp = sp.decode(sp.sample_prior(np.random.default_rng(1)))
    back = hyperparams_from_dict(sp, json.loads(json.dumps(hyperparams_to_dict(hp))))
    np.testing.assert_array_equal(back.z, hp.z)


def test_from_values_matches_names():
    sp = space_for(MabFamily(True), TD1, 100)
    hp = sp.from_values({"alpha0": 0.2, "alpha_decay": 0.9, "xi": 10.0, "zeta": 30.0})
    np.testing.assert_allclose(hp.values, [0.2, 0.9, 10.0, 30.0])
    with pytest.raises(ValueError):
        sp.from_values({"alpha0": 0.2})
    with pytest.raises(ValueError):
        hyperparams_from_dict(sp, {"names": ["a", "b", "c", "d"], "values": [0, 0, 0, 0]})


def test_realize_applies_values():
    fam = MdpFamily(2, 4, 0.9)
    sp = space_for(fam, TDL, 500)
    hp = sp.from_values([0.05, 0.8, 0.3, 12.0, 20.0, 0.1, 60.0, 5.0])
    rule, cfg = realize(hp, TDL, EmulatorConfig(), 500)
    assert rule.params.alpha0 == pytest.approx(0.05)
    assert rule.params.gamma == pytest.approx(0.8)
    assert rule.params.lam == pytest.approx(0.3)
    assert (cfg.xi, cfg.zeta, cfg.w_max, cfg.w_min) == pytest.approx((12.0, 20.0, 60.0, 5.0))
    assert cfg.rescale_period == 10


def test_realize_ann_keeps_out_scale():
    sp = space_for(MabFamily(False), AnnRule(out_scale=10.0), 100)
    z = sp.sample_prior(np.random.default_rng(2))
    rule, _ = realize(sp.decode(z), AnnRule(out_scale=10.0), EmulatorConfig(), 100)
    assert rule.out_scale == 10.0
    np.testing.assert_array_equal(rule.theta, z[:50])
