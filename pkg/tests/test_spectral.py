from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

from coexist.errors import CapacityError
from coexist.glauber import RateModel
from coexist.model import CouplingField, LatticeBox, build_box
from coexist.spectral import (
    apply_semigroup,
    build_generator,
    gap_report,
    mixing_time,
    semigroup,
    spectral_gap,
    verify_lemma_F1,
    verify_variance_decay,
    worst_tv,
)

from conftest import random_field


def _single():
    box = LatticeBox.from_sites(2, [(0, 0)])
    return box, CouplingField(box, np.ones(len(box.closed_edges)))


def test_single_site_heat_bath_gap_is_one():
    box, J = _single()
    for beta in (0.0, 0.5, 2.0):
        assert abs(spectral_gap(build_generator(box, J, beta, RateModel.heat_bath(beta))) - 1.0) < 1e-12


def test_two_state_mixing_time():
    box, _ = _single()
    gen = build_generator(box, CouplingField(box, np.zeros(4)), 0.0, RateModel.heat_bath(0.0))
    assert abs(mixing_time(gen) - (1 - math.log(2))) < 1e-6


def test_generator_invariants(box3x3):
    J = random_field(box3x3, 21)
    for model in (RateModel.heat_bath(1.1), RateModel.metropolis(1.1)):
        d = build_generator(box3x3, J, 1.1, model).invariant_defects()
        assert max(d.values()) < 1e-12


def test_semigroup_matches_expm(square4):
    J = random_field(square4, 22)
    gen = build_generator(square4, J, 0.8, RateModel.heat_bath(0.8))
    P = expm(gen.dense() * 0.7)
    f = np.random.default_rng(0).standard_normal(gen.n_states)
    assert np.abs(apply_semigroup(gen, f, 0.7) - P @ f).max() < 1e-10
    assert np.abs(semigroup(gen, 0.7) - P).max() < 1e-10


def test_gap_routes_agree(square4):
    rep = gap_report(build_generator(square4, random_field(square4, 23), 0.5, RateModel.metropolis(0.5)))
    assert rep.agree


def test_worst_tv_decreasing(square4):
    gen = build_generator(square4, random_field(square4, 24), 0.5, RateModel.heat_bath(0.5))
    vals = [worst_tv(gen, t) for t in (0.1, 0.5, 1.0, 3.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_variance_decay_report(square4):
    gen = build_generator(square4, random_field(square4, 25), 0.7, RateModel.heat_bath(0.7))
    f = np.random.default_rng(1).standard_normal(gen.n_states)
    rep = verify_variance_decay(gen, f, [0.0, 0.3, 1.0, 4.0], t_mix=mixing_time(gen))
    assert rep.all_pass
    assert any(not c.gating for c in rep.checks)


def test_f1_slack_nonnegative(box3x3):
    rep = verify_lemma_F1(box3x3, random_field(box3x3, 26), 0.9, 0.8)
    assert rep.all_pass


def test_generator_cap():
    with pytest.raises(CapacityError):
        build_generator(build_box(2, 2), CouplingField.constant(build_box(2, 2), 1.0), 1.0, RateModel.heat_bath(1.0))
