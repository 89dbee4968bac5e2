from __future__ import annotations

import math

import numpy as np
import pytest

from coexist.errors import ModelError
from coexist.glauber import (
    RateModel,
    check_rate_axioms,
    combine_disorder,
    estimate_autocorrelation,
    exhaustive_probes,
    flip_count_bound_check,
    poisson_tv,
    simulate,
    simulate_coupled,
)
from coexist.model import CouplingField, SpinConfig, build_box
from coexist.spectral import build_generator, exact_autocorrelation

from conftest import random_field


@pytest.mark.parametrize("make", [RateModel.heat_bath, RateModel.metropolis])
def test_axioms_hold_for_standard_models(square4, make):
    model = make(0.9)
    rep = check_rate_axioms(model, list(exhaustive_probes(square4, random_field(square4, 4))))
    assert rep.all_pass, rep.details


def test_heat_bath_rate_values():
    m = RateModel.heat_bath(1.0)
    # flipping against a field h costs exp(-beta h) relative to flipping with it
    assert math.isclose(m.rate_h(0.0), 0.5)
    assert math.isclose(m.rate_h(2.0) / m.rate_h(-2.0), math.exp(-2.0))


def test_custom_rate_without_detailed_balance_is_flagged(square4):
    m = RateModel.custom(1.0, [-4, 0, 4], [1.0, 1.0, 1.0])
    rep = check_rate_axioms(m, list(exhaustive_probes(square4, random_field(square4, 5))))
    assert not rep.passed["detailed_balance"]


def test_replay_reproduces_final_state(box3x3):
    J = random_field(box3x3, 6)
    traj = simulate(box3x3, J, RateModel.heat_bath(0.7), SpinConfig.uniform(box3x3, 1), 5.0, seed=1)
    assert np.array_equal(traj.replay().spins, traj.final.spins)
    assert np.all(np.diff(traj.times) > 0)
    again = simulate(box3x3, J, RateModel.heat_bath(0.7), SpinConfig.uniform(box3x3, 1), 5.0, seed=1)
    assert np.array_equal(again.times, traj.times)


def test_coupled_run_preserves_order(box3x3):
    J = random_field(box3x3, 7)
    run = simulate_coupled(box3x3, J, RateModel.metropolis(1.0), SpinConfig.uniform(box3x3, -1),
                           SpinConfig.uniform(box3x3, 1), 50.0, seed=2)
    assert run.order_violations == 0


def test_flip_count_report(box3x3):
    traj = simulate(box3x3, random_field(box3x3, 8), RateModel.heat_bath(0.5), SpinConfig.uniform(box3x3, 1),
                    3.0, seed=3)
    rep = flip_count_bound_check(traj)
    assert rep.accepted_le_attempts and rep.passed


def test_poisson_tv_small_for_poisson_samples():
    g = np.random.default_rng(0)
    assert poisson_tv(g.poisson(3.0, size=5000), 3.0) < 0.03
    assert poisson_tv(np.full(100, 10), 3.0) > 0.9


def test_combine_disorder_single_field_is_power():
    V = np.array([[0.25, 0.5]])
    est, se = combine_disorder(V, np.array([[0.01, 0.02]]), 0.5)
    assert np.allclose(est, [0.5, math.sqrt(0.5)])
    assert np.all(se > 0)


def test_autocorrelation_at_zero_matches_exact(square4):
    J = random_field(square4, 9, low=0.3)
    model = RateModel.heat_bath(0.6)
    times = [0.0, 0.5]
    curve = estimate_autocorrelation(square4, [J], model, 1.0, times, replicas=8, n_initial=64, seed=1)
    exact = exact_autocorrelation(build_generator(square4, J, 0.6, model), times, 1.0)
    assert abs(curve.estimate[0] - exact[0]) <= 4 * curve.stderr[0] + 1e-12


def test_negative_beta_rejected():
    with pytest.raises((ModelError, ValueError)):
        RateModel.heat_bath(-1.0)
