from __future__ import annotations

import math

import numpy as np
import pytest

from coexist.errors import DomainError
from coexist.model import CouplingField, DisorderSpec
from coexist.tension import (
    RateFunctionModel,
    RectSpec,
    centered_rect,
    clopper_pearson,
    disconnection_prob,
    estimate_quenched_tension,
    rate_model_eval,
    surface_tension_tau,
)

from conftest import random_field


def test_rect_edge_counts():
    assert len(centered_rect(2, 2, 1.0).interior_edges()) == 2
    assert len(centered_rect(2, 3, 0.5).interior_edges()) == 12
    assert len(centered_rect(2, 3, 1.0).interior_edges()) == 22


def test_zero_couplings_give_zero_tension():
    rect = centered_rect(2, 3, 0.5)
    J = CouplingField(rect.box(), np.zeros(len(rect.box().closed_edges)))
    res = surface_tension_tau(rect, J, 1.0)
    assert res.tau == 0.0 and res.prob.prob == 1.0


def test_tension_increases_with_beta():
    rect = centered_rect(2, 3, 0.5)
    J = random_field(rect.box(), 31, low=0.2)
    taus = [surface_tension_tau(rect, J, b).tau for b in (0.3, 0.8, 1.5)]
    assert taus[0] < taus[1] < taus[2]


def test_single_edge_decrease_lowers_tension():
    rect = centered_rect(2, 2, 1.5)
    J = random_field(rect.box(), 32, low=0.2)
    base = surface_tension_tau(rect, J, 1.0).tau
    for e in rect.interior_edges():
        assert surface_tension_tau(rect, J.replace({e: 0.0}), 1.0).tau <= base + 1e-14


def test_mc_agrees_with_exact():
    rect = centered_rect(2, 3, 0.5)
    J = random_field(rect.box(), 33, low=0.2)
    ex = disconnection_prob(rect, J, 0.8, "exact")
    mc = disconnection_prob(rect, J, 0.8, "mc", budget=3000, seed=4)
    assert abs(mc.prob - ex.prob) <= 4 * mc.stderr


def test_clopper_pearson_brackets():
    lo, hi = clopper_pearson(5, 100)
    assert lo < 0.05 < hi
    assert clopper_pearson(0, 10)[0] == 0.0


def test_quenched_table_shape():
    tab = estimate_quenched_tension(2, 1.0, DisorderSpec.bernoulli(0.2, seed=1), [2, 3], replicas=2, mode="exact")
    assert len(tab.rows) == 4 and len(tab.summary) == 2


def test_bernoulli_rate_function():
    m = RateFunctionModel.bernoulli_bound(math.exp(-1.0))
    assert rate_model_eval(m, (1, 0), 0.5) == pytest.approx(1.0)
    assert rate_model_eval(m, (1, 1), 0.5) == pytest.approx(math.sqrt(2))
    bounded = RateFunctionModel.bernoulli_bound(0.5, tau_min=0.1, tau_q=0.9)
    assert rate_model_eval(bounded, (0, 1), 0.05) == math.inf
    assert rate_model_eval(bounded, (0, 1), 0.95) == 0.0


def test_table_rate_function_interpolates_nodes():
    m = RateFunctionModel.table([0.0, 0.5, 1.0], [3.0, 1.0, 0.0])
    for x, y in [(0.0, 3.0), (0.5, 1.0), (1.0, 0.0)]:
        assert rate_model_eval(m, (1, 0), x) == pytest.approx(y)


def test_bad_rect():
    with pytest.raises(DomainError):
        RectSpec((0.0, 0.0), -1.0, 1.0)
