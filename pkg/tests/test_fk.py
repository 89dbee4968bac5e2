from __future__ import annotations

import numpy as np
import pytest

from coexist.errors import CapacityError
from coexist.fk import (
    ClusterConfig,
    FKParams,
    cluster_count,
    edge_chain_kernel,
    es_joint_exact,
    fk_edge_dynamics,
    fk_exact,
)
from coexist.model import gibbs_exact

from conftest import random_field


def test_es_marginals(square4):
    J = random_field(square4, 11)
    es = es_joint_exact(square4, J, 0.8)
    assert np.abs(es.sigma_marginal() - gibbs_exact(square4, J, 0.8).probs).max() < 1e-12
    fk = fk_exact(square4.closed_edges, FKParams(2.0, 0.8, J), "wired")
    assert np.abs(es.omega_marginal() - fk.probs).max() < 1e-12


def test_cluster_count_wired_vs_free(square4):
    edges = square4.closed_edges
    closed = np.zeros(len(edges), dtype=bool)
    assert cluster_count(edges, closed, "free") > cluster_count(edges, closed, "wired")
    opened = np.ones(len(edges), dtype=bool)
    assert cluster_count(edges, opened, "wired") == 1


def test_q1_is_bernoulli_percolation(square4):
    J = random_field(square4, 12)
    params = FKParams(1.0, 0.7, J)
    tab = fk_exact(square4.interior_edges, params, "free")
    p = params.p(square4.interior_edges)
    for j in range(len(p)):
        assert abs(tab.edge_marginal(j) - p[j]) < 1e-12


def test_edge_chain_kernel_is_stochastic_and_stationary(square4):
    J = random_field(square4, 13)
    params = FKParams(2.0, 0.9, J)
    edges = square4.interior_edges
    K = edge_chain_kernel(edges, params, "wired")
    assert np.allclose(K.sum(axis=1), 1.0)
    pi = fk_exact(edges, params, "wired").probs
    assert np.abs(pi @ K - pi).max() < 1e-12


def test_edge_chain_is_reproducible(square4):
    J = random_field(square4, 14)
    a = fk_edge_dynamics(square4.interior_edges, FKParams(2.0, 1.0, J), steps=100, seed=5).config()
    b = fk_edge_dynamics(square4.interior_edges, FKParams(2.0, 1.0, J), steps=100, seed=5).config()
    assert np.array_equal(a.omega, b.omega)


def test_cluster_config_roundtrip(square4):
    cfg = ClusterConfig.from_index(square4.interior_edges, 5)
    assert ClusterConfig.loads(cfg.dumps()).index() == 5


def test_capacity_cap(box3x3):
    J = random_field(box3x3, 15)
    with pytest.raises(CapacityError):
        fk_exact(box3x3.closed_edges, FKParams(2.0, 1.0, J), cap=10)
