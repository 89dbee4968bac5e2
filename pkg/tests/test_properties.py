"""Randomised invariants."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from coexist.geometry import (
    Disk,
    GridProfile,
    Rect,
    SurfaceTensionFn,
    barrier_disk,
    barrier_square,
    decompose_symmetric,
    l1_distance,
    surface_energy_quenched,
)
from coexist.glauber import RateModel
from coexist.model import CouplingField, LatticeBox
from coexist.spectral import build_generator, verify_lemma_F1

L1 = SurfaceTensionFn.l1()
BOX = LatticeBox.from_sites(2, [(0, 0), (1, 0), (0, 1), (1, 1)])
N_EDGES = len(BOX.closed_edges)

couplings = st.lists(st.floats(0.0, 1.0), min_size=N_EDGES, max_size=N_EDGES)


@settings(max_examples=40, deadline=None)
@given(couplings, st.floats(0.0, 3.0), st.sampled_from(["heat_bath", "metropolis"]))
def test_generator_reversible(vals, beta, kind):
    model = getattr(RateModel, kind)(beta)
    d = build_generator(BOX, CouplingField(BOX, np.array(vals)), beta, model).invariant_defects()
    assert d["reversibility"] < 1e-12 and d["stationarity"] < 1e-12


@settings(max_examples=30, deadline=None)
@given(couplings, st.floats(0.05, 2.5), st.floats(0.0, 5.0))
def test_f1_slack(vals, beta, t):
    assert verify_lemma_F1(BOX, CouplingField(BOX, np.array(vals)), beta, t).all_pass


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 0.5), st.floats(0.0, 1.0))
def test_barrier_ordering(r, lam):
    # the disk needs less than the square of the same half-width
    assert 0.0 <= barrier_disk(r, lam) <= barrier_square(r, lam) + 1e-15
    assert barrier_square(r, lam) <= 2 * r


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.45), st.floats(0.05, 0.45), st.floats(0.01, 0.3), st.floats(0.01, 0.3))
def test_l1_distance_symmetric_triangle(x, y, r1, r2):
    a, b = Disk((0.5, 0.5), min(r1, 0.45)), Rect(x, y, x + r2, y + r2)
    c = Disk((x + 0.1, y + 0.1), r2 / 2)
    assert math.isclose(l1_distance(a, b), l1_distance(b, a), abs_tol=1e-10)
    assert l1_distance(a, b) <= l1_distance(a, c) + l1_distance(c, b) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_symmetric_decomposition_corrected(seed):
    g = np.random.default_rng(seed)
    u = GridProfile(g.random((8, 8)) < g.uniform(0.1, 0.7))
    r = decompose_symmetric(u, GridProfile.block(8, 2, 2, 6, 6), 0.5, L1)
    assert r.inequality_holds
    assert r.corrected_error < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_grid_l1_energy_counts_faces(seed):
    g = np.random.default_rng(seed)
    cells = g.random((6, 6)) < 0.5
    u = GridProfile(cells)
    padded = np.pad(cells, 1)
    faces = np.count_nonzero(np.diff(padded, axis=0)) + np.count_nonzero(np.diff(padded, axis=1))
    assert math.isclose(surface_energy_quenched(u, L1), faces / 6, abs_tol=1e-12)
