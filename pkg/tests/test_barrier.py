from __future__ import annotations

import math

import pytest

from coexist.errors import CapacityError, ContractError, DomainError
from coexist.geometry import (
    Candidate,
    Disk,
    DiscretePath,
    GridProfile,
    PlusProfile,
    Rect,
    SurfaceTensionFn,
    barrier_disk,
    barrier_grid_minimax,
    barrier_square,
    constrained_barrier_square,
    dilution_cost,
    disk_barrier_crosscheck,
    disk_chord_family,
    evaluate_evolution,
    exponent_xlambda,
    kappa,
    square_barrier_crosscheck,
)
from coexist.tension import RateFunctionModel

ISO = SurfaceTensionFn.isotropic(1.0)
L1 = SurfaceTensionFn.l1()
RM = RateFunctionModel.bernoulli_bound(math.exp(-1.0))


def test_closed_forms():
    r, lam = 0.25, 0.5
    assert barrier_disk(r, lam) == pytest.approx(2 * r * (math.sqrt(1 - lam ** 2) - lam * math.acos(lam)))
    assert barrier_square(r, lam) == pytest.approx(2 * r * (1 - lam))
    assert barrier_disk(r, 1.0) == 0.0
    assert barrier_disk(r, 0.0) == pytest.approx(2 * r)
    with pytest.raises(DomainError):
        barrier_disk(0.6, 0.5)


@pytest.mark.parametrize("r,lam", [(0.1, 0.2), (0.25, 0.5), (0.4, 0.9)])
def test_sweeps_match_closed_forms(r, lam):
    assert disk_barrier_crosscheck(r, lam).difference < 1e-9
    assert square_barrier_crosscheck(r, lam).difference < 1e-9


def test_discrete_path_needs_small_steps():
    u0 = Disk((0.5, 0.5), 0.25)
    with pytest.raises(ContractError):
        DiscretePath([u0, PlusProfile()], eps=0.01).validate(u0)
    DiscretePath([u0, PlusProfile()], eps=0.4).validate(u0)


def test_chord_family_sup():
    u0 = Disk((0.5, 0.5), 0.25)
    res = evaluate_evolution(disk_chord_family(0.25), u0, 0.5, ISO)
    assert res.k_contribution == pytest.approx(barrier_disk(0.25, 0.5), abs=1e-9)


def test_grid_minimax_square():
    u0 = GridProfile.block(4, 1, 1, 3, 3)
    res = barrier_grid_minimax(u0, 0.5, L1, method="both")
    assert res.k_hat == 0.25 and res.cross_check == 0.25
    assert res.eps_equivalent == 2 / 16
    assert len(res.witness) >= 2
    for k in (2, 3, 16):
        assert barrier_grid_minimax(u0, 0.5, L1, k=k).k_hat == 0.0


def test_grid_minimax_cap():
    with pytest.raises(CapacityError):
        barrier_grid_minimax(GridProfile.block(8, 2, 2, 6, 6), 0.5, L1, margin=2, cap=1 << 10)


def test_constrained_barrier():
    res = constrained_barrier_square(0.5)
    assert res.value == pytest.approx(1.5 + math.sqrt(3) / 2)
    assert res.m0 == pytest.approx(1 - math.sqrt(3))
    assert res.margin > 0.13


def test_dilution_cost():
    assert dilution_cost(Rect.square((0.5, 0.5), 0.5), 0.5, RM) == pytest.approx(2.0)
    assert dilution_cost(Disk((0.5, 0.5), 0.25), 0.5, RM) == pytest.approx(2.0)


def test_exponent_and_kappa():
    disk = Candidate(Disk((0.5, 0.5), 0.25), 0.5, RM, ISO, name="disk")
    square = Candidate(Rect.square((0.5, 0.5), 0.5), 0.5, RM, L1, name="square")
    X = exponent_xlambda([disk], 1.0)
    assert round(X.value, 2) == 16.27
    assert kappa([square]) == pytest.approx(0.25)
    assert exponent_xlambda([disk, square], 1.0).value <= X.value
    assert math.isinf(exponent_xlambda([], 0.5).value)
    assert kappa([]) == 0.0
