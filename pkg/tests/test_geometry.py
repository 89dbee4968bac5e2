from __future__ import annotations

import math

import numpy as np
import pytest

from coexist.errors import DomainError
from coexist.geometry import (
    AngularPatches,
    Disk,
    DiskCap,
    GridProfile,
    PlusProfile,
    Polygon,
    Rect,
    ReducedTension,
    SurfaceTensionFn,
    anti_aligned_contact,
    decompose_droplets,
    decompose_symmetric,
    energy_split,
    isoperimetric_check,
    l1_distance,
    profile_from_dict,
    surface_energy_quenched,
    surface_energy_reduced,
    wulff_area,
    wulff_shape,
)

ISO = SurfaceTensionFn.isotropic(1.0)
L1 = SurfaceTensionFn.l1()


def test_profile_areas():
    assert Disk((0.5, 0.5), 0.25).area() == pytest.approx(math.pi / 16)
    assert Rect.square((0.5, 0.5), 0.5).area() == pytest.approx(0.25)
    assert PlusProfile().area() == 0.0
    assert GridProfile.block(4, 1, 1, 3, 3).area() == pytest.approx(0.25)
    cap = DiskCap((0.5, 0.5), 0.25, math.pi / 2)
    assert cap.area() == pytest.approx(math.pi / 32)


@pytest.mark.parametrize("u", [Disk((0.4, 0.5), 0.2), Rect(0.1, 0.2, 0.6, 0.9),
                               Polygon(((0.1, 0.1), (0.8, 0.2), (0.5, 0.7))), GridProfile.block(8, 1, 2, 5, 6)])
def test_profile_json_roundtrip(u):
    v = profile_from_dict(u.to_dict())
    assert v.area() == pytest.approx(u.area())
    assert l1_distance(u, v) < 1e-12


def test_perimeters():
    assert surface_energy_quenched(Disk((0.5, 0.5), 0.25), ISO) == pytest.approx(math.pi / 2)
    assert surface_energy_quenched(Rect.square((0.5, 0.5), 0.5), L1) == pytest.approx(2.0)
    # l1 tension of a disk equals 8r
    assert surface_energy_quenched(Disk((0.5, 0.5), 0.25), L1) == pytest.approx(2.0)


def test_l1_distance_of_nested_squares():
    a = Rect.square((0.5, 0.5), 0.5)
    b = Rect.square((0.5, 0.5), 0.25)
    # chi differs by 2 on the annulus
    assert l1_distance(a, b) == pytest.approx(2 * (0.25 - 0.0625))
    assert l1_distance(a, PlusProfile()) == pytest.approx(0.5)


def test_reduced_energy_on_u0_is_tau_r_perimeter():
    u0 = Disk((0.5, 0.5), 0.25)
    assert surface_energy_reduced(u0, u0, 0.5, ISO) == pytest.approx(0.5 * math.pi / 2)


def test_energy_split_for_half_disk():
    u0 = Disk((0.5, 0.5), 0.25)
    cap = DiskCap((0.5, 0.5), 0.25, math.pi / 2)
    split = energy_split(cap, u0, 0.5, ISO)
    assert split.on_q == pytest.approx(math.pi / 4)
    assert split.off_q == pytest.approx(0.5)


def test_angular_patches_integrate_exactly():
    u0 = Disk((0.5, 0.5), 0.25)
    tr = ReducedTension(u0, AngularPatches((0.5, 0.5), (0.0, math.pi), (0.2, 0.4)))
    e = surface_energy_reduced(u0, u0, tr, ISO)
    assert e == pytest.approx(0.25 * math.pi * (0.2 + 0.4))


def test_reduced_tension_must_stay_below_quenched():
    with pytest.raises(DomainError):
        ReducedTension(Disk((0.5, 0.5), 0.25), 2.0).validate(ISO, None)


def test_wulff_shapes():
    sq = wulff_shape(L1)
    assert sq.area == pytest.approx(4.0)
    assert sq.is_lattice_symmetric()
    disk = wulff_shape(ISO, 256)
    assert disk.area == pytest.approx(math.pi, rel=1e-3)
    assert wulff_area(ISO) == pytest.approx(math.pi)


def test_isoperimetric_bound():
    for poly in (Polygon(((0.1, 0.1), (0.9, 0.1), (0.5, 0.8))), Polygon(((0.2, 0.2), (0.6, 0.2), (0.6, 0.6), (0.2, 0.6)))):
        for tau in (ISO, L1):
            assert isoperimetric_check(poly, tau).holds
    sq = Polygon(((0.2, 0.2), (0.6, 0.2), (0.6, 0.6), (0.2, 0.6)))
    assert isoperimetric_check(sq, L1).slack == pytest.approx(0.0, abs=1e-12)


def test_symmetric_decomposition_with_and_without_reversed_faces():
    u0 = GridProfile.block(8, 2, 2, 6, 6)
    inside = GridProfile.block(8, 3, 3, 5, 5)
    r = decompose_symmetric(inside, u0, 0.5, L1)
    assert anti_aligned_contact(inside, u0, 0.5) == 0.0
    assert r.holds
    # a minus strip just outside u0 meets one of its faces with the opposite orientation
    cells = np.zeros((8, 8), dtype=bool)
    cells[6, 2:6] = True
    r2 = decompose_symmetric(GridProfile(cells), u0, 0.5, L1)
    assert r2.anti_aligned > 0 and not r2.holds
    assert r2.inequality_holds and r2.corrected_error < 1e-12


def test_droplet_inequality():
    u0 = GridProfile.block(8, 2, 2, 6, 6)
    g = np.random.default_rng(3)
    for _ in range(10):
        u = GridProfile(g.random((8, 8)) < 0.4)
        for h in (0.25, 0.5):
            assert decompose_droplets(u, h, u0, 0.5, L1).holds
