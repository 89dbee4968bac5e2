"""Set-algebra decompositions of grid profiles and the energy bookkeeping they obey."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, DomainError
from .energy import _as_reduced, surface_energy_reduced, surface_energy_signed
from .profiles import GridProfile, common_grids
from .tension_fn import SurfaceTensionFn

IDENTITY_TOL = 1e-12


@dataclass
class SymmetricDecomposition:
    """``v`` covers ``U0 \\ U`` and ``w`` covers ``U \\ U0``.

    ``lhs = F^r(u) - F^r(u0)`` and ``rhs = F^{r,-}(v) + F^{r,-}(w)``.  Where
    the boundaries of ``U`` and ``U0`` coincide with opposite orientation
    (``U`` on the outer side of ``U0``) both ``v`` and ``w`` touch that face,
    so ``lhs - rhs = 2 int tau^r`` over those faces; ``anti_aligned`` holds
    that integral.  Elsewhere the two sides agree face by face.
    """

    v: GridProfile
    w: GridProfile
    lhs: float
    rhs: float
    anti_aligned: float

    @property
    def error(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def holds(self) -> bool:
        """The plain identity."""
        return self.error <= IDENTITY_TOL

    @property
    def corrected_error(self) -> float:
        return abs(self.lhs - self.rhs - 2.0 * self.anti_aligned)

    @property
    def inequality_holds(self) -> bool:
        """``F^r(u) - F^r(u0) >= F^{r,-}(v) + F^{r,-}(w)``."""
        return self.lhs >= self.rhs - IDENTITY_TOL


def anti_aligned_contact(u: GridProfile, u0: GridProfile, tau_r) -> float:
    """``int tau^r`` over faces of ``U0`` that ``U`` crosses from the outside in."""
    u, u0 = common_grids(u, u0)
    tr = _as_reduced(u0, tau_r)
    Rv, Rh = tr.grid_weights(u.n)
    total = 0.0
    for axis, R in ((0, Rv), (1, Rh)):
        a = np.pad(u.cells, 1, constant_values=False)
        z = np.pad(u0.cells, 1, constant_values=False)
        if axis == 0:
            al, ar, zl, zr = a[:-1, 1:-1], a[1:, 1:-1], z[:-1, 1:-1], z[1:, 1:-1]
        else:
            al, ar, zl, zr = a[1:-1, :-1], a[1:-1, 1:], z[1:-1, :-1], z[1:-1, 1:]
        anti = (zl != zr) & (al != ar) & (al == zr)
        total += float(R[anti].sum())
    return total / u.n


def decompose_symmetric(u: GridProfile, u0: GridProfile, tau_r, tau_q: SurfaceTensionFn) -> SymmetricDecomposition:
    if not isinstance(u, GridProfile) or not isinstance(u0, GridProfile):
        raise ContractError("the symmetric decomposition works on grid profiles")
    u, u0 = common_grids(u, u0)
    v = GridProfile(u0.cells & ~u.cells)
    w = GridProfile(u.cells & ~u0.cells)
    lhs = surface_energy_reduced(u, u0, tau_r, tau_q) - surface_energy_reduced(u0, u0, tau_r, tau_q)
    rhs = surface_energy_signed(v, u0, tau_r, tau_q) + surface_energy_signed(w, u0, tau_r, tau_q)
    return SymmetricDecomposition(v, w, lhs, rhs, anti_aligned_contact(u, u0, tau_r))


@dataclass
class DropletDecomposition:
    """Pieces of ``U`` cut by a shifted ``h``-grid.

    The check is ``F^{r,-}(u) >= sum F^{r,-}(v_i) - ||1-u||_1 d tau^q(e_1) / h``.
    """

    droplets: list[GridProfile]
    offset: tuple[int, int]
    block: int
    h: float
    signed_u: float
    signed_sum: float
    penalty: float
    cut_faces: int = 0
    offsets_scanned: list = field(default_factory=list)

    @property
    def slack(self) -> float:
        return self.signed_u - (self.signed_sum - self.penalty)

    @property
    def holds(self) -> bool:
        return self.slack >= -IDENTITY_TOL


def _cuts_per_offset(cells: np.ndarray, m: int, axis: int) -> np.ndarray:
    """Number of adjacent minus pairs split by the cut lines, for each offset ``0..m-1``."""
    n = cells.shape[0]
    a = np.moveaxis(cells, axis, 0)
    pairs = (a[:-1] & a[1:]).sum(axis=1)  # pairs[i]: across the line at coordinate i+1
    out = np.zeros(m, dtype=int)
    for z in range(m):
        lines = np.arange(1, n)
        out[z] = int(pairs[(lines - z) % m == 0].sum())
    return out


def decompose_droplets(u: GridProfile, h: float, u0: GridProfile, tau_r, tau_q: SurfaceTensionFn,
                       d: int = 2) -> DropletDecomposition:
    """Partition ``U`` into droplets of diameter at most ``h`` (in sup norm).

    The cut offset is chosen per axis to minimise the interface created,
    scanning every cell-aligned offset.
    """
    if not isinstance(u, GridProfile) or not isinstance(u0, GridProfile):
        raise ContractError("droplet decomposition works on grid profiles")
    u, u0 = common_grids(u, u0)
    n = u.n
    m = h * n
    if m < 1 or abs(m - round(m)) > 1e-9:
        raise DomainError("h must be a positive multiple of the cell size")
    m = int(round(m))
    cx = _cuts_per_offset(u.cells, m, 0)
    cy = _cuts_per_offset(u.cells, m, 1)
    zx, zy = int(np.argmin(cx)), int(np.argmin(cy))

    droplets = []
    xs = sorted({0, n} | {z for z in range(zx, n, m) if 0 < z < n})
    ys = sorted({0, n} | {z for z in range(zy, n, m) if 0 < z < n})
    for x0, x1 in zip(xs, xs[1:]):
        for y0, y1 in zip(ys, ys[1:]):
            part = np.zeros_like(u.cells)
            part[x0:x1, y0:y1] = u.cells[x0:x1, y0:y1]
            if part.any():
                droplets.append(GridProfile(part))

    signed_u = surface_energy_signed(u, u0, tau_r, tau_q)
    signed_sum = sum(surface_energy_signed(v, u0, tau_r, tau_q) for v in droplets)
    t_axis = max(tau_q((1.0, 0.0)), tau_q((0.0, 1.0)))
    penalty = 2.0 * u.area() * d * t_axis / h
    scanned = [(int(z), int(cx[z]), int(cy[z])) for z in range(m)]
    return DropletDecomposition(droplets, (zx, zy), m, h, signed_u, signed_sum, penalty,
                                int(cx[zx] + cy[zy]), scanned)
