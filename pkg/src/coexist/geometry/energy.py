"""Surface energies of phase profiles and the L1 distance between profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy import integrate

from ..errors import DomainError, UnsupportedError
from .profiles import (
    GEOM_TOL,
    TWO_PI,
    Arc,
    Disk,
    DiskCap,
    GridProfile,
    PlusProfile,
    Profile,
    Rect,
    Segment,
    common_grids,
    shared_pieces,
)
from .tension_fn import SurfaceTensionFn

QUAD_TOL = 1e-12


# ---------------------------------------------------------------------------
# reduced tension on the boundary of u0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AngularPatches:
    """Piecewise-constant function of the polar angle about ``center``.

    Patch ``i`` covers angles ``[starts[i], starts[i+1])`` (cyclically).
    """

    center: tuple[float, float]
    starts: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        s = [float(a) % TWO_PI for a in self.starts]
        if len(s) == 0 or len(s) != len(self.values):
            raise DomainError("patches need matching starts and values")
        order = np.argsort(s)
        object.__setattr__(self, "starts", tuple(s[i] for i in order))
        object.__setattr__(self, "values", tuple(float(self.values[i]) for i in order))

    def angle(self, p) -> float:
        return math.atan2(p[1] - self.center[1], p[0] - self.center[0]) % TWO_PI

    def __call__(self, p) -> float:
        a = self.angle(p)
        k = int(np.searchsorted(self.starts, a, side="right")) - 1
        return self.values[k]  # k = -1 wraps to the last patch


class ReducedTension:
    """``tau^r`` on the boundary of ``u0``: a constant or angular patches.

    ``eps`` records the strict-gap witness ``tau_min + eps < tau^r``; it is
    validated on request and never used in computations.
    """

    def __init__(self, u0: Profile, tau_r, eps: float | None = None):
        self.u0 = u0
        if isinstance(tau_r, (int, float)):
            self.constant: float | None = float(tau_r)
            self.patches: AngularPatches | None = None
        elif isinstance(tau_r, AngularPatches):
            self.constant, self.patches = None, tau_r
        else:
            raise DomainError("tau_r must be a number or AngularPatches")
        self.eps = eps
        self._grid_cache: dict = {}

    def value(self, p) -> float:
        return self.constant if self.constant is not None else self.patches(p)

    def _breaks_segment(self, s: Segment) -> list[float]:
        if self.patches is None:
            return []
        c = self.patches.center
        out = []
        dx, dy = s.q[0] - s.p[0], s.q[1] - s.p[1]
        for a in self.patches.starts:
            ux, uy = math.cos(a), math.sin(a)
            det = dx * uy - dy * ux
            if abs(det) < 1e-300:
                continue
            # p + t d = c + l u with l >= 0
            rx, ry = c[0] - s.p[0], c[1] - s.p[1]
            t = (rx * uy - ry * ux) / det
            lam = (rx * dy - ry * dx) / det
            if 0 < t < 1 and lam >= 0:
                out.append(t)
        return sorted(out)

    def _breaks_arc(self, arc: Arc) -> list[float]:
        if self.patches is None:
            return []
        c = self.patches.center
        out = []
        for a in self.patches.starts:
            ux, uy = math.cos(a), math.sin(a)
            # |c + l u - arc.c| = r, l >= 0
            fx, fy = c[0] - arc.c[0], c[1] - arc.c[1]
            b = fx * ux + fy * uy
            disc = b * b - (fx * fx + fy * fy - arc.r ** 2)
            if disc < 0:
                continue
            for lam in (-b - math.sqrt(disc), -b + math.sqrt(disc)):
                if lam < 0:
                    continue
                ang = math.atan2(fy + lam * uy, fx + lam * ux)
                for k in range(-2, 3):
                    t = ang + k * TWO_PI
                    if arc.a0 < t < arc.a1:
                        out.append(t)
        return sorted(out)

    def integrate(self, piece) -> float:
        """``int tau^r dH`` over a piece.

        ``tau^r`` is constant between the computed patch crossings, so the
        sum over sub-pieces is exact.
        """
        if isinstance(piece, Segment):
            cuts = [0.0] + self._breaks_segment(piece) + [1.0]
            return sum(piece.sub(a, b).length * self.value(piece.point(0.5 * (a + b)))
                       for a, b in zip(cuts, cuts[1:]))
        cuts = [piece.a0] + self._breaks_arc(piece) + [piece.a1]
        return sum(piece.r * (b - a) * self.value(piece.point(0.5 * (a + b)))
                   for a, b in zip(cuts, cuts[1:]))

    def validate(self, tau_q: SurfaceTensionFn, tau_min: float | None = None) -> None:
        """Check ``0 < tau^r <= tau^q(n)`` on ``u0`` (and the strict gap if given)."""
        for piece in _pieces(self.u0):
            for p, n in _sample_points(piece):
                tr = self.value(p)
                if not tr > 0:
                    raise DomainError("tau_r must be positive")
                if tr > tau_q(n) + 1e-12:
                    raise DomainError(f"tau_r={tr} exceeds tau_q={tau_q(n)} on the boundary of u0")
                if tau_min is not None and self.eps is not None and not tau_min + self.eps < tr:
                    raise DomainError("strict gap tau_min + eps < tau_r violated")

    def grid_weights(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``tau^r`` at the midpoints of the vertical and horizontal faces of an ``n``-grid."""
        if n not in self._grid_cache:
            i = np.arange(n + 1)[:, None]
            j = np.arange(n)[None, :]
            if self.constant is not None:
                V = np.full((n + 1, n), self.constant)
                H = np.full((n, n + 1), self.constant)
            else:
                V = np.vectorize(lambda a, b: self.patches((a / n, (b + 0.5) / n)))(i, j).astype(float)
                H = np.vectorize(lambda a, b: self.patches(((a + 0.5) / n, b / n)))(j.T, i.T).astype(float)
            self._grid_cache[n] = (V, H)
        return self._grid_cache[n]


def _as_reduced(u0: Profile, tau_r) -> ReducedTension:
    if isinstance(tau_r, ReducedTension):
        return tau_r
    return ReducedTension(u0, tau_r)


def _pieces(u: Profile) -> list:
    try:
        return u.pieces()
    except NotImplementedError as exc:  # pragma: no cover - defensive
        raise UnsupportedError(f"profile {type(u).__name__} exposes no boundary") from exc


def _sample_points(piece, k: int = 7):
    if isinstance(piece, Segment):
        return [(piece.point((i + 0.5) / k), piece.normal) for i in range(k)]
    out = []
    for i in range(k):
        a = piece.a0 + (i + 0.5) / k * (piece.a1 - piece.a0)
        out.append((piece.point(a), (math.cos(a), math.sin(a))))
    return out


# ---------------------------------------------------------------------------
# tau^q integrals
# ---------------------------------------------------------------------------


def piece_energy(piece, tau_q: SurfaceTensionFn) -> float:
    """``int tau^q(n) dH`` over one boundary piece."""
    if isinstance(piece, Segment):
        return piece.length * tau_q(piece.normal) if piece.length > 0 else 0.0
    if piece.length <= 0:
        return 0.0
    if tau_q.kind == "isotropic":
        return tau_q.value * piece.length
    kinks = tau_q.kinks()
    pts = sorted({k + m * TWO_PI for k in kinks for m in range(-2, 3)
                  if piece.a0 < k + m * TWO_PI < piece.a1})
    val, _ = integrate.quad(tau_q.of_angle, piece.a0, piece.a1, points=pts or None,
                            epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500)
    return piece.r * val


def _grid_face_weights(n: int, tau_q: SurfaceTensionFn) -> tuple[float, float]:
    return tau_q((1.0, 0.0)) / n, tau_q((0.0, 1.0)) / n


def surface_energy_quenched(u: Profile, tau_q: SurfaceTensionFn) -> float:
    """``F^q(u) = int_{boundary of U} tau^q(n) dH``."""
    if isinstance(u, GridProfile):
        V, H = u.interface_faces()
        wv, wh = _grid_face_weights(u.n, tau_q)
        return float(V.sum() * wv + H.sum() * wh)
    return float(sum(piece_energy(p, tau_q) for p in _pieces(u)))


@dataclass
class EnergySplit:
    """``F^q`` of ``u`` split into the part off and on the boundary of ``u0``."""

    off_q: float
    on_q: float
    on_r: float


def energy_split(u: Profile, u0: Profile, tau_r, tau_q: SurfaceTensionFn) -> EnergySplit:
    tr = _as_reduced(u0, tau_r)
    if isinstance(u, GridProfile) and isinstance(u0, GridProfile):
        gu, g0 = common_grids(u, u0)
        if gu.n != u.n:
            u = gu
        Vu, Hu = gu.interface_faces()
        V0, H0 = g0.interface_faces()
        wv, wh = _grid_face_weights(gu.n, tau_q)
        Rv, Rh = tr.grid_weights(gu.n)
        sv, sh = Vu & V0, Hu & H0
        total = Vu.sum() * wv + Hu.sum() * wh
        on_q = sv.sum() * wv + sh.sum() * wh
        on_r = (Rv[sv].sum() + Rh[sh].sum()) / gu.n
        return EnergySplit(float(total - on_q), float(on_q), float(on_r))
    pu, p0 = _pieces(u), _pieces(u0)
    shared = shared_pieces(pu, p0) if pu and p0 else []
    total = sum(piece_energy(p, tau_q) for p in pu)
    on_q = sum(piece_energy(p, tau_q) for p in shared)
    on_r = sum(tr.integrate(p) for p in shared)
    return EnergySplit(float(total - on_q), float(on_q), float(on_r))


def surface_energy_reduced(u: Profile, u0: Profile, tau_r, tau_q: SurfaceTensionFn) -> float:
    """``F^r(u)``: ``tau^r`` on the part of the boundary shared with ``u0``, ``tau^q`` elsewhere."""
    s = energy_split(u, u0, tau_r, tau_q)
    return s.off_q + s.on_r


def surface_energy_signed(u: Profile, u0: Profile, tau_r, tau_q: SurfaceTensionFn) -> float:
    """``F^{r,-}(u)``: ``tau^q`` off the boundary of ``u0`` minus ``tau^r`` on it."""
    s = energy_split(u, u0, tau_r, tau_q)
    return s.off_q - s.on_r


# ---------------------------------------------------------------------------
# L1 distance
# ---------------------------------------------------------------------------


def _symdiff_length(A, B) -> float:
    pts = sorted({p for iv in A + B for p in iv})
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        m = 0.5 * (a + b)
        ina = any(x <= m <= y for x, y in A)
        inb = any(x <= m <= y for x, y in B)
        if ina != inb:
            total += b - a
    return total


def _lens_area(r1, r2, d) -> float:
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a = r1 ** 2 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    b = r2 ** 2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    c = 0.5 * math.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return a + b - c


def _inside_unit(u: Profile) -> bool:
    if isinstance(u, Disk):
        return (u.r <= u.center[0] <= 1 - u.r) and (u.r <= u.center[1] <= 1 - u.r)
    if isinstance(u, Rect):
        return 0 <= u.x0 and u.x1 <= 1 and 0 <= u.y0 and u.y1 <= 1
    return False


def l1_distance(u: Profile, v: Profile, tol: float = 1e-11) -> float:
    """``int |u - v|`` over ``[0,1]^2``, i.e. twice the area of the symmetric difference.

    Exact for grid pairs, pairs involving the plus profile, disk pairs,
    rectangle pairs and nested caps of one disk; otherwise a scanline
    quadrature over horizontal cross-sections.
    """
    if isinstance(u, PlusProfile):
        return 2.0 * v.area()
    if isinstance(v, PlusProfile):
        return 2.0 * u.area()
    if isinstance(u, GridProfile) and isinstance(v, GridProfile):
        a, b = common_grids(u, v)
        return 2.0 * float(np.sum(a.cells != b.cells)) / a.n ** 2
    if isinstance(u, Disk) and isinstance(v, Disk) and _inside_unit(u) and _inside_unit(v):
        d = math.hypot(u.center[0] - v.center[0], u.center[1] - v.center[1])
        return 2.0 * (u.area() + v.area() - 2 * _lens_area(u.r, v.r, d))
    if isinstance(u, Rect) and isinstance(v, Rect) and _inside_unit(u) and _inside_unit(v):
        w = max(0.0, min(u.x1, v.x1) - max(u.x0, v.x0))
        h = max(0.0, min(u.y1, v.y1) - max(u.y0, v.y0))
        return 2.0 * (u.area() + v.area() - 2 * w * h)
    caps = [w for w in (u, v) if isinstance(w, (Disk, DiskCap))]
    if len(caps) == 2 and _same_circle(u, v) and _inside_unit(Disk(tuple(u.center), u.r)):
        tu = getattr(u, "theta", 0.0)
        tv = getattr(v, "theta", 0.0)
        if tu == 0 or tv == 0 or getattr(u, "phi", None) == getattr(v, "phi", None):
            # nested regions of one disk
            return 2.0 * abs(u.area() - v.area())
    return _scanline_l1(u, v, tol)


def _same_circle(u, v) -> bool:
    return abs(u.r - v.r) <= GEOM_TOL and math.hypot(u.center[0] - v.center[0], u.center[1] - v.center[1]) <= GEOM_TOL


def _scanline_l1(u: Profile, v: Profile, tol: float) -> float:
    breaks = sorted({min(1.0, max(0.0, y)) for y in u.y_breaks() + v.y_breaks()} | {0.0, 1.0})
    total = 0.0
    for a, b in zip(breaks, breaks[1:]):
        if b - a <= 0:
            continue
        val, _ = integrate.quad(lambda y: _symdiff_length(u.chords(y), v.chords(y)), a, b,
                                epsabs=tol, epsrel=tol, limit=200)
        total += val
    return 2.0 * total
