"""Phase profiles on the unit square.

A profile is ``-1`` on a region ``U`` of ``[0,1]^2`` and ``+1`` elsewhere
(outside the square counts as ``+1``).  Continuum regions expose their
boundary as a list of pieces (segments and circular arcs) and their
horizontal cross-sections as lists of intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ContractError, DomainError

TWO_PI = 2.0 * math.pi
GEOM_TOL = 1e-12


# ---------------------------------------------------------------------------
# boundary pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    p: tuple[float, float]
    q: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.q[0] - self.p[0], self.q[1] - self.p[1])

    @property
    def normal(self) -> tuple[float, float]:
        L = self.length
        return ((self.q[1] - self.p[1]) / L, -(self.q[0] - self.p[0]) / L)

    def point(self, s: float) -> tuple[float, float]:
        return (self.p[0] + s * (self.q[0] - self.p[0]), self.p[1] + s * (self.q[1] - self.p[1]))

    def sub(self, s0: float, s1: float) -> "Segment":
        return Segment(self.point(s0), self.point(s1))


@dataclass(frozen=True)
class Arc:
    """Counter-clockwise arc of the circle ``(c, r)`` over angles ``[a0, a1]``."""

    c: tuple[float, float]
    r: float
    a0: float
    a1: float

    @property
    def length(self) -> float:
        return self.r * (self.a1 - self.a0)

    def point(self, a: float) -> tuple[float, float]:
        return (self.c[0] + self.r * math.cos(a), self.c[1] + self.r * math.sin(a))

    def sub(self, b0: float, b1: float) -> "Arc":
        return Arc(self.c, self.r, b0, b1)


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _segment_overlap(s: Segment, t: Segment) -> list[Segment]:
    dx, dy = s.q[0] - s.p[0], s.q[1] - s.p[1]
    L2 = dx * dx + dy * dy
    if L2 == 0 or t.length == 0:
        return []
    scale = math.sqrt(L2)
    for pt in (t.p, t.q):
        if abs(_cross(dx, dy, pt[0] - s.p[0], pt[1] - s.p[1])) > GEOM_TOL * scale:
            return []
    u0 = ((t.p[0] - s.p[0]) * dx + (t.p[1] - s.p[1]) * dy) / L2
    u1 = ((t.q[0] - s.p[0]) * dx + (t.q[1] - s.p[1]) * dy) / L2
    lo, hi = max(0.0, min(u0, u1)), min(1.0, max(u0, u1))
    if hi - lo <= GEOM_TOL:
        return []
    return [s.sub(lo, hi)]


def _arc_overlap(a: Arc, b: Arc) -> list[Arc]:
    if abs(a.r - b.r) > GEOM_TOL or math.hypot(a.c[0] - b.c[0], a.c[1] - b.c[1]) > GEOM_TOL:
        return []
    out = []
    for k in range(-2, 3):
        lo = max(a.a0, b.a0 + k * TWO_PI)
        hi = min(a.a1, b.a1 + k * TWO_PI)
        if hi - lo > GEOM_TOL:
            out.append(a.sub(lo, hi))
    return out


def shared_pieces(pieces_u, pieces_v) -> list:
    """Pieces of ``pieces_u`` lying on ``pieces_v`` (positive length only).

    Segments and arcs meet in finitely many points, so only like pairs
    contribute.
    """
    out = []
    for s in pieces_u:
        for t in pieces_v:
            if isinstance(s, Segment) and isinstance(t, Segment):
                out.extend(_segment_overlap(s, t))
            elif isinstance(s, Arc) and isinstance(t, Arc):
                out.extend(_arc_overlap(s, t))
    return out


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


def _merge(intervals):
    iv = sorted((a, b) for a, b in intervals if b > a)
    out = []
    for a, b in iv:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _clip01(intervals):
    return _merge([(max(0.0, a), min(1.0, b)) for a, b in intervals])


class Profile:
    """Base class; subclasses describe the minus region ``U``."""

    kind = "abstract"

    def area(self) -> float:
        raise NotImplementedError

    def pieces(self) -> list:
        raise NotImplementedError

    def chords(self, y: float) -> list[tuple[float, float]]:
        raise NotImplementedError

    def y_breaks(self) -> list[float]:
        return []

    def is_empty(self) -> bool:
        return self.area() <= GEOM_TOL

    def to_dict(self) -> dict:
        raise NotImplementedError

    def contains(self, x: float, y: float) -> bool:
        return any(a <= x <= b for a, b in self.chords(y))


class PlusProfile(Profile):
    """The constant profile ``u = 1`` (empty minus region)."""

    kind = "plus"

    def area(self) -> float:
        return 0.0

    def pieces(self) -> list:
        return []

    def chords(self, y):
        return []

    def to_dict(self) -> dict:
        return {"repr": "plus", "params": {}}

    def __eq__(self, other):
        return isinstance(other, PlusProfile)

    def __hash__(self):
        return hash("plus")


@dataclass(frozen=True, eq=True)
class Disk(Profile):
    center: tuple[float, float]
    r: float
    kind = "disk"

    def __post_init__(self):
        if self.r < 0:
            raise DomainError("radius must be nonnegative")

    def area(self) -> float:
        return math.pi * self.r ** 2

    def pieces(self):
        return [] if self.r == 0 else [Arc(tuple(self.center), self.r, 0.0, TWO_PI)]

    def chords(self, y):
        dy = y - self.center[1]
        if abs(dy) >= self.r:
            return []
        w = math.sqrt(self.r ** 2 - dy ** 2)
        return _clip01([(self.center[0] - w, self.center[0] + w)])

    def y_breaks(self):
        return [self.center[1] - self.r, self.center[1] + self.r]

    def to_dict(self):
        return {"repr": "disk", "params": {"center": list(self.center), "r": self.r}}


@dataclass(frozen=True, eq=True)
class Rect(Profile):
    x0: float
    y0: float
    x1: float
    y1: float
    kind = "rect"

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise DomainError("rectangle corners out of order")

    @classmethod
    def square(cls, center, side) -> "Rect":
        h = side / 2
        return cls(center[0] - h, center[1] - h, center[0] + h, center[1] + h)

    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def vertices(self):
        return [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]

    def pieces(self):
        if self.area() <= 0:
            return []
        v = self.vertices()
        return [Segment(v[i], v[(i + 1) % 4]) for i in range(4)]

    def chords(self, y):
        if self.y0 < y < self.y1:
            return _clip01([(self.x0, self.x1)])
        return []

    def y_breaks(self):
        return [self.y0, self.y1]

    def to_dict(self):
        if abs((self.x1 - self.x0) - (self.y1 - self.y0)) <= GEOM_TOL:
            c = ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
            return {"repr": "square", "params": {"center": list(c), "side": self.x1 - self.x0}}
        return {"repr": "rect", "params": {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}}


def square_minus_slab(square: Rect, removed: float) -> Rect:
    """The square with a slab of height ``removed`` cut from its top."""
    h = min(max(removed, 0.0), square.y1 - square.y0)
    return Rect(square.x0, square.y0, square.x1, square.y1 - h)


@dataclass(frozen=True, eq=True)
class DiskCap(Profile):
    """Disk minus the circular segment of half-angle ``theta`` centred at direction ``phi``.

    ``theta = 0`` is the full disk and ``theta = pi`` the empty set; the
    remaining boundary is an arc of length ``r (2 pi - 2 theta)`` and a chord
    of length ``2 r sin theta``.
    """

    center: tuple[float, float]
    r: float
    theta: float
    phi: float = math.pi / 2
    kind = "disk_cap"

    def __post_init__(self):
        if not -GEOM_TOL <= self.theta <= math.pi + GEOM_TOL:
            raise DomainError("theta must lie in [0, pi]")

    def area(self):
        t = self.theta
        return self.r ** 2 * (math.pi - t + 0.5 * math.sin(2 * t))

    def pieces(self):
        if self.is_empty():
            return []
        out = [Arc(tuple(self.center), self.r, self.phi + self.theta, self.phi + TWO_PI - self.theta)]
        if self.theta > 0:
            a = Arc(tuple(self.center), self.r, 0, 0)
            out.append(Segment(a.point(self.phi + TWO_PI - self.theta), a.point(self.phi + self.theta)))
        return out

    def chords(self, y):
        cx, cy = self.center
        dy = y - cy
        if abs(dy) >= self.r:
            return []
        w = math.sqrt(self.r ** 2 - dy ** 2)
        lo, hi = cx - w, cx + w
        a, s = math.cos(self.phi), math.sin(self.phi)
        bound = self.r * math.cos(self.theta) - dy * s
        if abs(a) < 1e-12:
            if bound < 0:
                return []
        elif a > 0:
            hi = min(hi, cx + bound / a)
        else:
            lo = max(lo, cx + bound / a)
        return _clip01([(lo, hi)])

    def y_breaks(self):
        cy = self.center[1]
        out = [cy - self.r, cy + self.r]
        for ang in (self.phi + self.theta, self.phi - self.theta):
            out.append(cy + self.r * math.sin(ang))
        return out

    def to_dict(self):
        return {"repr": "disk_cap", "params": {"center": list(self.center), "r": self.r,
                                              "theta": self.theta, "phi": self.phi}}


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = _cross(b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1])
        return 0 if abs(v) <= GEOM_TOL else (1 if v > 0 else -1)

    o1, o2, o3, o4 = orient(p1, p2, p3), orient(p1, p2, p4), orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    return False


@dataclass(frozen=True, eq=True)
class Polygon(Profile):
    vertices: tuple[tuple[float, float], ...]
    kind = "polygon"

    def __post_init__(self):
        vs = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", vs)
        if len(vs) < 3:
            raise ContractError("a polygon needs at least three vertices")
        n = len(vs)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(vs[i], vs[(i + 1) % n], vs[j], vs[(j + 1) % n]):
                    raise ContractError("polygon is not simple")

    def signed_area(self) -> float:
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def area(self):
        return abs(self.signed_area())

    def pieces(self):
        n = len(self.vertices)
        return [Segment(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)
                if self.vertices[i] != self.vertices[(i + 1) % n]]

    def chords(self, y):
        xs = []
        n = len(self.vertices)
        for i in range(n):
            (x0, y0), (x1, y1) = self.vertices[i], self.vertices[(i + 1) % n]
            if (y0 <= y < y1) or (y1 <= y < y0):
                xs.append(x0 + (y - y0) * (x1 - x0) / (y1 - y0))
        xs.sort()
        return _clip01([(xs[k], xs[k + 1]) for k in range(0, len(xs) - 1, 2)])

    def y_breaks(self):
        return [v[1] for v in self.vertices]

    def to_dict(self):
        return {"repr": "polygon", "params": {"vertices": [list(v) for v in self.vertices]}}


# ---------------------------------------------------------------------------
# grid profiles
# ---------------------------------------------------------------------------


class GridProfile(Profile):
    """``n x n`` cell field; ``cells[ix, iy]`` is True where the profile is ``-1``.

    Cell ``(ix, iy)`` covers ``[ix/n, (ix+1)/n] x [iy/n, (iy+1)/n]``.
    """

    kind = "grid"

    def __init__(self, cells):
        c = np.asarray(cells, dtype=bool)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise ContractError("grid profiles are square n x n cell arrays")
        c = c.copy()
        c.setflags(write=False)
        self.cells = c

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    @classmethod
    def empty(cls, n: int) -> "GridProfile":
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def block(cls, n: int, ix0: int, iy0: int, ix1: int, iy1: int) -> "GridProfile":
        c = np.zeros((n, n), dtype=bool)
        c[ix0:ix1, iy0:iy1] = True
        return cls(c)

    @classmethod
    def from_mask(cls, n: int, free: Sequence[int], bits: int) -> "GridProfile":
        c = np.zeros(n * n, dtype=bool)
        for j, cell in enumerate(free):
            if (bits >> j) & 1:
                c[cell] = True
        return cls(c.reshape(n, n))

    def refine(self, m: int) -> "GridProfile":
        return GridProfile(np.kron(self.cells, np.ones((m, m), dtype=bool)))

    def area(self):
        return float(self.cells.sum()) / self.n ** 2

    def interface_faces(self) -> tuple[np.ndarray, np.ndarray]:
        """Boolean arrays of interface faces.

        ``V[i, j]``: vertical face at ``x = i/n`` next to row ``j``;
        ``H[i, j]``: horizontal face at ``y = j/n`` next to column ``i``.
        """
        pad = np.pad(self.cells, 1, constant_values=False)
        V = pad[:-1, 1:-1] != pad[1:, 1:-1]
        H = pad[1:-1, :-1] != pad[1:-1, 1:]
        return V, H

    def pieces(self):
        V, H = self.interface_faces()
        n = self.n
        out = [Segment((i / n, j / n), (i / n, (j + 1) / n)) for i, j in zip(*np.nonzero(V))]
        out += [Segment((i / n, j / n), ((i + 1) / n, j / n)) for i, j in zip(*np.nonzero(H))]
        return out

    def chords(self, y):
        n = self.n
        j = int(math.floor(y * n))
        if not 0 <= j < n:
            return []
        col = self.cells[:, j]
        out = []
        i = 0
        while i < n:
            if col[i]:
                k = i
                while k < n and col[k]:
                    k += 1
                out.append((i / n, k / n))
                i = k
            else:
                i += 1
        return out

    def y_breaks(self):
        return [k / self.n for k in range(self.n + 1)]

    def __eq__(self, other):
        return isinstance(other, GridProfile) and self.cells.shape == other.cells.shape and bool(
            np.all(self.cells == other.cells))

    def __hash__(self):
        return hash(self.cells.tobytes())

    def __repr__(self):
        return f"GridProfile(n={self.n}, minus_cells={int(self.cells.sum())})"

    def to_dict(self):
        rows = ["".join("-" if self.cells[i, j] else "+" for i in range(self.n)) for j in range(self.n)]
        return {"repr": "grid", "params": {"n": self.n, "rows": rows}}


def common_grids(u: GridProfile, v: GridProfile) -> tuple[GridProfile, GridProfile]:
    """Refine two grid profiles to a common resolution (one must divide the other)."""
    from ..errors import UnsupportedError

    if u.n == v.n:
        return u, v
    if v.n % u.n == 0:
        return u.refine(v.n // u.n), v
    if u.n % v.n == 0:
        return u, v.refine(u.n // v.n)
    raise UnsupportedError("grid resolutions must divide one another")


def profile_from_dict(d: dict) -> Profile:
    rep, p = d["repr"], d.get("params", {})
    if rep == "plus":
        return PlusProfile()
    if rep == "disk":
        return Disk(tuple(p["center"]), float(p["r"]))
    if rep == "square":
        return Rect.square(p["center"], float(p["side"]))
    if rep == "rect":
        return Rect(p["x0"], p["y0"], p["x1"], p["y1"])
    if rep == "disk_cap":
        return DiskCap(tuple(p["center"]), float(p["r"]), float(p["theta"]), float(p.get("phi", math.pi / 2)))
    if rep == "polygon":
        return Polygon(tuple(tuple(v) for v in p["vertices"]))
    if rep == "grid":
        rows = p["rows"]
        n = int(p["n"])
        cells = np.array([[rows[j][i] == "-" for j in range(n)] for i in range(n)])
        return GridProfile(cells)
    raise DomainError(f"unknown profile representation {rep!r}")
