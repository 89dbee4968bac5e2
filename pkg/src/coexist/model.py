"""Lattice boxes, quenched couplings, spin configurations and exact Gibbs measures.

Conventions
-----------
* Sites of a box are sorted lexicographically; site ``i`` is ``box.sites[i]``.
* Edges are pairs ``(x, y)`` of coordinate tuples with ``x < y``
  lexicographically.  Closed edge sets are sorted by ``(min, max)`` endpoint.
* The Gibbs weight of a configuration is ``exp(-(beta/2) H)`` with
  ``H = -sum_{e in E^w} J_e sigma_x sigma_y``.
* In exact enumerations, state index ``s`` has spin ``+1`` at site ``i`` iff
  bit ``i`` of ``s`` is set, so the all-plus state is ``2**n - 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import CapacityError, DomainError, UnsupportedError
from .rng import keyed_uniform, stream

Coord = tuple[int, ...]
Edge = tuple[Coord, Coord]

EXACT_SITE_CAP = 20
MAX_BOX_SITES = 10_000_000


def _unit(d: int, i: int, sign: int = 1) -> Coord:
    return tuple(sign if k == i else 0 for k in range(d))


def _add(x: Coord, y: Coord) -> Coord:
    return tuple(a + b for a, b in zip(x, y))


def make_edge(x: Coord, y: Coord) -> Edge:
    x, y = tuple(int(v) for v in x), tuple(int(v) for v in y)
    if sum(abs(a - b) for a, b in zip(x, y)) != 1:
        raise DomainError(f"{x} and {y} are not nearest neighbours")
    return (x, y) if x < y else (y, x)


class LatticeBox:
    """A finite set of sites of Z^d with its interior and closed edge sets."""

    def __init__(self, d: int, sites: Sequence[Coord], half_side: int | None = None):
        if d < 1:
            raise CapacityError(f"dimension must be >= 1, got {d}")
        pts = sorted({tuple(int(c) for c in s) for s in sites})
        if not pts:
            raise DomainError("a box needs at least one site")
        if any(len(p) != d for p in pts):
            raise DomainError("site dimension mismatch")
        self.d = d
        self.half_side = half_side
        self.sites: tuple[Coord, ...] = tuple(pts)
        self.index: dict[Coord, int] = {p: i for i, p in enumerate(pts)}

        closed: set[Edge] = set()
        for p in pts:
            for k in range(d):
                for s in (1, -1):
                    closed.add(make_edge(p, _add(p, _unit(d, k, s))))
        self.closed_edges: tuple[Edge, ...] = tuple(sorted(closed))
        self.edge_index: dict[Edge, int] = {e: i for i, e in enumerate(self.closed_edges)}
        self.interior_edges: tuple[Edge, ...] = tuple(
            e for e in self.closed_edges if e[0] in self.index and e[1] in self.index
        )

        n, m = len(pts), len(self.closed_edges)
        self.edge_a = np.empty(m, dtype=np.int64)
        self.edge_b = np.empty(m, dtype=np.int64)
        self.edge_exterior: list[Coord | None] = []
        for j, (x, y) in enumerate(self.closed_edges):
            ix, iy = self.index.get(x, -1), self.index.get(y, -1)
            if ix < 0:
                ix, iy, ext = iy, -1, x
            else:
                ext = y if iy < 0 else None
            self.edge_a[j], self.edge_b[j] = ix, iy
            self.edge_exterior.append(ext)

        # neighbour table: slot k pairs site i with the edge in direction k
        self.nb_site = np.full((n, 2 * d), -1, dtype=np.int64)
        self.nb_edge = np.empty((n, 2 * d), dtype=np.int64)
        self.nb_coord: list[list[Coord]] = []
        for i, p in enumerate(pts):
            row = []
            for k in range(d):
                for s_i, s in enumerate((1, -1)):
                    q = _add(p, _unit(d, k, s))
                    slot = 2 * k + s_i
                    self.nb_edge[i, slot] = self.edge_index[make_edge(p, q)]
                    self.nb_site[i, slot] = self.index.get(q, -1)
                    row.append(q)
            self.nb_coord.append(row)

    @classmethod
    def from_sites(cls, d: int, sites: Sequence[Coord]) -> "LatticeBox":
        return cls(d, sites)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def shape(self) -> tuple[int, ...] | None:
        if self.half_side is None:
            return None
        return (2 * self.half_side + 1,) * self.d

    def origin_index(self) -> int:
        o = (0,) * self.d
        if o not in self.index:
            raise DomainError("the origin is not a site of this box")
        return self.index[o]

    def contains_edge(self, e: Edge) -> bool:
        return e in self.edge_index

    def __repr__(self) -> str:
        return f"LatticeBox(d={self.d}, sites={self.n_sites}, half_side={self.half_side})"


def build_box(d: int, N: int, max_sites: int = MAX_BOX_SITES) -> LatticeBox:
    """The symmetric box {-N..N}^d."""
    if d <= 0 or N < 0:
        raise CapacityError(f"inadmissible box parameters d={d}, N={N}")
    if (2 * N + 1) ** d > max_sites:
        raise CapacityError(f"(2N+1)^d = {(2 * N + 1) ** d} sites exceeds cap {max_sites}")
    rng_ = range(-N, N + 1)
    return LatticeBox(d, list(itertools.product(rng_, repeat=d)), half_side=N)


# ---------------------------------------------------------------------------
# disorder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DisorderSpec:
    """Law of the i.i.d. couplings plus the master seed."""

    kind: str = "constant"
    value: float = 1.0
    p_zero: float = 0.0
    support: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind == "constant":
            if not 0.0 <= self.value <= 1.0:
                raise DomainError("constant coupling must lie in [0, 1]")
        elif self.kind == "bernoulli":
            if not 0.0 <= self.p_zero <= 1.0:
                raise DomainError("P(J=0) must lie in [0, 1]")
        elif self.kind == "discrete":
            if len(self.support) != len(self.probs) or not self.support:
                raise DomainError("support and probs must be nonempty and of equal length")
            if any(not 0.0 <= s <= 1.0 for s in self.support):
                raise DomainError("support points must lie in [0, 1]")
            if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
                raise DomainError("probabilities must be nonnegative and sum to 1")
        else:
            raise DomainError(f"unknown disorder kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float, seed: int = 0) -> "DisorderSpec":
        return cls("constant", value=value, seed=seed)

    @classmethod
    def bernoulli(cls, p_zero: float, seed: int = 0) -> "DisorderSpec":
        return cls("bernoulli", p_zero=p_zero, seed=seed)

    @classmethod
    def discrete(cls, support, probs, seed: int = 0) -> "DisorderSpec":
        return cls("discrete", support=tuple(map(float, support)), probs=tuple(map(float, probs)), seed=seed)

    def _atoms(self) -> list[tuple[float, float]]:
        if self.kind == "constant":
            return [(self.value, 1.0)]
        if self.kind == "bernoulli":
            return [(0.0, self.p_zero), (1.0, 1.0 - self.p_zero)]
        return list(zip(self.support, self.probs))

    @property
    def j_min(self) -> float:
        return min(v for v, p in self._atoms() if p > 0)

    @property
    def j_max(self) -> float:
        return max(v for v, p in self._atoms() if p > 0)

    @property
    def prob_zero(self) -> float:
        return sum(p for v, p in self._atoms() if v == 0.0)

    def quantile(self, u: float) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "bernoulli":
            return 0.0 if u < self.p_zero else 1.0
        acc = 0.0
        for v, p in zip(self.support, self.probs):
            acc += p
            if u < acc:
                return v
        return self.support[-1]

    def with_seed(self, seed: int) -> "DisorderSpec":
        return DisorderSpec(self.kind, self.value, self.p_zero, self.support, self.probs, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "p_zero": self.p_zero,
                "support": list(self.support), "probs": list(self.probs), "seed": self.seed}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DisorderSpec":
        return cls(data.get("kind", "constant"), float(data.get("value", 1.0)), float(data.get("p_zero", 0.0)),
                   tuple(data.get("support", ())), tuple(data.get("probs", ())), int(data.get("seed", 0)))


def sample_edge_values(spec: DisorderSpec, edges: Sequence[Edge]) -> np.ndarray:
    """Coupling values for arbitrary edges; each edge reads its own keyed stream."""
    return np.array([spec.quantile(keyed_uniform(spec.seed, "J", e[0], e[1])) for e in edges], dtype=float)


@dataclass(frozen=True)
class CouplingField:
    box: LatticeBox
    values: np.ndarray
    provenance: tuple = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.box.closed_edges),):
            raise DomainError("coupling vector must cover E^w(box)")
        if np.any(vals < 0) or np.any(vals > 1):
            raise DomainError("couplings must lie in [0, 1]")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, box: LatticeBox, value: float) -> "CouplingField":
        return cls(box, np.full(len(box.closed_edges), float(value)), (("constant", float(value)),))

    def __getitem__(self, e: Edge) -> float:
        return float(self.values[self.box.edge_index[make_edge(*e)]])

    def get(self, e: Edge, default: float | None = None) -> float:
        e = make_edge(*e)
        j = self.box.edge_index.get(e)
        if j is None:
            if default is None:
                raise DomainError(f"edge {e} outside the box")
            return default
        return float(self.values[j])

    @property
    def j_max(self) -> float:
        return float(self.values.max()) if len(self.values) else 0.0

    def replace(self, mapping: Mapping[Edge, float], note=None) -> "CouplingField":
        vals = self.values.copy()
        for e, v in mapping.items():
            vals[self.box.edge_index[make_edge(*e)]] = v
        prov = self.provenance + ((note,) if note is not None else ())
        return CouplingField(self.box, vals, prov)


def coupling_values(J, edges: Sequence[Edge]) -> np.ndarray:
    """Look up couplings for ``edges`` from a field, a mapping or a constant."""
    if isinstance(J, CouplingField):
        return np.array([J.get(e) for e in edges], dtype=float)
    if isinstance(J, Mapping):
        return np.array([float(J[make_edge(*e)]) for e in edges], dtype=float)
    if callable(J):
        return np.array([float(J(make_edge(*e))) for e in edges], dtype=float)
    return np.full(len(edges), float(J))


def sample_couplings(box: LatticeBox, spec: DisorderSpec) -> CouplingField:
    vals = sample_edge_values(spec, box.closed_edges)
    return CouplingField(box, vals, (("sampled", spec.to_dict()),))


def force_dilution(J: CouplingField, section: Sequence[Edge]) -> CouplingField:
    """Set ``J_e = 0`` on every edge of ``section``."""
    edges = [make_edge(*e) for e in section]
    bad = [e for e in edges if e not in J.box.edge_index]
    if bad:
        raise DomainError(f"section edges outside E^w(box): {bad[:3]}")
    return J.replace({e: 0.0 for e in edges}, note=("force_dilution", tuple(edges)))


# disorder file -------------------------------------------------------------

_HEADER = "dilute-ising-J v1"


def write_disorder(path, J: CouplingField) -> None:
    if J.box.half_side is None:
        raise UnsupportedError("disorder files describe symmetric boxes only")
    lines = [f"{_HEADER} d={J.box.d} N={J.box.half_side}"]
    for (x, y), v in zip(J.box.closed_edges, J.values):
        lines.append(f"{','.join(map(str, x))} {','.join(map(str, y))} {v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_disorder(path) -> CouplingField:
    text = Path(path).read_text().splitlines()
    head = text[0].split()
    if " ".join(head[:2]) != _HEADER:
        raise DomainError("not a dilute-ising-J v1 file")
    opts = dict(tok.split("=") for tok in head[2:])
    box = build_box(int(opts["d"]), int(opts["N"]))
    vals = np.empty(len(box.closed_edges))
    seen = 0
    for line in text[1:]:
        if not line.strip():
            continue
        xs, ys, v = line.split()
        e = make_edge(tuple(map(int, xs.split(","))), tuple(map(int, ys.split(","))))
        vals[box.edge_index[e]] = float(v)
        seen += 1
    if seen != len(box.closed_edges):
        raise DomainError("disorder file does not cover E^w(box)")
    return CouplingField(box, vals, (("file", str(path)),))


# ---------------------------------------------------------------------------
# spins
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpinConfig:
    """Interior spins plus a frozen exterior ('plus', 'minus' or a coord->spin map)."""

    box: LatticeBox
    spins: np.ndarray
    boundary: object = "plus"

    def __post_init__(self):
        s = np.asarray(self.spins, dtype=np.int8)
        if s.shape != (self.box.n_sites,) or not np.all(np.abs(s) == 1):
            raise DomainError("spins must be a +-1 vector over the box sites")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "spins", s)

    @classmethod
    def uniform(cls, box: LatticeBox, value: int = 1, boundary="plus") -> "SpinConfig":
        return cls(box, np.full(box.n_sites, value, dtype=np.int8), boundary)

    def exterior_spin(self, z: Coord) -> int:
        return boundary_spin(self.boundary, z)

    def flipped(self, x: int) -> "SpinConfig":
        s = self.spins.copy()
        s[x] = -s[x]
        return SpinConfig(self.box, s, self.boundary)

    def as_grid(self) -> np.ndarray:
        if self.box.shape is None:
            raise UnsupportedError("grid view needs a symmetric box")
        return self.spins.reshape(self.box.shape)

    def __le__(self, other: "SpinConfig") -> bool:
        return bool(np.all(self.spins <= other.spins))


def boundary_spin(boundary, z: Coord) -> int:
    if boundary == "plus":
        return 1
    if boundary == "minus":
        return -1
    if isinstance(boundary, Mapping):
        return int(boundary[tuple(z)])
    raise DomainError(f"unknown boundary condition {boundary!r}")


def exterior_spins(box: LatticeBox, boundary) -> np.ndarray:
    """Exterior spin for every closed edge (0 on interior edges)."""
    out = np.zeros(len(box.closed_edges), dtype=float)
    for j, z in enumerate(box.edge_exterior):
        if z is not None:
            out[j] = boundary_spin(boundary, z)
    return out


def _check_field(box: LatticeBox, J: CouplingField):
    if J.box is not box and J.box.closed_edges != box.closed_edges:
        raise DomainError("coupling field and box do not match")


def hamiltonian(box: LatticeBox, J: CouplingField, sigma: SpinConfig) -> float:
    _check_field(box, J)
    if sigma.box is not box and sigma.box.sites != box.sites:
        raise DomainError("configuration and box do not match")
    s = sigma.spins.astype(float)
    other = np.where(box.edge_b >= 0, s[np.maximum(box.edge_b, 0)], exterior_spins(box, sigma.boundary))
    return float(-np.sum(J.values * s[box.edge_a] * other))


def hamiltonian_plus(box: LatticeBox, J: CouplingField, sigma: SpinConfig) -> float:
    if sigma.boundary != "plus":
        raise DomainError("hamiltonian_plus expects a plus boundary condition")
    return hamiltonian(box, J, sigma)


def local_fields(box: LatticeBox, J: CouplingField, spins: np.ndarray, boundary="plus") -> np.ndarray:
    """``S_x = sum_{y~x} J_xy sigma_y`` for every site (exterior spins included)."""
    ext = exterior_spins(box, boundary)
    nb_spin = np.where(box.nb_site >= 0, np.asarray(spins, dtype=float)[np.maximum(box.nb_site, 0)],
                       ext[box.nb_edge])
    return np.sum(J.values[box.nb_edge] * nb_spin, axis=1)


# ---------------------------------------------------------------------------
# exact Gibbs measures
# ---------------------------------------------------------------------------


def enumerate_states(n: int) -> np.ndarray:
    """All 2**n spin vectors; row s has +1 at site i iff bit i of s is set."""
    idx = np.arange(1 << n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def state_energies(box: LatticeBox, J: CouplingField, states: np.ndarray, boundary="plus") -> np.ndarray:
    ext = exterior_spins(box, boundary)
    H = np.zeros(states.shape[0])
    for j in range(len(box.closed_edges)):
        a, b = box.edge_a[j], box.edge_b[j]
        if J.values[j] == 0.0:
            continue
        other = states[:, b] if b >= 0 else ext[j]
        H -= J.values[j] * states[:, a] * other
    return H


@dataclass(frozen=True)
class GibbsTable:
    box: LatticeBox
    beta: float
    boundary: object
    states: np.ndarray
    energies: np.ndarray
    probs: np.ndarray

    def expect(self, f) -> float:
        """Expectation of ``f``: a per-state vector or a callable on the state matrix."""
        vals = f(self.states) if callable(f) else np.asarray(f, dtype=float)
        return float(np.dot(self.probs, vals))

    def spin_mean(self, site: int) -> float:
        return float(np.dot(self.probs, self.states[:, site]))

    def prob_of(self, spins: np.ndarray) -> float:
        bits = (np.asarray(spins) > 0).astype(np.int64)
        return float(self.probs[int(np.dot(bits, 1 << np.arange(len(bits))))])


def gibbs_exact(box: LatticeBox, J: CouplingField, beta: float, boundary="plus",
                cap: int = EXACT_SITE_CAP) -> GibbsTable:
    """Exact Gibbs law by enumeration of all ``2**|box|`` configurations."""
    _check_field(box, J)
    if box.n_sites > cap:
        raise CapacityError(f"{box.n_sites} sites exceeds the exact-enumeration cap {cap}")
    states = enumerate_states(box.n_sites)
    H = state_energies(box, J, states, boundary)
    logw = -0.5 * beta * H
    logw -= logw.max()
    w = np.exp(logw)
    return GibbsTable(box, float(beta), boundary, states, H, w / w.sum())


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


def magnetization(sigma, sites: Sequence[int] | None = None) -> float:
    s = sigma.spins if isinstance(sigma, SpinConfig) else np.asarray(sigma)
    if sites is not None:
        s = s[np.asarray(sites, dtype=np.int64)]
    if s.size == 0:
        raise DomainError("magnetization of an empty set")
    return float(np.mean(s))


def profile_MK(sigma, K: int, N: int | None = None) -> np.ndarray:
    """Block-averaged magnetization on the K-blocks of a cubic box of side N.

    ``sigma`` is a SpinConfig on a symmetric box or an array of shape (N,)*d.
    Sites are relabelled 1..N along each axis; block ``i`` holds sites
    ``K*i + 1 .. K*i + K``.  Edge blocks cut by the box are averaged over the
    sites they actually contain.
    """
    if K < 1:
        raise DomainError("block size K must be >= 1")
    grid = sigma.as_grid() if isinstance(sigma, SpinConfig) else np.asarray(sigma)
    if N is not None and any(s != N for s in grid.shape):
        raise DomainError("array shape does not match side length N")
    nb = [math.ceil(s / K) for s in grid.shape]
    sums = np.zeros(nb)
    counts = np.zeros(nb)
    idx = np.indices(grid.shape).reshape(grid.ndim, -1) // K
    np.add.at(sums, tuple(idx), grid.reshape(-1).astype(float))
    np.add.at(counts, tuple(idx), 1.0)
    return sums / counts


def integrate_profile(profile: np.ndarray, N: int, K: int) -> float:
    """Integral over [0,1]^d of the piecewise-constant block profile."""
    d = profile.ndim
    widths = [np.minimum(K, N - K * np.arange(profile.shape[k])) / N for k in range(d)]
    vol = widths[0]
    for w in widths[1:]:
        vol = np.multiply.outer(vol, w)
    return float(np.sum(profile * vol))


def plus_circuit_exists(sigma: SpinConfig, inner: int, outer: int) -> bool:
    """Whether a nearest-neighbour circuit of plus spins in the annulus
    ``inner < |x|_inf <= outer`` surrounds the origin (d = 2 only).

    Equivalent test used here: no *-connected chain of minus spins in the
    annulus joins the inner region to the outer ring.
    """
    box = sigma.box
    if box.d != 2:
        raise UnsupportedError("plus circuits are defined for d = 2 only")
    if not 0 <= inner < outer:
        raise DomainError("need 0 <= inner < outer")
    for x in itertools.product(range(-outer, outer + 1), repeat=2):
        if x not in box.index:
            raise DomainError("annulus leaves the box")

    def norm(x):
        return max(abs(x[0]), abs(x[1]))

    def minus(x):
        return sigma.spins[box.index[x]] < 0

    star = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    frontier = []
    seen = set()
    for x in itertools.product(range(-inner - 1, inner + 2), repeat=2):
        if norm(x) == inner + 1 and minus(x):
            frontier.append(x)
            seen.add(x)
    while frontier:
        x = frontier.pop()
        if norm(x) == outer:
            return False
        for dx in star:
            y = (x[0] + dx[0], x[1] + dx[1])
            if y not in seen and inner < norm(y) <= outer and minus(y):
                seen.add(y)
                frontier.append(y)
    return True


def finite_box_magnetization(table: GibbsTable) -> float:
    """Finite-box plug-in for the thermodynamic magnetization: mu(sigma_0)."""
    return table.spin_mean(table.box.origin_index())


def random_spins(box: LatticeBox, seed: int, boundary="plus", *key) -> SpinConfig:
    g = stream(seed, "spins", *key)
    return SpinConfig(box, g.choice(np.array([-1, 1], dtype=np.int8), size=box.n_sites), boundary)
