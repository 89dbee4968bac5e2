"""Random-cluster (FK) measures with quenched couplings and the Edwards-Sokal coupling.

Edge configurations over an ordered edge list are encoded as integers: bit
``j`` is ``omega`` on edge ``j``.  Boundary wirings are turned into groups of
endpoint vertices that are connected through the exterior.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .model import Coord, CouplingField, Edge, LatticeBox, SpinConfig, coupling_values, exterior_spins, make_edge
from .rng import stream

FK_EDGE_CAP = 22
HOLLEY_EDGE_CAP = 12
HOLLEY_TOL = 1e-12


def _endpoints(edges: Sequence[Edge]) -> list[Coord]:
    return sorted({v for e in edges for v in e})


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _complement_groups(edges: Sequence[Edge]) -> list[list[Coord]]:
    """Endpoints of ``edges`` grouped by connectivity through the complement edge set.

    Works inside the bounding box enlarged by one; its outer frame is joined
    through infinity, so finite holes of the complement are handled exactly.
    """
    eset = set(edges)
    verts = _endpoints(edges)
    d = len(verts[0])
    lo = [min(v[k] for v in verts) - 1 for k in range(d)]
    hi = [max(v[k] for v in verts) + 1 for k in range(d)]
    pts = list(itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]))
    idx = {p: i for i, p in enumerate(pts)}
    uf = _UnionFind(len(pts) + 1)
    outside = len(pts)
    touched = set()
    for p in pts:
        if any(p[k] in (lo[k], hi[k]) for k in range(d)):
            uf.union(idx[p], outside)
        for k in range(d):
            q = p[:k] + (p[k] + 1,) + p[k + 1:]
            if q in idx and (p, q) not in eset:
                uf.union(idx[p], idx[q])
                touched.add(p)
                touched.add(q)
    groups: dict[int, list[Coord]] = {}
    for v in verts:
        if v in touched:
            groups.setdefault(uf.find(idx[v]), []).append(v)
    return [g for g in groups.values() if len(g) > 1]


@dataclass(frozen=True)
class Wiring:
    """Boundary condition for clusters: ``free``, ``wired`` or an explicit partition.

    An explicit partition lists groups of vertices that the exterior
    configuration connects to each other.
    """

    kind: str = "wired"
    partition: tuple[tuple[Coord, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in ("free", "wired", "partition"):
            raise DomainError(f"unknown wiring {self.kind!r}")

    @classmethod
    def free(cls) -> "Wiring":
        return cls("free")

    @classmethod
    def wired(cls) -> "Wiring":
        return cls("wired")

    @classmethod
    def from_partition(cls, groups) -> "Wiring":
        return cls("partition", tuple(tuple(tuple(v) for v in g) for g in groups))

    def groups(self, edges: Sequence[Edge]) -> list[list[Coord]]:
        if self.kind == "free" or not edges:
            return []
        if self.kind == "wired":
            return _complement_groups(edges)
        verts = set(_endpoints(edges))
        return [[v for v in g if v in verts] for g in self.partition]


def _as_wiring(w) -> Wiring:
    if isinstance(w, Wiring):
        return w
    if w in ("free", "f"):
        return Wiring.free()
    if w in ("wired", "w"):
        return Wiring.wired()
    raise DomainError(f"unknown wiring {w!r}")


@dataclass(frozen=True)
class FKParams:
    q: float
    beta: float
    J: object  # CouplingField, mapping, callable or constant

    def __post_init__(self):
        if self.q < 1:
            raise DomainError("q must be >= 1")
        if self.beta < 0:
            raise DomainError("beta must be >= 0")

    def p(self, edges: Sequence[Edge]) -> np.ndarray:
        """``p_e = 1 - exp(-beta J_e)`` in edge order."""
        return -np.expm1(-self.beta * coupling_values(self.J, edges))


@dataclass(frozen=True)
class ClusterConfig:
    edges: tuple[Edge, ...]
    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=np.uint8)
        if w.shape != (len(self.edges),) or np.any(w > 1):
            raise DomainError("omega must be a 0/1 vector over the edge set")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    @classmethod
    def from_index(cls, edges: Sequence[Edge], s: int) -> "ClusterConfig":
        return cls(tuple(edges), np.array([(s >> j) & 1 for j in range(len(edges))], dtype=np.uint8))

    def index(self) -> int:
        return int(sum(int(b) << j for j, b in enumerate(self.omega)))

    def __getitem__(self, e: Edge) -> int:
        return int(self.omega[self.edges.index(make_edge(*e))])

    def open_edges(self) -> list[Edge]:
        return [e for e, b in zip(self.edges, self.omega) if b]

    def dumps(self) -> str:
        lines = []
        for (x, y), b in zip(self.edges, self.omega):
            lines.append(",".join(str(v) for v in (*x, *y, int(b))))
        return "\n".join(lines) + "\n"

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ClusterConfig":
        edges, vals = [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            nums = [int(v) for v in line.split(",")]
            d = (len(nums) - 1) // 2
            edges.append(make_edge(tuple(nums[:d]), tuple(nums[d:2 * d])))
            vals.append(nums[-1])
        return cls(tuple(edges), np.array(vals, dtype=np.uint8))

    @classmethod
    def load(cls, path) -> "ClusterConfig":
        with open(path) as fh:
            return cls.loads(fh.read())


def _union_structure(edges, omega, wiring: Wiring):
    verts = _endpoints(edges)
    vid = {v: i for i, v in enumerate(verts)}
    uf = _UnionFind(len(verts))
    for g in wiring.groups(edges):
        for v in g[1:]:
            uf.union(vid[g[0]], vid[v])
    for (x, y), b in zip(edges, omega):
        if b:
            uf.union(vid[x], vid[y])
    return verts, vid, uf


def cluster_count(edges: Sequence[Edge], omega, wiring="wired") -> int:
    """Number of clusters of endpoint vertices under ``omega`` joined with the wiring."""
    edges = tuple(edges)
    if isinstance(omega, ClusterConfig):
        omega = omega.omega
    verts, _, uf = _union_structure(edges, omega, _as_wiring(wiring))
    return len({uf.find(i) for i in range(len(verts))})


def all_cluster_labels(edges: Sequence[Edge], wiring="free") -> tuple[list[Coord], np.ndarray]:
    """Cluster labels of every configuration, by doubling over edges.

    Row ``s`` holds, per endpoint vertex, the smallest vertex index of its
    cluster under configuration ``s`` joined with the wiring.
    """
    wiring = _as_wiring(wiring)
    verts = _endpoints(edges)
    vid = {v: i for i, v in enumerate(verts)}
    nv = len(verts)
    uf = _UnionFind(nv)
    for g in wiring.groups(edges):
        for v in g[1:]:
            uf.union(vid[g[0]], vid[v])
    dtype = np.int8 if nv < 127 else np.int16
    labels = np.array([[uf.find(i) for i in range(nv)]], dtype=dtype)
    for x, y in edges:
        a, b = vid[x], vid[y]
        la, lb = labels[:, a], labels[:, b]
        lo = np.minimum(la, lb)[:, None]
        hi = np.maximum(la, lb)[:, None]
        merged = np.where(labels == hi, lo, labels)
        labels = np.concatenate([labels, merged.astype(dtype)])
    return verts, labels


def _all_cluster_counts(edges: Sequence[Edge], wiring: Wiring) -> np.ndarray:
    verts, labels = all_cluster_labels(edges, wiring)
    return (labels == np.arange(len(verts), dtype=labels.dtype)[None, :]).sum(axis=1)


@dataclass
class FKTable:
    edges: tuple[Edge, ...]
    params: FKParams
    wiring: Wiring
    counts: np.ndarray
    probs: np.ndarray

    def config(self, s: int) -> ClusterConfig:
        return ClusterConfig.from_index(self.edges, s)

    def edge_marginal(self, j: int) -> float:
        idx = np.arange(len(self.probs))
        return float(self.probs[((idx >> j) & 1) == 1].sum())

    def prob_event(self, mask: np.ndarray) -> float:
        return float(self.probs[mask].sum())


def _bit_matrix(m: int) -> np.ndarray:
    idx = np.arange(1 << m, dtype=np.int64)
    return ((idx[:, None] >> np.arange(m)) & 1).astype(bool)


def _product_logweights(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lp, lq = np.log(p), np.log1p(-p)
    out = np.zeros(1)
    for a, b in zip(lq, lp):
        out = np.concatenate([out + a, out + b])
    return out


def fk_exact(edges: Sequence[Edge], params: FKParams, wiring="wired", cap: int = FK_EDGE_CAP) -> FKTable:
    """Exact FK law ``prod p^w (1-p)^(1-w) q^C / Z`` by enumeration."""
    edges = tuple(make_edge(*e) for e in edges)
    if len(edges) > cap:
        raise CapacityError(f"{len(edges)} edges exceeds the FK enumeration cap {cap}")
    wiring = _as_wiring(wiring)
    if not edges:
        return FKTable(edges, params, wiring, np.zeros(1, dtype=np.int64), np.ones(1))
    counts = _all_cluster_counts(edges, wiring)
    logw = _product_logweights(params.p(edges)) + counts * math.log(params.q)
    logw -= logw.max()
    w = np.exp(logw)
    return FKTable(edges, params, wiring, counts, w / w.sum())


# ---------------------------------------------------------------------------
# Edwards-Sokal
# ---------------------------------------------------------------------------


@dataclass
class ESTable:
    box: LatticeBox
    beta: float
    edges: tuple[Edge, ...]
    joint: np.ndarray  # shape (2^|box|, 2^|E^w|)

    def sigma_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    def omega_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)


ES_STATE_CAP = 1 << 22


def es_joint_exact(box: LatticeBox, J: CouplingField, beta: float) -> ESTable:
    """Joint law of (sigma, omega) on ``E^w`` with plus exterior:
    weight ``prod_e [(1-p_e) 1{w_e=0} + p_e 1{w_e=1} 1{s_x = s_y}]``."""
    from .model import enumerate_states

    edges = box.closed_edges
    n, m = box.n_sites, len(edges)
    if (1 << (n + m)) > ES_STATE_CAP:
        raise CapacityError(f"joint table of 2^{n + m} entries exceeds the cap")
    p = -np.expm1(-beta * J.values)
    states = enumerate_states(n).astype(int)
    ext = exterior_spins(box, "plus")
    W = np.ones((1 << n, 1))
    for j in range(m):
        a, b = box.edge_a[j], box.edge_b[j]
        other = states[:, b] if b >= 0 else ext[j]
        agree = (states[:, a] == other).astype(float)
        closed = np.full(1 << n, 1.0 - p[j])
        opened = p[j] * agree
        W = np.concatenate([W * closed[:, None], W * opened[:, None]], axis=1)
    return ESTable(box, float(beta), edges, W / W.sum())


def es_sample_sigma_given_omega(box: LatticeBox, omega: ClusterConfig, seed: int, wiring="wired",
                                key=0) -> SpinConfig:
    """Clusters touching the exterior get +1, the others an independent fair sign."""
    wiring = _as_wiring(wiring)
    verts, vid, uf = _union_structure(omega.edges, omega.omega, wiring)
    plus_roots = {uf.find(vid[v]) for v in verts if v not in box.index}
    g = stream(seed, "es-sigma", key)
    signs: dict[int, int] = {}
    spins = np.empty(box.n_sites, dtype=np.int8)
    for i, x in enumerate(box.sites):
        if x not in vid:
            r = ("isolated", i)
        else:
            r = uf.find(vid[x])
        if r in plus_roots:
            spins[i] = 1
            continue
        if r not in signs:
            signs[r] = 1 if g.random() < 0.5 else -1
        spins[i] = signs[r]
    return SpinConfig(box, spins, "plus")


def es_sample_omega_given_sigma(sigma: SpinConfig, J: CouplingField, beta: float, seed: int,
                                key=0) -> ClusterConfig:
    """Edges of ``E^w`` open independently with probability ``p_e 1{s_x = s_y}``."""
    box = sigma.box
    ext = exterior_spins(box, sigma.boundary)
    s = sigma.spins.astype(int)
    other = np.where(box.edge_b >= 0, s[np.maximum(box.edge_b, 0)], ext)
    agree = s[box.edge_a] == other
    p = -np.expm1(-beta * J.values)
    u = stream(seed, "es-omega", key).random(len(box.closed_edges))
    return ClusterConfig(box.closed_edges, ((u < p) & agree).astype(np.uint8))


# ---------------------------------------------------------------------------
# single-edge heat-bath chain
# ---------------------------------------------------------------------------


class FKEdgeChain:
    """Random-scan single-edge heat bath for the FK measure.

    Given the rest, edge ``e = {a, b}`` is open with probability ``p_e`` when
    ``a`` and ``b`` are already connected without ``e``, and
    ``p_e / (p_e + q (1 - p_e))`` otherwise (closing it would then add one
    cluster).
    """

    def __init__(self, edges: Sequence[Edge], params: FKParams, wiring="wired", seed: int = 0,
                 replica: int = 0, initial=None):
        self.edges = tuple(make_edge(*e) for e in edges)
        self.params = params
        self.wiring = _as_wiring(wiring)
        self.p = params.p(self.edges)
        self.q = float(params.q)
        verts = _endpoints(self.edges)
        self.vid = {v: i for i, v in enumerate(verts)}
        nv = len(verts)
        # adjacency: real vertices plus one virtual hub per wiring group
        groups = self.wiring.groups(self.edges)
        self.n_nodes = nv + len(groups)
        self.hub_adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for gi, g in enumerate(groups):
            h = nv + gi
            for v in g:
                self.hub_adj[h].append(self.vid[v])
                self.hub_adj[self.vid[v]].append(h)
        self.ends = [(self.vid[x], self.vid[y]) for x, y in self.edges]
        self.incident: list[list[int]] = [[] for _ in range(nv)]
        for j, (a, b) in enumerate(self.ends):
            self.incident[a].append(j)
            self.incident[b].append(j)
        if initial is None:
            self.omega = np.zeros(len(self.edges), dtype=np.uint8)
        else:
            self.omega = np.array(initial.omega if isinstance(initial, ClusterConfig) else initial, dtype=np.uint8)
        self.g = stream(seed, "fk-chain", replica)
        self.steps = 0

    def _connected_without(self, j: int) -> bool:
        a, b = self.ends[j]
        if a == b:
            return True
        seen = {a}
        stack = [a]
        nv = len(self.incident)
        while stack:
            v = stack.pop()
            if v == b:
                return True
            nbrs = list(self.hub_adj[v])
            if v < nv:
                for k in self.incident[v]:
                    if k != j and self.omega[k]:
                        x, y = self.ends[k]
                        nbrs.append(y if x == v else x)
            for w in nbrs:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    def open_probability(self, j: int) -> float:
        p = self.p[j]
        if self._connected_without(j):
            return float(p)
        return float(p / (p + self.q * (1.0 - p)))

    def run(self, steps: int) -> "FKEdgeChain":
        m = len(self.edges)
        if m == 0:
            return self
        js = self.g.integers(0, m, size=steps)
        us = self.g.random(steps)
        for j, u in zip(js, us):
            self.omega[j] = 1 if u < self.open_probability(int(j)) else 0
        self.steps += steps
        return self

    def config(self) -> ClusterConfig:
        return ClusterConfig(self.edges, self.omega.copy())

    def samples(self, n: int, thin: int, burn_in: int = 0):
        self.run(burn_in)
        for _ in range(n):
            self.run(thin)
            yield self.config()


def fk_edge_dynamics(edges: Sequence[Edge], params: FKParams, wiring="wired", steps: int = 0, seed: int = 0,
                     replica: int = 0) -> FKEdgeChain:
    """A single-edge heat-bath chain advanced by ``steps`` updates."""
    return FKEdgeChain(edges, params, wiring, seed, replica).run(steps)


def edge_chain_kernel(edges: Sequence[Edge], params: FKParams, wiring="wired") -> np.ndarray:
    """Exact one-step transition matrix of the random-scan chain (small edge sets)."""
    edges = tuple(make_edge(*e) for e in edges)
    m = len(edges)
    if m > 10:
        raise CapacityError("kernel construction limited to 10 edges")
    chain = FKEdgeChain(edges, params, wiring)
    P = np.zeros((1 << m, 1 << m))
    for s in range(1 << m):
        chain.omega = np.array([(s >> j) & 1 for j in range(m)], dtype=np.uint8)
        for j in range(m):
            po = chain.open_probability(j)
            P[s, s | (1 << j)] += po / m
            P[s, s & ~(1 << j)] += (1 - po) / m
    return P


# ---------------------------------------------------------------------------
# stochastic domination
# ---------------------------------------------------------------------------


def check_holley(mu1, mu2, tol: float = HOLLEY_TOL) -> bool:
    """Holley lattice condition ``mu2(a|b) mu1(a&b) >= mu1(a) mu2(b)`` for all pairs.

    Tables are arrays indexed by the bit encoding (or objects with ``probs``).
    """
    p1 = np.asarray(getattr(mu1, "probs", mu1), dtype=float)
    p2 = np.asarray(getattr(mu2, "probs", mu2), dtype=float)
    if p1.shape != p2.shape:
        raise DomainError("tables live on different edge sets")
    m = int(round(math.log2(len(p1))))
    if (1 << m) != len(p1):
        raise DomainError("table length must be a power of two")
    if m > HOLLEY_EDGE_CAP:
        raise CapacityError(f"{m} edges exceeds the Holley cap {HOLLEY_EDGE_CAP}")
    p1, p2 = p1 / p1.sum(), p2 / p2.sum()
    idx = np.arange(len(p1))
    for a in range(len(p1)):
        lhs = p2[a | idx] * p1[a & idx]
        rhs = p1[a] * p2[idx]
        if np.any(lhs < rhs - tol):
            return False
    return True
