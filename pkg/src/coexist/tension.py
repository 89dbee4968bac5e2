"""Rectangles, disconnection events and finite-volume surface tensions.

The surface tension of a rectangle ``R`` with basis side ``L`` is
``tau = -L^{-(d-1)} log Phi(D_R)`` where ``Phi`` is the wired FK measure with
``q = 2`` on the interior edges of ``R`` and ``D_R`` is the event that no open
path inside ``R`` joins its upper and lower boundary parts.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import CapacityError, DomainError
from .fk import FK_EDGE_CAP, FKEdgeChain, FKParams, all_cluster_labels, fk_exact
from .model import (
    Coord,
    CouplingField,
    DisorderSpec,
    Edge,
    LatticeBox,
    coupling_values,
    make_edge,
    sample_couplings,
)
from .rng import derive_seed


@dataclass(frozen=True)
class RectSpec:
    """Axis-aligned rectangle with centre ``center``, basis side ``L``,
    half-height ``H`` and normal ``+e_axis``."""

    center: tuple[float, ...]
    L: float
    H: float
    axis: int = None  # type: ignore[assignment]

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        object.__setattr__(self, "center", c)
        axis = len(c) - 1 if self.axis is None else int(self.axis)
        object.__setattr__(self, "axis", axis)
        if self.L <= 0 or self.H <= 0:
            raise DomainError("L and H must be positive")
        if not 0 <= axis < len(c):
            raise DomainError("normal axis out of range")

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def normal(self) -> tuple[int, ...]:
        return tuple(1 if k == self.axis else 0 for k in range(self.d))

    def _range(self, k: int) -> range:
        half = self.H if k == self.axis else self.L / 2
        c = self.center[k]
        lo = math.floor(c - half) + 1
        hi = math.ceil(c + half) - 1
        return range(lo, hi + 1)

    def sites(self) -> list[Coord]:
        return list(itertools.product(*[self._range(k) for k in range(self.d)]))

    def contains(self, z: Coord) -> bool:
        return all(z[k] in self._range(k) for k in range(self.d))

    def interior_edges(self) -> list[Edge]:
        pts = self.sites()
        inside = set(pts)
        out = []
        for p in pts:
            for k in range(self.d):
                q = p[:k] + (p[k] + 1,) + p[k + 1:]
                if q in inside:
                    out.append(make_edge(p, q))
        return sorted(out)

    def inner_boundary(self) -> list[Coord]:
        inside = set(self.sites())
        out = []
        for p in sorted(inside):
            for k in range(self.d):
                if any(p[:k] + (p[k] + s,) + p[k + 1:] not in inside for s in (1, -1)):
                    out.append(p)
                    break
        return out

    def _height(self, z: Coord) -> float:
        return z[self.axis] - self.center[self.axis]

    def upper_boundary(self) -> list[Coord]:
        return [z for z in self.inner_boundary() if self._height(z) >= 0]

    def lower_boundary(self) -> list[Coord]:
        return [z for z in self.inner_boundary() if self._height(z) < 0]

    def cross_section(self) -> list[Edge]:
        """Normal-direction edges from height < 0 to height >= 0; removing them
        separates the two boundary parts."""
        return [e for e in self.interior_edges()
                if e[0][self.axis] != e[1][self.axis] and self._height(e[0]) < 0 <= self._height(e[1])]

    def box(self) -> LatticeBox:
        return LatticeBox(self.d, self.sites())

    def to_dict(self) -> dict:
        return {"center": list(self.center), "L": self.L, "H": self.H, "axis": self.axis}


def centered_rect(d: int, L: float, delta: float = 0.5, axis: int | None = None) -> RectSpec:
    """``R_{0, L, delta L}``."""
    return RectSpec((0.0,) * d, L, delta * L, axis)


def disconnected(rect: RectSpec, omega_edges: Sequence[Edge], omega) -> bool:
    """Whether ``omega`` (over ``omega_edges``) realizes the disconnection event."""
    from .fk import _UnionFind

    pts = rect.sites()
    vid = {p: i for i, p in enumerate(pts)}
    uf = _UnionFind(len(pts))
    for (x, y), b in zip(omega_edges, omega):
        if b and x in vid and y in vid:
            uf.union(vid[x], vid[y])
    up = {uf.find(vid[z]) for z in rect.upper_boundary()}
    return not any(uf.find(vid[z]) in up for z in rect.lower_boundary())


def disconnection_mask(rect: RectSpec) -> np.ndarray:
    """Indicator of the disconnection event over all configurations of ``E(R)``."""
    edges = rect.interior_edges()
    verts, labels = all_cluster_labels(edges, "free")
    vid = {v: i for i, v in enumerate(verts)}
    up = [vid[z] for z in rect.upper_boundary() if z in vid]
    lo = [vid[z] for z in rect.lower_boundary() if z in vid]
    rows = np.arange(labels.shape[0])
    P = np.zeros((labels.shape[0], len(verts)), dtype=bool)
    M = np.zeros_like(P)
    for v in up:
        P[rows, labels[:, v]] = True
    for v in lo:
        M[rows, labels[:, v]] = True
    return ~np.any(P & M, axis=1)


@dataclass
class DisconnectionResult:
    prob: float
    stderr: float
    lo: float
    hi: float
    mode: str
    n_samples: int = 0
    hits: int = 0


def clopper_pearson(hits: int, n: float, level: float = 0.95) -> tuple[float, float]:
    a = 1 - level
    lo = 0.0 if hits <= 0 else float(stats.beta.ppf(a / 2, hits, n - hits + 1))
    hi = 1.0 if hits >= n else float(stats.beta.ppf(1 - a / 2, hits + 1, n - hits))
    return lo, hi


def disconnection_prob(rect: RectSpec, J, beta: float, mode: str = "exact", budget: int = 4000,
                       seed: int = 0, thin_sweeps: int = 2, burn_sweeps: int = 50, q: float = 2.0,
                       max_steps: int = 50_000_000, replica: int = 0) -> DisconnectionResult:
    """``Phi^{J,w}(D_R)`` exactly (enumeration) or by the single-edge FK chain.

    In Monte Carlo mode ``budget`` thinned samples are taken from one chain;
    the standard error uses 20 batch means and the Clopper-Pearson interval
    uses the corresponding effective sample size.
    """
    edges = rect.interior_edges()
    params = FKParams(q, beta, J)
    if mode == "exact":
        if len(edges) > FK_EDGE_CAP:
            raise CapacityError(f"{len(edges)} edges exceeds the exact cap {FK_EDGE_CAP}")
        table = fk_exact(edges, params, "wired")
        mask = disconnection_mask(rect)
        p = float(table.probs[mask].sum())
        if p > 0.5:
            # via the complement so that a certain event is exactly 1
            p = 1.0 - float(table.probs[~mask].sum())
        p = min(1.0, max(0.0, p))
        return DisconnectionResult(p, 0.0, p, p, "exact")
    if mode != "mc":
        raise DomainError(f"unknown mode {mode!r}")
    m = max(1, len(edges))
    if (budget * thin_sweeps + burn_sweeps) * m > max_steps:
        raise CapacityError("Monte Carlo budget exhausted before the requested sample size")
    chain = FKEdgeChain(edges, params, "wired", seed, replica)
    chain.run(burn_sweeps * m)
    hits = np.empty(budget, dtype=bool)
    for i in range(budget):
        chain.run(thin_sweeps * m)
        hits[i] = disconnected(rect, chain.edges, chain.omega)
    p = float(hits.mean())
    nb = 20 if budget >= 40 else max(2, budget // 2)
    batches = np.array([b.mean() for b in np.array_split(hits.astype(float), nb)])
    se = float(batches.std(ddof=1) / math.sqrt(nb))
    se = max(se, math.sqrt(p * (1 - p) / budget))
    n_eff = budget if se == 0 or p in (0.0, 1.0) else min(budget, p * (1 - p) / se ** 2)
    lo, hi = clopper_pearson(round(p * n_eff), n_eff)
    return DisconnectionResult(p, se, lo, hi, "mc", budget, int(hits.sum()))


@dataclass
class TensionResult:
    tau: float
    tau_lo: float
    tau_hi: float
    prob: DisconnectionResult
    lower_bound_only: bool = False


def _tau_from_prob(p: float, L: float, d: int) -> float:
    if p <= 0:
        return math.inf
    return max(0.0, -math.log(p) / L ** (d - 1))


def surface_tension_tau(rect: RectSpec, J, beta: float, mode: str = "exact", **kw) -> TensionResult:
    """``tau = -L^{-(d-1)} log Phi(D_R)``; with zero Monte Carlo hits only a
    lower bound (from the upper Clopper-Pearson limit) is reported."""
    res = disconnection_prob(rect, J, beta, mode, **kw)
    d, L = rect.d, rect.L
    if res.mode == "mc" and res.hits == 0:
        lo = _tau_from_prob(res.hi, L, d)
        return TensionResult(lo, lo, math.inf, res, True)
    return TensionResult(_tau_from_prob(res.prob, L, d), _tau_from_prob(res.hi, L, d),
                         _tau_from_prob(res.lo, L, d), res)


def auto_mode(rect: RectSpec) -> str:
    return "exact" if len(rect.interior_edges()) <= FK_EDGE_CAP else "mc"


@dataclass
class QuenchedTensionTable:
    rows: list[dict]
    summary: list[dict]
    tau_min: dict
    tau_max: dict
    label: str = "finite-size estimate"

    def to_csv(self, path) -> None:
        cols = ["L", "delta", "beta", "replica", "tau_hat", "tau_lo", "tau_hi"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            w.writeheader()
            for r in self.rows:
                w.writerow({k: (repr(float(r[k])) if isinstance(r[k], float) else r[k]) for k in cols})


def estimate_quenched_tension(d: int, beta: float, spec: DisorderSpec, sizes: Sequence[float], replicas: int,
                              delta: float = 0.5, axis: int | None = None, seed: int = 0,
                              mode: str = "auto", mc_budget: int = 2000) -> QuenchedTensionTable:
    """Disorder statistics of ``tau^J`` on ``R_{0,L,delta L}`` for each ``L``."""
    rows, summary, tmin, tmax = [], [], {}, {}
    for L in sizes:
        rect = centered_rect(d, L, delta, axis)
        m = auto_mode(rect) if mode == "auto" else mode
        box = rect.box()
        vals = []
        for r in range(replicas):
            J = sample_couplings(box, spec.with_seed(derive_seed(seed, "disorder", float(L), r)))
            res = surface_tension_tau(rect, J, beta, m, budget=mc_budget, seed=derive_seed(seed, "fk", float(L), r))
            rows.append({"L": L, "delta": delta, "beta": beta, "replica": r, "tau_hat": res.tau,
                         "tau_lo": res.tau_lo, "tau_hi": res.tau_hi, "lower_bound_only": res.lower_bound_only})
            vals.append(res.tau)
        vals = np.array(vals)
        kw = dict(budget=mc_budget, seed=derive_seed(seed, "fk-extreme", float(L)))
        tmin[L] = surface_tension_tau(rect, spec.j_min, beta, m, **kw).tau
        tmax[L] = surface_tension_tau(rect, spec.j_max, beta, m, **kw).tau
        summary.append({"L": L, "mode": m, "mean": float(vals.mean()),
                        "spread": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
                        "tau_min": tmin[L], "tau_max": tmax[L]})
    means = [s["mean"] for s in summary]
    trend = "nonincreasing" if all(b <= a for a, b in zip(means, means[1:])) else (
        "nondecreasing" if all(b >= a for a, b in zip(means, means[1:])) else "non-monotone")
    for s in summary:
        s["trend"] = trend
    return QuenchedTensionTable(rows, summary, tmin, tmax)


@dataclass
class DilutionReport:
    holds: bool
    margins: np.ndarray
    taus: np.ndarray


def dilution_event_check(J, rects: Sequence[RectSpec], thresholds: Sequence[float], beta: float,
                         mode: str = "exact", **kw) -> DilutionReport:
    """Event that every rectangle has ``tau^J_{R_i} <= tau^r(x_i)``."""
    seen: set = set()
    for R in rects:
        pts = set(R.sites())
        if pts & seen:
            raise DomainError("rectangles overlap")
        seen |= pts
    if len(thresholds) != len(rects):
        raise DomainError("one threshold per rectangle is required")
    taus = np.array([surface_tension_tau(R, J, beta, mode, **kw).tau for R in rects])
    margins = taus - np.asarray(thresholds, dtype=float)
    return DilutionReport(bool(np.all(margins <= 0)), margins, taus)


# ---------------------------------------------------------------------------
# rate function model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFunctionModel:
    """Pluggable model of the lower-deviation rate ``I_n(tau)``.

    ``bernoulli_bound``: ``-||n||_1 log P(J=0)`` on ``(tau_min, tau_q]``;
    ``table``: piecewise-linear interpolation of ``(tau, value)`` nodes.
    Below ``tau_min`` the value is ``+inf``; above ``tau_q`` it is ``0``.
    """

    kind: str
    p_zero: float | None = None
    tau_nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    tau_min: float | None = None
    tau_q: float | None = None

    def __post_init__(self):
        if self.kind == "bernoulli_bound":
            if self.p_zero is None or not 0 < self.p_zero <= 1:
                raise DomainError("bernoulli_bound needs 0 < P(J=0) <= 1")
        elif self.kind == "table":
            if len(self.tau_nodes) == 0 or len(self.tau_nodes) != len(self.values):
                raise DomainError("table model needs matching nodes and values")
            if any(v < 0 or not math.isfinite(v) for v in self.values):
                raise DomainError("table values must be finite and nonnegative")
        else:
            raise DomainError(f"unknown rate model {self.kind!r}")

    @classmethod
    def bernoulli_bound(cls, p_zero: float, tau_min=None, tau_q=None) -> "RateFunctionModel":
        return cls("bernoulli_bound", float(p_zero), tau_min=tau_min, tau_q=tau_q)

    @classmethod
    def table(cls, tau_nodes, values, tau_min=None, tau_q=None) -> "RateFunctionModel":
        order = np.argsort(tau_nodes)
        return cls("table", None, tuple(float(tau_nodes[i]) for i in order),
                   tuple(float(values[i]) for i in order), tau_min, tau_q)

    def regime(self, tau: float) -> str:
        if self.tau_min is not None and tau <= self.tau_min:
            return "below"
        if self.tau_q is not None and tau > self.tau_q:
            return "above"
        return "inside"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "p_zero": self.p_zero, "tau_nodes": list(self.tau_nodes),
                "values": list(self.values), "tau_min": self.tau_min, "tau_q": self.tau_q}


def rate_model_eval(model: RateFunctionModel, n, tau: float) -> float:
    """``I_n(tau)`` for a normal ``n`` (any nonzero vector; ``||n||_1`` is taken
    after normalising to unit Euclidean length)."""
    n = np.asarray(n, dtype=float)
    norm = float(np.linalg.norm(n))
    if norm == 0:
        raise DomainError("normal must be nonzero")
    regime = model.regime(tau)
    if regime == "below":
        return math.inf
    if regime == "above":
        return 0.0
    if model.kind == "bernoulli_bound":
        return float(np.abs(n).sum() / norm * -math.log(model.p_zero))
    return float(np.interp(tau, model.tau_nodes, model.values))
