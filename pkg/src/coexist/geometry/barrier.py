"""Energy barriers: evolution paths, closed forms, grid minimax and the exponents built on them."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from ..errors import CapacityError, ContractError, CoexistError, DomainError, NumericalError
from ..tension import RateFunctionModel, rate_model_eval
from .energy import ReducedTension, _as_reduced, l1_distance, surface_energy_reduced
from .profiles import (
    TWO_PI,
    Arc,
    Disk,
    DiskCap,
    GridProfile,
    PlusProfile,
    Profile,
    Rect,
    Segment,
    square_minus_slab,
)
from .tension_fn import SurfaceTensionFn

SCAN_POINTS = 1001
PARAM_TOL = 1e-9
ENDPOINT_PROBES = (1e-13, 1e-11, 1e-9, 1e-7, 1e-5)
MINIMAX_STATE_CAP = 2 ** 20


# ---------------------------------------------------------------------------
# evolution paths
# ---------------------------------------------------------------------------


@dataclass
class DiscretePath:
    """Profiles ``v_0 = u0, ..., v_k = 1`` with L1 jumps at most ``eps``."""

    profiles: list[Profile]
    eps: float

    def validate(self, u0: Profile, tol: float = 1e-12) -> None:
        if len(self.profiles) == 0:
            raise ContractError("a path needs at least one profile")
        if l1_distance(self.profiles[0], u0) > tol:
            raise ContractError("path does not start at u0")
        if self.profiles[-1].area() > tol:
            raise ContractError("path does not end at the plus profile")
        for a, b in zip(self.profiles, self.profiles[1:]):
            if l1_distance(a, b) > self.eps + tol:
                raise ContractError(f"jump exceeds eps={self.eps}")


@dataclass
class ContinuousFamily:
    """``t -> v_t`` on ``[0, 1]`` with ``v_0 = u0`` and ``v_1 = 1``.

    ``modulus`` optionally bounds ``||v_t - v_s||_1`` by ``modulus(|t - s|)``.
    """

    name: str
    member: Callable[[float], Profile]
    modulus: Callable[[float], float] | None = None

    def validate(self, u0: Profile, tol: float = 1e-9, probes: int = 16) -> None:
        if l1_distance(self.member(0.0), u0) > tol:
            raise ContractError(f"family {self.name} does not start at u0")
        if self.member(1.0).area() > tol:
            raise ContractError(f"family {self.name} does not end at the plus profile")
        if self.modulus is not None:
            ts = np.linspace(0.0, 1.0, probes + 1)
            for a, b in zip(ts, ts[1:]):
                if l1_distance(self.member(a), self.member(b)) > self.modulus(b - a) + tol:
                    raise ContractError(f"family {self.name} breaks its continuity modulus")


def disk_chord_family(r: float, center=(0.5, 0.5), phi: float = math.pi / 2) -> ContinuousFamily:
    """The disk eroded by a chord sweeping from direction ``phi``; ``theta = pi t``."""
    c = tuple(float(x) for x in center)
    area = math.pi * r * r
    return ContinuousFamily(
        f"disk_chord(r={r})",
        lambda t: DiskCap(c, r, math.pi * min(max(t, 0.0), 1.0), phi),
        modulus=lambda s: 2.0 * area * min(1.0, 2.0 * s),
    )


def flat_front_family(rect: Rect) -> ContinuousFamily:
    """The rectangle eaten by a horizontal front moving down from its top side."""
    height = rect.y1 - rect.y0
    width = rect.x1 - rect.x0
    return ContinuousFamily(
        f"flat_front({width}x{height})",
        lambda t: square_minus_slab(rect, height * min(max(t, 0.0), 1.0)),
        modulus=lambda s: 2.0 * width * height * s,
    )


@dataclass
class EvolutionResult:
    sup_cost: float
    argmax: float
    f_u0: float
    k_contribution: float
    evaluations: int = 0

    def as_dict(self) -> dict:
        return {"sup_cost": self.sup_cost, "argmax": self.argmax, "f_u0": self.f_u0,
                "k_contribution": self.k_contribution}


def evaluate_evolution(path, u0: Profile, tau_r, tau_q: SurfaceTensionFn, validate: bool = True) -> EvolutionResult:
    """Largest reduced energy along a path, and its excess over ``F^r(u0)``.

    For a continuous family the supremum is located by a dense scan plus
    bounded scalar refinement around every local maximum of the scan and
    near both endpoints (where the supremum may only be approached).
    """
    tr = _as_reduced(u0, tau_r)
    f0 = surface_energy_reduced(u0, u0, tr, tau_q)
    if isinstance(path, DiscretePath):
        if validate:
            path.validate(u0)
        costs = [surface_energy_reduced(v, u0, tr, tau_q) for v in path.profiles]
        i = int(np.argmax(costs))
        return EvolutionResult(costs[i], float(i), f0, costs[i] - f0, len(costs))
    if not isinstance(path, ContinuousFamily):
        raise ContractError("path must be a DiscretePath or a ContinuousFamily")
    if validate:
        path.validate(u0)

    count = 0

    def F(t: float) -> float:
        nonlocal count
        count += 1
        return surface_energy_reduced(path.member(float(t)), u0, tr, tau_q)

    ts = np.linspace(0.0, 1.0, SCAN_POINTS)
    vals = np.array([F(t) for t in ts])
    best_t, best = float(ts[int(np.argmax(vals))]), float(vals.max())
    for e in ENDPOINT_PROBES:
        for t in (e, 1.0 - e):
            v = F(t)
            if v > best:
                best_t, best = t, v
    h = ts[1] - ts[0]
    peaks = [k for k in range(len(ts))
             if (k == 0 or vals[k] >= vals[k - 1]) and (k == len(ts) - 1 or vals[k] >= vals[k + 1])]
    peaks = sorted(peaks, key=lambda k: -vals[k])[:8]
    for k in peaks:
        lo, hi = max(0.0, ts[k] - h), min(1.0, ts[k] + h)
        res = optimize.minimize_scalar(lambda t: -F(t), bounds=(lo, hi), method="bounded",
                                       options={"xatol": PARAM_TOL * 0.1})
        if -res.fun > best:
            best_t, best = float(res.x), float(-res.fun)
    return EvolutionResult(best, best_t, f0, best - f0, count)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def _check_r_lam(r: float, lam: float) -> None:
    if not 0 < r <= 0.5:
        raise DomainError("radius must lie in (0, 1/2]")
    if not 0 <= lam <= 1:
        raise DomainError("lambda must lie in [0, 1]")


def barrier_disk(r: float, lam: float) -> float:
    """``2 r (sqrt(1 - lam^2) - lam acos(lam))`` for an isotropic unit tension."""
    _check_r_lam(r, lam)
    return 2.0 * r * (math.sqrt(1.0 - lam * lam) - lam * math.acos(lam))


def barrier_square(r: float, lam: float) -> float:
    """``2 r (1 - lam)`` for the square of half-side ``r`` under the l1 tension."""
    _check_r_lam(r, lam)
    return 2.0 * r * (1.0 - lam)


@dataclass
class BarrierCrossCheck:
    closed_form: float
    sweep: float
    argmax: float

    @property
    def difference(self) -> float:
        return abs(self.closed_form - self.sweep)

    def as_dict(self) -> dict:
        return {"closed_form": self.closed_form, "sweep": self.sweep, "argmax": self.argmax,
                "difference": self.difference}


def disk_barrier_crosscheck(r: float, lam: float, center=(0.5, 0.5)) -> BarrierCrossCheck:
    u0 = Disk(tuple(center), r)
    res = evaluate_evolution(disk_chord_family(r, center), u0, lam, SurfaceTensionFn.isotropic(1.0))
    return BarrierCrossCheck(barrier_disk(r, lam), res.k_contribution, math.pi * res.argmax)


def square_barrier_crosscheck(r: float, lam: float, center=(0.5, 0.5)) -> BarrierCrossCheck:
    u0 = Rect.square(center, 2 * r)
    res = evaluate_evolution(flat_front_family(u0), u0, lam, SurfaceTensionFn.l1())
    return BarrierCrossCheck(barrier_square(r, lam), res.k_contribution, res.argmax)


# ---------------------------------------------------------------------------
# grid minimax
# ---------------------------------------------------------------------------


@dataclass
class MinimaxResult:
    """Minimum over paths of the largest ``F^r`` met, minus ``F^r(u0)``."""

    k_hat: float
    bottleneck: float
    f_u0: float
    k: int
    n: int
    free_cells: list[int]
    witness: list[int]
    method: str
    cross_check: float | None = None
    n_states: int = 0

    @property
    def eps_equivalent(self) -> float:
        """L1 size of one move: ``k`` cells of area ``1/n^2`` whose value changes by 2."""
        return 2.0 * self.k / self.n ** 2

    def witness_profiles(self) -> list[GridProfile]:
        return [GridProfile.from_mask(self.n, self.free_cells, b) for b in self.witness]

    def as_dict(self) -> dict:
        return {"k_hat": self.k_hat, "bottleneck": self.bottleneck, "f_u0": self.f_u0, "k": self.k,
                "n": self.n, "eps_equivalent": self.eps_equivalent, "method": self.method, "cross_check": self.cross_check,
                "n_states": self.n_states,
                "witness": [p.to_dict() for p in self.witness_profiles()]}


def _free_cells(n: int, margin: int) -> list[int]:
    return [ix * n + iy for ix in range(margin, n - margin) for iy in range(margin, n - margin)]


def grid_state_energies(u0: GridProfile, tau_r, tau_q: SurfaceTensionFn, free: Sequence[int]) -> np.ndarray:
    """``F^r`` of every profile supported on ``free`` (bit ``j`` set: cell ``free[j]`` is minus)."""
    n = u0.n
    tr = _as_reduced(u0, tau_r)
    Rv, Rh = tr.grid_weights(n)
    V0, H0 = u0.interface_faces()
    wq_v, wq_h = tau_q((1.0, 0.0)) / n, tau_q((0.0, 1.0)) / n
    Wv = np.where(V0, Rv / n, wq_v)
    Wh = np.where(H0, Rh / n, wq_h)
    m = len(free)
    pos = {c: j for j, c in enumerate(free)}
    states = np.arange(1 << m, dtype=np.int64)
    bits = [((states >> j) & 1).astype(bool) for j in range(m)]
    zero = np.zeros(1 << m, dtype=bool)

    def cell(ix, iy):
        if 0 <= ix < n and 0 <= iy < n and ix * n + iy in pos:
            return bits[pos[ix * n + iy]]
        return None

    E = np.zeros(1 << m)
    for i in range(n + 1):
        for j in range(n):
            a, b = cell(i - 1, j), cell(i, j)
            if a is None and b is None:
                continue
            E += Wv[i, j] * ((zero if a is None else a) ^ (zero if b is None else b))
    for i in range(n):
        for j in range(n + 1):
            a, b = cell(i, j - 1), cell(i, j)
            if a is None and b is None:
                continue
            E += Wh[i, j] * ((zero if a is None else a) ^ (zero if b is None else b))
    return E


def _flip_masks(m: int, k: int) -> np.ndarray:
    out = []
    for size in range(1, min(k, m) + 1):
        for combo in combinations(range(m), size):
            out.append(sum(1 << j for j in combo))
    return np.array(out, dtype=np.int64)


def _reachable(start: int, goal: int, allowed: np.ndarray, masks: np.ndarray, parents: bool = False):
    seen = np.zeros(allowed.shape[0], dtype=bool)
    parent = np.full(allowed.shape[0], -1, dtype=np.int64) if parents else None
    seen[start] = True
    frontier = np.array([start], dtype=np.int64)
    while frontier.size:
        if seen[goal]:
            break
        nb = (frontier[:, None] ^ masks[None, :])
        src = np.broadcast_to(frontier[:, None], nb.shape).ravel()
        nb = nb.ravel()
        ok = allowed[nb] & ~seen[nb]
        nb, src = nb[ok], src[ok]
        nb, first = np.unique(nb, return_index=True)
        seen[nb] = True
        if parents:
            parent[nb] = src[first]
        frontier = nb
    return bool(seen[goal]), parent


def _widest(start: int, goal: int, E: np.ndarray, masks: np.ndarray) -> float:
    """Minimax path value by a Dijkstra variant on node weights."""
    best = np.full(E.shape[0], np.inf)
    best[start] = E[start]
    heap = [(E[start], start)]
    done = np.zeros(E.shape[0], dtype=bool)
    while heap:
        c, s = heapq.heappop(heap)
        if done[s]:
            continue
        done[s] = True
        if s == goal:
            return float(c)
        nb = s ^ masks
        cand = np.maximum(c, E[nb])
        better = cand < best[nb]
        for t, v in zip(nb[better].tolist(), cand[better].tolist()):
            best[t] = v
            heapq.heappush(heap, (v, t))
    raise CoexistError("all-plus profile unreachable")


def barrier_grid_minimax(u0: GridProfile, tau_r, tau_q: SurfaceTensionFn, k: int = 1, margin: int = 0,
                         method: str = "bisect", cap: int = MINIMAX_STATE_CAP) -> MinimaxResult:
    """Exact minimax over the graph of grid profiles joined when they differ in at most ``k`` cells.

    ``method``: ``bisect`` (binary search on the threshold plus BFS),
    ``widest`` (Dijkstra variant) or ``both`` (bisect, cross-checked).
    """
    if not isinstance(u0, GridProfile):
        raise ContractError("grid minimax needs a grid profile")
    if k < 1:
        raise DomainError("jump size k must be at least 1")
    n = u0.n
    free = _free_cells(n, margin)
    outside = np.ones(n * n, dtype=bool)
    outside[free] = False
    if np.any(u0.cells.ravel()[outside]):
        raise ContractError("u0 has minus cells inside the forced margin")
    if (1 << len(free)) > cap:
        raise CapacityError(f"2^{len(free)} grid states exceed the cap {cap}")
    tr = _as_reduced(u0, tau_r)
    E = grid_state_energies(u0, tr, tau_q, free)
    flat = u0.cells.ravel()
    start = sum(1 << j for j, c in enumerate(free) if flat[c])
    goal = 0
    f0 = float(E[start])
    if start == goal:
        return MinimaxResult(0.0, f0, f0, k, n, free, [], method, 0.0, len(E))

    m = len(free)
    if k >= m:
        # every pair of profiles is joined: jump straight to all-plus
        value = max(f0, float(E[goal]))
        return MinimaxResult(value - f0, value, f0, k, n, free, [start, goal], method, value - f0, len(E))
    masks = _flip_masks(m, k)
    cross = None
    if method in ("bisect", "both"):
        levels = np.unique(E[E >= max(f0, E[goal])])
        lo, hi = 0, len(levels) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            ok, _ = _reachable(start, goal, E <= levels[mid], masks)
            if ok:
                hi = mid
            else:
                lo = mid + 1
        value = float(levels[lo])
        if method == "both":
            cross = _widest(start, goal, E, masks) - f0
            if abs(cross - (value - f0)) > 1e-12:
                raise NumericalError(f"minimax routes disagree: {value - f0} vs {cross}")
    elif method == "widest":
        value = _widest(start, goal, E, masks)
    else:
        raise DomainError(f"unknown minimax method {method!r}")

    _, parent = _reachable(start, goal, E <= value, masks, parents=True)
    path = [goal]
    while path[-1] != start:
        path.append(int(parent[path[-1]]))
    path.reverse()
    return MinimaxResult(value - f0, value, f0, k, n, free, path, method, cross, len(E))


# ---------------------------------------------------------------------------
# dilution cost and the exponents
# ---------------------------------------------------------------------------


def dilution_cost(u0: Profile, tau_r, rate_model: RateFunctionModel) -> float:
    """``I^r(u0) = int_{boundary of u0} I_n(tau^r) dH``."""
    tr = _as_reduced(u0, tau_r)
    if isinstance(u0, PlusProfile) or u0.is_empty():
        return 0.0
    total = 0.0
    for piece in u0.pieces():
        if isinstance(piece, Segment):
            cuts = [0.0] + tr._breaks_segment(piece) + [1.0]
            for a, b in zip(cuts, cuts[1:]):
                val = rate_model_eval(rate_model, piece.normal, tr.value(piece.point(0.5 * (a + b))))
                if not math.isfinite(val):
                    raise DomainError("rate model is infinite on part of the boundary")
                total += val * piece.length * (b - a)
        else:
            cuts = [piece.a0] + tr._breaks_arc(piece) + [piece.a1]
            kinks = [q * math.pi / 4 + j * TWO_PI for q in range(8) for j in range(-2, 3)]
            for a, b in zip(cuts, cuts[1:]):
                tau = tr.value(piece.point(0.5 * (a + b)))
                probe = rate_model_eval(rate_model, (math.cos(a), math.sin(a)), tau)
                if not math.isfinite(probe):
                    raise DomainError("rate model is infinite on part of the boundary")
                pts = sorted(p for p in kinks if a < p < b)
                val, _ = integrate.quad(lambda t: rate_model_eval(rate_model, (math.cos(t), math.sin(t)), tau),
                                        a, b, points=pts or None, epsabs=1e-12, epsrel=1e-12, limit=200)
                total += piece.r * val
    return float(total)


@dataclass
class ConstrainedResult:
    value: float
    m0: float
    unconstrained: float
    lam: float

    @property
    def margin(self) -> float:
        return self.unconstrained - self.value

    def as_dict(self) -> dict:
        return {"value": self.value, "m0": self.m0, "unconstrained": self.unconstrained,
                "margin": self.margin, "lambda": self.lam}


def profile_costs(lam: float, m):
    """The two competing costs ``1 + (2 - m) lam`` and ``4 lam + 2 (1 - lam) sqrt((1 + m) / 2)``."""
    m = np.asarray(m, dtype=float)
    return 1.0 + (2.0 - m) * lam, 4.0 * lam + 2.0 * (1.0 - lam) * np.sqrt((1.0 + m) / 2.0)


def constrained_barrier_square(lam: float) -> ConstrainedResult:
    """``sup_m min`` of the two costs, attained at their crossing ``m0``."""
    if not 0 < lam < 1:
        raise DomainError("lambda must lie in (0, 1)")
    a = 1.0 - lam
    s = (-2.0 * a + math.sqrt(4.0 * a * a + 8.0 * lam * a)) / (4.0 * lam)
    m0 = 2.0 * s * s - 1.0
    root = optimize.brentq(lambda m: float(np.subtract(*profile_costs(lam, m))), -1.0, 1.0, xtol=1e-15)
    if abs(root - m0) > 1e-9:
        raise NumericalError(f"crossing disagrees: {m0} vs {root}")
    value = float(profile_costs(lam, m0)[1])
    unconstrained = 1.0 + 3.0 * lam
    if not value < unconstrained:
        raise NumericalError("constrained barrier is not strictly below the unconstrained level")
    return ConstrainedResult(value, m0, unconstrained, lam)


@dataclass
class Candidate:
    """An initial droplet ``(u0, tau^r)`` with its dilution model.

    ``barrier`` overrides the computed ``K^r``.  Otherwise it comes from the
    disk closed form (isotropic tension), the square closed form (l1
    tension) or the grid minimax (grid profiles).
    """

    u0: Profile
    tau_r: float | ReducedTension
    rate_model: RateFunctionModel
    tau_q: SurfaceTensionFn
    barrier: float | None = None
    name: str = ""
    k: int = 1

    def _lam(self) -> float:
        tr = _as_reduced(self.u0, self.tau_r)
        if tr.constant is None:
            raise DomainError("closed-form barriers need a constant reduced tension")
        return tr.constant

    def k_r(self) -> float:
        if self.barrier is not None:
            return float(self.barrier)
        if isinstance(self.u0, Disk) and self.tau_q.kind == "isotropic":
            c = self.tau_q.value
            return c * barrier_disk(self.u0.r, self._lam() / c)
        if isinstance(self.u0, Rect) and self.tau_q.kind == "l1":
            side = self.u0.x1 - self.u0.x0
            if abs(side - (self.u0.y1 - self.u0.y0)) > 1e-12:
                raise DomainError("closed form needs a square")
            return barrier_square(side / 2.0, self._lam())
        if isinstance(self.u0, GridProfile):
            return barrier_grid_minimax(self.u0, self.tau_r, self.tau_q, k=self.k).k_hat
        raise DomainError("no barrier available for this candidate; pass barrier explicitly")

    def i_r(self) -> float:
        return dilution_cost(self.u0, self.tau_r, self.rate_model)

    def f_r(self) -> float:
        return surface_energy_reduced(self.u0, self.u0, self.tau_r, self.tau_q)


@dataclass
class ExponentResult:
    value: float
    argmin: int | None
    ratios: list[float] = field(default_factory=list)
    parts: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"value": self.value, "argmin": self.argmin, "ratios": self.ratios, "parts": self.parts}


def exponent_xlambda(candidates: Sequence[Candidate], lam: float) -> ExponentResult:
    """``min (I^r + lam F^r) / K^r`` over candidates with ``K^r > 0``; ``+inf`` if none.

    An upper bound for the infimum over all admissible droplets.
    """
    ratios, parts = [], []
    for c in candidates:
        K = c.k_r()
        I = c.i_r()
        F = c.f_r()
        parts.append({"name": c.name, "I": I, "F": F, "K": K})
        ratios.append((I + lam * F) / K if K > 0 else math.inf)
    if not ratios or all(math.isinf(r) for r in ratios):
        return ExponentResult(math.inf, None, ratios, parts)
    i = int(np.argmin(ratios))
    return ExponentResult(float(ratios[i]), i, ratios, parts)


def kappa(candidates: Sequence[Candidate], d: int = 2) -> float:
    """``d / X_0``; zero when ``X_0`` is infinite."""
    x0 = exponent_xlambda(candidates, 0.0).value
    return 0.0 if math.isinf(x0) else d / x0
