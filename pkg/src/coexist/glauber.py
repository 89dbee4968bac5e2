"""Continuous-time single-spin-flip (Glauber) dynamics on finite boxes.

Rates are functions of the local energy ``h = sigma_x * sum_{y~x} J_xy sigma_y``:

* Metropolis  ``c = max(1, exp(-beta h))``
* heat bath   ``c = 1 / (1 + exp(beta h))``  (the conditional probability of
  the flipped value under weights ``exp(-(beta/2) H)``)

The dynamics is realised by a single Poisson clock of intensity
``c_M * |box|`` with a uniformly chosen site per ring; a ring at ``x`` flips
the spin with probability ``c(x, sigma) / c_M``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, ModelError, StatisticalError
from .model import (
    CouplingField,
    LatticeBox,
    SpinConfig,
    enumerate_states,
    exterior_spins,
    gibbs_exact,
    local_fields,
)
from .rng import stream

METROPOLIS = "metropolis"
HEAT_BATH = "heat_bath"
CUSTOM = "custom"


@dataclass(frozen=True)
class RateModel:
    kind: str
    beta: float
    table_h: tuple[float, ...] = ()
    table_rate: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in (METROPOLIS, HEAT_BATH, CUSTOM):
            raise ModelError(f"unknown rate model {self.kind!r}")
        if self.beta < 0:
            raise ModelError("beta must be >= 0")
        if self.kind == CUSTOM and (len(self.table_h) < 1 or len(self.table_h) != len(self.table_rate)):
            raise ModelError("custom rates need a table of (h, rate) nodes")

    @classmethod
    def metropolis(cls, beta: float) -> "RateModel":
        return cls(METROPOLIS, float(beta))

    @classmethod
    def heat_bath(cls, beta: float) -> "RateModel":
        return cls(HEAT_BATH, float(beta))

    @classmethod
    def custom(cls, beta: float, h: Sequence[float], rate: Sequence[float]) -> "RateModel":
        order = np.argsort(h)
        return cls(CUSTOM, float(beta), tuple(float(h[i]) for i in order), tuple(float(rate[i]) for i in order))

    def rate_h(self, h):
        """Rate as a function of the local energy ``h`` (scalar or array)."""
        h = np.asarray(h, dtype=float)
        b = self.beta
        if self.kind == METROPOLIS:
            out = np.exp(np.maximum(-b * h, 0.0))
        elif self.kind == HEAT_BATH:
            out = 0.5 * (1.0 - np.tanh(0.5 * b * h))
        else:
            out = np.interp(h, self.table_h, self.table_rate)
        return out if out.ndim else float(out)

    def bounds(self, d: int, j_max: float = 1.0) -> tuple[float, float]:
        """Uniform bounds ``(c_m, c_M)`` over all configurations with couplings <= j_max."""
        hmax = 2 * d * j_max
        if self.kind == METROPOLIS:
            return 1.0, math.exp(self.beta * hmax)
        if self.kind == HEAT_BATH:
            return float(self.rate_h(hmax)), float(self.rate_h(-hmax))
        hs = np.concatenate([[-hmax, hmax], [h for h in self.table_h if -hmax <= h <= hmax]])
        r = self.rate_h(hs)
        return float(np.min(r)), float(np.max(r))

    def is_attractive(self) -> bool:
        if self.kind in (METROPOLIS, HEAT_BATH):
            return True
        return bool(np.all(np.diff(self.table_rate) <= 0))

    def coupling_intensity(self, d: int, j_max: float = 1.0) -> float:
        """Clock intensity making the shared-uniform update rule monotone.

        Needs ``c(x, s) + c(x, s')`` at most the intensity whenever ``s <= s'``
        disagree at ``x``; with nonincreasing ``c(h)`` the worst pair is
        ``c(h) + c(-h)``.
        """
        if self.kind == HEAT_BATH:
            return 1.0
        hmax = 2 * d * j_max
        if self.kind == METROPOLIS:
            return 1.0 + math.exp(self.beta * hmax)
        hs = np.linspace(-hmax, hmax, 2001)
        return float(np.max(self.rate_h(hs) + self.rate_h(-hs)))


def rate(model: RateModel, J: CouplingField, sigma: SpinConfig, x: int) -> float:
    S = local_fields(sigma.box, J, sigma.spins, sigma.boundary)[x]
    return float(model.rate_h(sigma.spins[x] * S))


# ---------------------------------------------------------------------------
# axioms
# ---------------------------------------------------------------------------


@dataclass
class AxiomReport:
    model: RateModel
    c_m: float
    c_M: float
    passed: dict[str, bool] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.passed.values())

    def as_dict(self) -> dict:
        return {"model": self.model.kind, "beta": self.model.beta, "c_m": self.c_m, "c_M": self.c_M,
                "passed": dict(self.passed), "details": dict(self.details)}


def exhaustive_probes(box: LatticeBox, J: CouplingField, boundary="plus"):
    """Every (box, J, sigma, x) with sigma ranging over all configurations."""
    for row in enumerate_states(box.n_sites):
        sigma = SpinConfig(box, row, boundary)
        for x in range(box.n_sites):
            yield box, J, sigma, x


def _local_environment(box, J, sigma, x):
    ext = exterior_spins(box, sigma.boundary)
    env = [int(sigma.spins[x])]
    for k in range(box.nb_site.shape[1]):
        y, e = box.nb_site[x, k], box.nb_edge[x, k]
        env.append((round(float(J.values[e]), 15), int(sigma.spins[y]) if y >= 0 else int(ext[e])))
    return tuple(env)


def check_rate_axioms(model: RateModel, instances, tol: float = 1e-12,
                      attractivity_cap: int = 9) -> AxiomReport:
    """Check the standing assumptions on the rates over a finite set of probes.

    Failures are recorded in the report, never raised.
    """
    probes = list(instances)
    d = probes[0][0].d if probes else 2
    c_m, c_M = model.bounds(d, 1.0)
    rep = AxiomReport(model, c_m, c_M)

    range_ok, bounded_ok, db_ok, ti_ok = True, c_m > 0 and math.isfinite(c_M), True, True
    env_rates: dict = {}
    worst_db = 0.0
    for box, J, sigma, x in probes:
        c = rate(model, J, sigma, x)
        if not (c_m - tol <= c <= c_M * (1 + tol)) or c <= 0:
            bounded_ok = False
        S = local_fields(box, J, sigma.spins, sigma.boundary)[x]
        c_flip = float(model.rate_h(-sigma.spins[x] * S))
        lhs = c * math.exp(0.5 * model.beta * sigma.spins[x] * S)
        rhs = c_flip * math.exp(-0.5 * model.beta * sigma.spins[x] * S)
        err = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)
        worst_db = max(worst_db, err)
        if err > tol:
            db_ok = False
        # finite range: flipping a non-neighbour must not change the rate
        neigh = set(int(y) for y in box.nb_site[x] if y >= 0) | {x}
        for z in range(box.n_sites):
            if z not in neigh and abs(rate(model, J, sigma.flipped(z), x) - c) > tol * max(1.0, c):
                range_ok = False
                break
        env = _local_environment(box, J, sigma, x)
        if env in env_rates and abs(env_rates[env] - c) > tol * max(1.0, c):
            ti_ok = False
        env_rates.setdefault(env, c)

    rep.passed["finite_range"] = range_ok
    rep.passed["bounded"] = bounded_ok
    rep.details["bounded"] = f"c_m={c_m:.6g}, c_M={c_M:.6g}"
    rep.passed["detailed_balance"] = db_ok
    rep.details["detailed_balance"] = f"max relative defect {worst_db:.3g}"
    rep.passed["translation_invariance"] = ti_ok

    attractive_ok = True
    checked = 0
    seen = set()
    for box, J, sigma, _ in probes:
        key = (id(box), id(J), str(sigma.boundary))
        if key in seen or box.n_sites > attractivity_cap:
            continue
        seen.add(key)
        checked += 1
        attractive_ok &= _check_attractivity(model, box, J, sigma.boundary, tol)
    rep.passed["attractivity"] = attractive_ok
    rep.details["attractivity"] = f"exhaustive on {checked} enumerable (box, J) pairs"
    return rep


def _check_attractivity(model, box, J, boundary, tol) -> bool:
    states = enumerate_states(box.n_sites).astype(float)
    S = np.stack([local_fields(box, J, s, boundary) for s in states])
    H = states * S
    c = np.asarray(model.rate_h(H))
    n = box.n_sites
    idx = np.arange(1 << n)
    for a in idx:
        # supersets of a in bit order are exactly the configurations above it
        sup = idx[(idx & a) == a]
        same = states[sup] == states[a]
        lhs = states[sup] * c[sup]
        rhs = states[a] * c[a]
        if np.any(same & (lhs > rhs + tol * np.maximum(1.0, np.abs(rhs)))):
            return False
    return True


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    initial: SpinConfig
    times: np.ndarray
    sites: np.ndarray
    accepted: np.ndarray
    t_end: float
    clock_rate: float
    final: SpinConfig

    @property
    def n_attempts(self) -> int:
        return int(len(self.times))

    @property
    def n_flips(self) -> int:
        return int(np.sum(self.accepted))

    def replay(self) -> SpinConfig:
        s = self.initial.spins.astype(np.int8).copy()
        for x, a in zip(self.sites, self.accepted):
            if a:
                s[x] = -s[x]
        return SpinConfig(self.initial.box, s, self.initial.boundary)

    def spins_after(self) -> np.ndarray:
        s = self.initial.spins.astype(np.int8).copy()
        out = np.empty(len(self.sites), dtype=np.int8)
        for k, (x, a) in enumerate(zip(self.sites, self.accepted)):
            if a:
                s[x] = -s[x]
            out[k] = s[x]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "site_index", "accepted", "spin_after"])
            for t, x, a, s in zip(self.times, self.sites, self.accepted, self.spins_after()):
                w.writerow([repr(float(t)), int(x), int(bool(a)), int(s)])


def _neighbour_tables(box: LatticeBox, J: CouplingField, boundary):
    ext = exterior_spins(box, boundary)
    nb = [[int(y) for y in row if y >= 0] for row in box.nb_site]
    nbJ = [[float(J.values[e]) for y, e in zip(rs, re) if y >= 0] for rs, re in zip(box.nb_site, box.nb_edge)]
    return nb, nbJ


def _clock(g: np.random.Generator, n: int, intensity: float, t0: float, t1: float):
    k = int(g.poisson(intensity * n * (t1 - t0))) if t1 > t0 else 0
    times = np.sort(g.uniform(t0, t1, size=k))
    sites = g.integers(0, n, size=k)
    us = g.random(k)
    return times, sites, us


def _rate_fn(model: RateModel) -> Callable[[float], float]:
    b = model.beta
    if model.kind == METROPOLIS:
        return lambda h: math.exp(-b * h) if h < 0 else 1.0
    if model.kind == HEAT_BATH:
        def hb(h):
            z = b * h
            if z >= 0:
                e = math.exp(-z)
                return e / (1.0 + e)
            return 1.0 / (1.0 + math.exp(z))
        return hb
    return lambda h: float(np.interp(h, model.table_h, model.table_rate))


def _run_events(spins: list, S: list, nb, nbJ, sites, us, rate_fn, cM: float) -> np.ndarray:
    acc = np.zeros(len(sites), dtype=bool)
    for k in range(len(sites)):
        x = int(sites[k])
        sx = spins[x]
        if us[k] * cM < rate_fn(sx * S[x]):
            spins[x] = -sx
            acc[k] = True
            delta = -2 * sx
            for y, j in zip(nb[x], nbJ[x]):
                S[y] += j * delta
    return acc


class _Chain:
    """Mutable single-chain state used by the samplers."""

    def __init__(self, box: LatticeBox, J: CouplingField, model: RateModel, sigma: SpinConfig, clock_rate=None):
        self.box, self.J, self.model = box, J, model
        self.boundary = sigma.boundary
        self.nb, self.nbJ = _neighbour_tables(box, J, sigma.boundary)
        self.spins = [int(v) for v in sigma.spins]
        self.S = [float(v) for v in local_fields(box, J, sigma.spins, sigma.boundary)]
        self.rate_fn = _rate_fn(model)
        self.cM = clock_rate if clock_rate is not None else model.bounds(box.d, J.j_max)[1]
        if not math.isfinite(self.cM) or self.cM <= 0:
            raise ModelError("rate model has no finite positive upper bound c_M")

    def advance(self, g, t0, t1):
        times, sites, us = _clock(g, self.box.n_sites, self.cM, t0, t1)
        acc = _run_events(self.spins, self.S, self.nb, self.nbJ, sites, us, self.rate_fn, self.cM)
        return times, sites, acc

    def config(self) -> SpinConfig:
        return SpinConfig(self.box, np.array(self.spins, dtype=np.int8), self.boundary)


def simulate(box: LatticeBox, J: CouplingField, model: RateModel, sigma0: SpinConfig, t_end: float,
             seed: int, replica: int = 0) -> Trajectory:
    """Exact-in-law trajectory on ``[0, t_end]``; deterministic in ``(seed, replica)``."""
    if t_end < 0:
        raise DomainError("t_end must be >= 0")
    chain = _Chain(box, J, model, sigma0)
    g = stream(seed, "dynamics", replica)
    times, sites, acc = chain.advance(g, 0.0, float(t_end))
    return Trajectory(sigma0, times, sites, acc, float(t_end), chain.cM, chain.config())


def evolve_observable(box, J, model, sigma0: SpinConfig, times: Sequence[float], f, g) -> np.ndarray:
    """Values of ``f`` along one trajectory at the (sorted) requested times."""
    chain = _Chain(box, J, model, sigma0)
    out = np.empty(len(times))
    t_prev = 0.0
    for k, t in enumerate(times):
        chain.advance(g, t_prev, float(t))
        t_prev = float(t)
        out[k] = f(chain.spins)
    return out


@dataclass
class CoupledRun:
    low: Trajectory
    high: Trajectory
    order_violations: int
    coalescence_time: float | None


def simulate_coupled(box: LatticeBox, J: CouplingField, model: RateModel, low0: SpinConfig, high0: SpinConfig,
                     t_end: float, seed: int, replica: int = 0) -> CoupledRun:
    """Two chains sharing clocks and uniforms (monotone grand coupling).

    At a ring of site x with uniform U each chain sets its spin to +1 iff
    ``U < p_plus`` where ``p_plus = c/c`` for a minus spin and ``1 - c/c`` for
    a plus spin, ``c`` being the coupling intensity.
    """
    if not np.all(low0.spins <= high0.spins):
        raise DomainError("initial configurations must be ordered sitewise")
    if not model.is_attractive():
        raise ModelError("monotone coupling needs an attractive rate model")
    if t_end < 0:
        raise DomainError("t_end must be >= 0")
    cbar = model.coupling_intensity(box.d, J.j_max)
    chains = [_Chain(box, J, model, low0, cbar), _Chain(box, J, model, high0, cbar)]
    g = stream(seed, "coupled", replica)
    times, sites, us = _clock(g, box.n_sites, cbar, 0.0, float(t_end))
    accs = [np.zeros(len(sites), dtype=bool), np.zeros(len(sites), dtype=bool)]
    violations = 0
    coalesced = None if chains[0].spins != chains[1].spins else 0.0
    for k in range(len(sites)):
        x, u = int(sites[k]), us[k]
        for c_i, ch in enumerate(chains):
            sx = ch.spins[x]
            r = ch.rate_fn(sx * ch.S[x]) / cbar
            p_plus = 1.0 - r if sx > 0 else r
            new = 1 if u < p_plus else -1
            if new != sx:
                ch.spins[x] = new
                accs[c_i][k] = True
                delta = 2 * new
                for y, j in zip(ch.nb[x], ch.nbJ[x]):
                    ch.S[y] += j * delta
        if chains[0].spins[x] > chains[1].spins[x]:
            violations += 1
        if coalesced is None and accs[0][k] | accs[1][k] and chains[0].spins == chains[1].spins:
            coalesced = float(times[k])
    trajs = [Trajectory(s0, times, sites, a, float(t_end), cbar, ch.config())
             for s0, a, ch in zip((low0, high0), accs, chains)]
    return CoupledRun(trajs[0], trajs[1], violations, coalesced)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def _as_observable(f):
    if isinstance(f, (int, np.integer)):
        site = int(f)
        return lambda spins: float(spins[site])
    return lambda spins: float(f(np.asarray(spins)))


def estimate_semigroup(box, J, model, f, sigma0: SpinConfig, t: float, replicas: int, seed: int):
    """Monte Carlo ``E_sigma0 f(sigma(t))`` with its standard error.

    ``f`` is a site index (spin observable) or a callable on the spin vector.
    """
    if replicas < 2:
        raise StatisticalError("need at least two replicas")
    obs = _as_observable(f)
    vals = np.array([evolve_observable(box, J, model, sigma0, [t], obs, stream(seed, "semigroup", r))[0]
                     for r in range(replicas)])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(replicas))


@dataclass
class AutocorrelationCurve:
    times: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    replicas: int
    n_initial: int
    lam: float
    per_disorder: np.ndarray
    per_disorder_se: np.ndarray
    exact_equilibrium: bool
    burn_in: float | None = None
    label: str = "finite-volume proxy of the averaged autocorrelation"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "estimate", "stderr", "replicas"])
            for t, a, s in zip(self.times, self.estimate, self.stderr):
                w.writerow([repr(float(t)), repr(float(a)), repr(float(s)), self.replicas])


def _equilibrium_samples(box, J, model, n, seed, j_index, exact_cap, burn_in):
    """Initial configurations rho ~ mu^{J,+} and the reference value mu(sigma_0)."""
    o = box.origin_index()
    if box.n_sites <= exact_cap:
        table = gibbs_exact(box, J, model.beta, "plus")
        g = stream(seed, "equilibrium", j_index)
        picks = g.choice(len(table.probs), size=n, p=table.probs)
        return [SpinConfig(box, table.states[p], "plus") for p in picks], table.spin_mean(o), None
    if burn_in is None:
        burn_in = default_burn_in(box, J, model)
    plus = SpinConfig.uniform(box, 1, "plus")
    samples = []
    for i in range(n):
        g = stream(seed, "burn_in", j_index, i)
        chain = _Chain(box, J, RateModel.heat_bath(model.beta), plus)
        chain.advance(g, 0.0, burn_in)
        samples.append(chain.config())
    m = float(np.mean([s.spins[o] for s in samples]))
    return samples, m, burn_in


def default_burn_in(box: LatticeBox, J: CouplingField, model: RateModel, multiple: float = 10.0,
                    sub_cap: int = 9) -> float:
    """Burn-in time: ``multiple`` times a linear-in-side extrapolation of the
    exact heat-bath relaxation time of the largest centred sub-box with at most
    ``sub_cap`` sites (same couplings, plus boundary)."""
    from .model import build_box
    from .spectral import build_generator, relaxation_time

    if box.half_side is None:
        raise DomainError("automatic burn-in needs a symmetric box; pass burn_in explicitly")
    n_sub = 0
    while (2 * (n_sub + 1) + 1) ** box.d <= sub_cap and n_sub + 1 <= box.half_side:
        n_sub += 1
    sub = build_box(box.d, n_sub)
    Jsub = CouplingField(sub, np.array([J.get(e) for e in sub.closed_edges]))
    t_rel = relaxation_time(build_generator(sub, Jsub, model.beta, RateModel.heat_bath(model.beta)))
    return multiple * t_rel * (2 * box.half_side + 1) / (2 * n_sub + 1)


def combine_disorder(V: np.ndarray, Vse: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Average ``V_J ** lam`` over coupling fields (rows of ``V``).

    The error combines the within-field errors (delta method) with the
    spread across fields.
    """
    V, Vse = np.atleast_2d(V), np.atleast_2d(Vse)
    if lam == 1.0:
        powered, d_se = V, Vse
    else:
        Vc = np.maximum(V, 0.0)
        powered = Vc ** lam
        d_se = lam * np.where(Vc > 0, Vc ** (lam - 1), 0.0) * Vse
    nJ = V.shape[0]
    est = powered.mean(axis=0)
    inner = np.sqrt(np.sum(d_se ** 2, axis=0)) / nJ
    outer = powered.std(axis=0, ddof=1) / math.sqrt(nJ) if nJ > 1 else np.zeros(V.shape[1])
    return est, np.sqrt(inner ** 2 + outer ** 2)


def estimate_autocorrelation(box: LatticeBox, J_ensemble: Sequence[CouplingField], model: RateModel, lam: float,
                             times: Sequence[float], replicas: int = 16, n_initial: int = 64, seed: int = 0,
                             exact_cap: int = 12, burn_in: float | None = None,
                             first_index: int = 0) -> AutocorrelationCurve:
    """Disorder average of ``Var_mu(T(t) pi_0) ** lam`` on a finite box.

    For each coupling field, ``n_initial`` starting points are drawn from the
    plus-boundary Gibbs law; from each, ``replicas`` independent trajectories
    give the unbiased estimate ``(S^2 - R) / (R (R - 1))`` of
    ``(T(t) pi_0)(rho)^2``.  Subtracting ``mu(sigma_0)^2`` gives the variance.
    Field ``j`` of the ensemble draws from streams keyed by ``first_index + j``,
    so an ensemble can be split into chunks without changing any draw.
    """
    if replicas < 2 or n_initial < 2:
        raise StatisticalError("need replicas >= 2 and n_initial >= 2 for a variance estimate")
    times = np.asarray(times, dtype=float)
    order = np.argsort(times)
    o = box.origin_index()
    obs = lambda spins: float(spins[o])
    per_J, per_J_se = [], []
    exact = box.n_sites <= exact_cap
    used_burn = None
    for j, J in enumerate(J_ensemble, start=first_index):
        starts, m, used_burn = _equilibrium_samples(box, J, model, n_initial, seed, j, exact_cap, burn_in)
        U = np.empty((n_initial, len(times)))
        for i, rho in enumerate(starts):
            S = np.zeros(len(times))
            for r in range(replicas):
                g = stream(seed, "autocorr", j, i, r)
                S[order] += evolve_observable(box, J, model, rho, times[order], obs, g)
            U[i] = (S ** 2 - replicas) / (replicas * (replicas - 1))
        per_J.append(U.mean(axis=0) - m * m)
        per_J_se.append(U.std(axis=0, ddof=1) / math.sqrt(n_initial))
    V = np.array(per_J)
    Vse = np.array(per_J_se)
    est, se = combine_disorder(V, Vse, lam)
    return AutocorrelationCurve(times, est, se, replicas, n_initial, float(lam), V, Vse, exact, used_burn)


# ---------------------------------------------------------------------------
# jump counts
# ---------------------------------------------------------------------------


@dataclass
class FlipCountReport:
    attempts: int
    accepted: int
    poisson_mean: float
    accepted_le_attempts: bool
    l1_displacement: float
    l1_bound: float
    upper_tail_p: float

    @property
    def passed(self) -> bool:
        return self.accepted_le_attempts and self.l1_displacement <= self.l1_bound + 1e-12


def flip_count_bound_check(traj: Trajectory, c_M: float | None = None, K: int = 1) -> FlipCountReport:
    """Attempt count against Poisson(c_M t |box|) and the L1 profile displacement
    against its ``2/|box|``-per-jump bound."""
    from .model import profile_MK

    cM = traj.clock_rate if c_M is None else float(c_M)
    box = traj.initial.box
    mean = cM * traj.t_end * box.n_sites
    if box.shape is not None:
        side = box.shape[0]
        p0 = profile_MK(traj.initial, K)
        p1 = profile_MK(traj.final, K)
        # blocks of K^d sites: L1 norm of the block profile difference
        l1 = float(np.sum(np.abs(p1 - p0)) * (K / side) ** box.d)
    else:
        l1 = float(np.sum(np.abs(traj.final.spins - traj.initial.spins))) / box.n_sites
    bound = 2.0 * traj.n_flips / box.n_sites
    tail = float(stats.poisson.sf(traj.n_attempts - 1, mean)) if mean > 0 else float(traj.n_attempts == 0)
    return FlipCountReport(traj.n_attempts, traj.n_flips, mean, traj.n_flips <= traj.n_attempts, l1, bound, tail)


def poisson_tv(counts: Sequence[int], mean: float) -> float:
    """Total-variation distance between the empirical law of ``counts`` and Poisson(mean)."""
    counts = np.asarray(counts, dtype=np.int64)
    top = int(max(counts.max(initial=0), stats.poisson.ppf(1 - 1e-12, mean))) + 1
    emp = np.bincount(counts, minlength=top + 1)[: top + 1] / len(counts)
    pmf = stats.poisson.pmf(np.arange(top + 1), mean)
    tail = max(0.0, 1.0 - pmf.sum())
    return 0.5 * (float(np.abs(emp - pmf).sum()) + tail)
