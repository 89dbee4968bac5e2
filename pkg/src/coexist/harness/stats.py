"""Least-squares power-law fits with bootstrap intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from ..errors import WindowError
from ..rng import stream

R2_THRESHOLD = 0.98
MIN_POINTS = 5


@dataclass
class PowerLawFit:
    """``log A = intercept + exponent log t`` on ``window``."""

    exponent: float
    intercept: float
    window: tuple[float, float]
    r2: float
    ci: tuple[float, float]
    n_points: int
    bootstrap: str

    @property
    def poor_fit(self) -> bool:
        return self.r2 < R2_THRESHOLD

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept, "window": list(self.window),
                "r2": self.r2, "ci": list(self.ci), "n_points": self.n_points, "poor_fit": self.poor_fit,
                "bootstrap": self.bootstrap}


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    res = sps.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-300 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(res.slope), float(res.intercept), r2


def fit_power_law(times, values, window=None, replica_curves=None, n_boot: int = 1000, seed: int = 0,
                  level: float = 0.95) -> PowerLawFit:
    """Fit ``values ~ C t^a`` on the points with ``t`` inside ``window``.

    ``replica_curves`` (replicas x times) switches the bootstrap to resampling
    replicas and refitting their mean; otherwise fit residuals are resampled.
    """
    t = np.asarray(times, dtype=float)
    a = np.asarray(values, dtype=float)
    lo, hi = (float(t.min()), float(t.max())) if window is None else (float(window[0]), float(window[1]))
    if lo < t.min() or hi > t.max() or lo >= hi:
        raise WindowError(f"window [{lo}, {hi}] is not inside the data range")
    sel = (t >= lo) & (t <= hi) & (t > 0)
    if sel.sum() < MIN_POINTS:
        raise WindowError(f"need at least {MIN_POINTS} points with t > 0 in the window")
    if np.any(a[sel] <= 0):
        raise WindowError("nonpositive values in the fit window")
    x, y = np.log(t[sel]), np.log(a[sel])
    slope, intercept, r2 = _ols(x, y)

    g = stream(seed, "bootstrap")
    boots = []
    if replica_curves is not None:
        R = np.asarray(replica_curves, dtype=float)[:, sel]
        kind = "replicas"
        for _ in range(n_boot):
            m = R[g.integers(0, R.shape[0], size=R.shape[0])].mean(axis=0)
            if np.all(m > 0):
                boots.append(_ols(x, np.log(m))[0])
    else:
        kind = "residuals"
        fitted = intercept + slope * x
        resid = y - fitted
        for _ in range(n_boot):
            boots.append(_ols(x, fitted + resid[g.integers(0, len(x), size=len(x))])[0])
    if boots:
        q = np.quantile(boots, [(1 - level) / 2, (1 + level) / 2])
        ci = (min(float(q[0]), slope), max(float(q[1]), slope))
    else:
        ci = (slope, slope)
    return PowerLawFit(slope, intercept, (lo, hi), r2, ci, int(sel.sum()), kind)
