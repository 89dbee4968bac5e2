"""Surface tension functions ``tau^q(n)`` on unit normals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, UnsupportedError


@dataclass(frozen=True)
class SurfaceTensionFn:
    """``isotropic`` (constant), ``l1`` (``||n||_1``) or ``table``.

    A table gives values at angles in ``[0, pi/4]``; it is completed to the
    whole circle by the symmetries of the square lattice and interpolated
    linearly in the angle.  Evaluation at a non-unit vector uses the
    1-homogeneous extension ``tau(v) = |v| tau(v/|v|)``.
    """

    kind: str = "isotropic"
    value: float = 1.0
    angles: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "isotropic":
            if not self.value > 0:
                raise DomainError("tension must be positive")
        elif self.kind == "l1":
            pass
        elif self.kind == "table":
            a = np.asarray(self.angles, dtype=float)
            if len(a) == 0 or len(a) != len(self.values):
                raise DomainError("table needs matching angles and values")
            if np.any(a < -1e-15) or np.any(a > math.pi / 4 + 1e-15) or np.any(np.diff(a) <= 0):
                raise DomainError("table angles must increase within [0, pi/4]")
            if any(v <= 0 for v in self.values):
                raise DomainError("tension must be positive")
        else:
            raise DomainError(f"unknown tension kind {self.kind!r}")

    @classmethod
    def isotropic(cls, value: float = 1.0) -> "SurfaceTensionFn":
        return cls("isotropic", float(value))

    @classmethod
    def l1(cls) -> "SurfaceTensionFn":
        return cls("l1")

    @classmethod
    def table(cls, angles, values) -> "SurfaceTensionFn":
        return cls("table", 1.0, tuple(float(a) for a in angles), tuple(float(v) for v in values))

    def __call__(self, n) -> float | np.ndarray:
        v = np.asarray(n, dtype=float)
        norm = np.linalg.norm(v, axis=-1)
        if self.kind == "isotropic":
            out = self.value * norm
        elif self.kind == "l1":
            out = np.abs(v).sum(axis=-1)
        else:
            if v.shape[-1] != 2:
                raise UnsupportedError("tabulated tensions are two-dimensional")
            out = norm * self.of_angle(np.arctan2(v[..., 1], v[..., 0]))
        return float(out) if np.ndim(out) == 0 else out

    def of_angle(self, theta):
        """Value at the unit normal ``(cos theta, sin theta)``."""
        th = np.asarray(theta, dtype=float)
        if self.kind == "isotropic":
            out = np.full(th.shape, self.value)
        elif self.kind == "l1":
            out = np.abs(np.cos(th)) + np.abs(np.sin(th))
        else:
            a = np.mod(th, math.pi / 2)
            a = np.where(a > math.pi / 4, math.pi / 2 - a, a)
            out = np.interp(a, self.angles, self.values)
        return float(out) if out.ndim == 0 else out

    def kinks(self) -> list[float]:
        """Angles in ``[0, 2 pi)`` where the angular profile may fail to be smooth."""
        if self.kind == "isotropic":
            return []
        base = [0.0, math.pi / 4] if self.kind == "l1" else list(self.angles) + [0.0, math.pi / 4]
        out = set()
        for q in range(4):
            for a in base:
                out.add(round((q * math.pi / 2 + a) % (2 * math.pi), 15))
                out.add(round((q * math.pi / 2 - a) % (2 * math.pi), 15))
        return sorted(out)

    def sup(self) -> float:
        if self.kind == "isotropic":
            return self.value
        if self.kind == "l1":
            return math.sqrt(2.0)
        return max(self.values)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "isotropic":
            d["value"] = self.value
        if self.kind == "table":
            d["angles"], d["values"] = list(self.angles), list(self.values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SurfaceTensionFn":
        if d["kind"] == "table":
            return cls.table(d["angles"], d["values"])
        if d["kind"] == "l1":
            return cls.l1()
        return cls.isotropic(d.get("value", 1.0))
