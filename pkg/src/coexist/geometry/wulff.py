"""Wulff shapes as half-plane intersections, and the isoperimetric bound they give."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection

from ..errors import DomainError
from .energy import surface_energy_quenched
from .profiles import Polygon
from .tension_fn import SurfaceTensionFn


@dataclass
class WulffShape:
    """Convex polygon ``{z : z.n <= tau(n)}`` over ``resolution`` equally spaced normals."""

    vertices: np.ndarray
    area: float
    resolution: int
    halfspaces: np.ndarray

    def contains(self, z, tol: float = 1e-12) -> bool:
        return bool(np.all(self.halfspaces @ np.append(np.asarray(z, float), 1.0) <= tol))

    def max_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def min_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).min())

    def is_lattice_symmetric(self, tol: float = 1e-9) -> bool:
        """Invariant under the quarter turn and the reflection in the x-axis."""
        v = self.vertices
        for image in (np.column_stack([-v[:, 1], v[:, 0]]), np.column_stack([v[:, 0], -v[:, 1]])):
            d = np.linalg.norm(image[:, None, :] - v[None, :, :], axis=2)
            if d.min(axis=1).max() > tol:
                return False
        return True


def wulff_shape(tau_q: SurfaceTensionFn, resolution: int = 256) -> WulffShape:
    if resolution < 3:
        raise DomainError("need at least three normals")
    ang = _angles(resolution)
    normals = np.column_stack([np.cos(ang), np.sin(ang)])
    offsets = np.array([tau_q(nv) for nv in normals])
    if np.any(offsets <= 0):
        raise DomainError("tension must be positive")
    hs = np.column_stack([normals, -offsets])
    hsi = HalfspaceIntersection(hs, np.zeros(2))
    pts = hsi.intersections
    hull = ConvexHull(pts)
    verts = pts[hull.vertices]
    # merge duplicates produced by redundant half-planes
    keep = [0]
    for i in range(1, len(verts)):
        if np.linalg.norm(verts[i] - verts[keep[-1]]) > 1e-12:
            keep.append(i)
    if len(keep) > 1 and np.linalg.norm(verts[keep[-1]] - verts[keep[0]]) <= 1e-12:
        keep.pop()
    verts = verts[keep]
    return WulffShape(verts, float(hull.volume), resolution, hs)


def _angles(k: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(k) / k


def wulff_area(tau_q: SurfaceTensionFn, resolution: int = 1024) -> float:
    """Exact area for the isotropic and l1 tensions, polygonal otherwise."""
    if tau_q.kind == "isotropic":
        return math.pi * tau_q.value ** 2
    if tau_q.kind == "l1":
        return 4.0
    return wulff_shape(tau_q, resolution).area


@dataclass
class IsoperimetricCheck:
    energy: float
    bound: float

    @property
    def slack(self) -> float:
        return self.energy - self.bound

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-12 * max(1.0, self.bound)


def isoperimetric_check(polygon: Polygon, tau_q: SurfaceTensionFn, w_area: float | None = None) -> IsoperimetricCheck:
    """``F^q(P) >= 2 sqrt(|W| |P|)`` in two dimensions."""
    w = wulff_area(tau_q) if w_area is None else w_area
    return IsoperimetricCheck(surface_energy_quenched(polygon, tau_q), 2.0 * math.sqrt(w * polygon.area()))
