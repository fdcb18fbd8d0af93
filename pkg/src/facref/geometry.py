"""Basic 3D/2D geometry: rays, planar polygons with holes, plane frames, projections.

Points are numpy arrays of shape (3,) in a metric world CRS; point sets are
(N, 3) arrays.  All values are immutable by convention; operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .exceptions import DegenerateGeometry, NotAFacade

EPS_PLANE = 1e-3  # coplanarity tolerance for survey-grade input, meters
_EPS_UNIT = 1e-9

Vec3 = NDArray[np.float64]


def as_point(p) -> Vec3:
    a = np.asarray(p, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite coordinates")
    return a


@dataclass(frozen=True)
class Ray:
    """Laser observation: sensor origin, unit direction, range to the hit point."""

    origin: Vec3
    direction: Vec3
    length: float

    def __post_init__(self):
        object.__setattr__(self, "origin", as_point(self.origin))
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > _EPS_UNIT:
            raise ValueError("ray direction must be a unit vector")
        object.__setattr__(self, "direction", d)
        if not self.length > 0:
            raise ValueError("ray length must be positive")

    @classmethod
    def between(cls, origin, hit) -> "Ray":
        """Ray from a sensor position to a hit point."""
        origin = as_point(origin)
        hit = as_point(hit)
        v = hit - origin
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValueError("sensor position coincides with hit point")
        return cls(origin, v / n, n)

    @property
    def hit(self) -> Vec3:
        return self.origin + self.length * self.direction


@dataclass(frozen=True)
class PlanarPolygon:
    """Planar polygon with optional holes, all rings coplanar within EPS_PLANE."""

    exterior: NDArray[np.float64]
    holes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ext = np.asarray(self.exterior, dtype=np.float64)
        if ext.ndim != 2 or ext.shape[1] != 3 or len(np.unique(ext, axis=0)) < 3:
            raise DegenerateGeometry("exterior ring needs >=3 distinct 3D vertices")
        object.__setattr__(self, "exterior", ext)
        hs = tuple(np.asarray(h, dtype=np.float64) for h in self.holes)
        for h in hs:
            if h.ndim != 2 or h.shape[1] != 3 or len(np.unique(h, axis=0)) < 3:
                raise DegenerateGeometry("hole ring needs >=3 distinct 3D vertices")
        object.__setattr__(self, "holes", hs)
        n = _newell_normal(ext)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise DegenerateGeometry("zero-area exterior ring")
        n = n / norm
        c = ext.mean(axis=0)
        for ring in (ext, *hs):
            d = np.abs((ring - c) @ n)
            if d.max() > EPS_PLANE:
                raise DegenerateGeometry(
                    f"ring deviates {d.max():.2e} m from plane (> {EPS_PLANE} m)"
                )

    @property
    def rings(self):
        return (self.exterior, *self.holes)


@dataclass(frozen=True)
class PlaneFrame:
    """Orthonormal, right-handed frame on a plane: in-plane axes u, v and normal n."""

    origin: Vec3
    u: Vec3
    v: Vec3
    n: Vec3

    def __post_init__(self):
        for name in ("origin", "u", "v", "n"):
            object.__setattr__(self, name, as_point(getattr(self, name)))
        for a, b in ((self.u, self.v), (self.u, self.n), (self.v, self.n)):
            if abs(float(a @ b)) > 1e-9:
                raise ValueError("frame axes must be orthogonal")
        if np.linalg.norm(np.cross(self.u, self.v) - self.n) > 1e-9:
            raise ValueError("frame must be right-handed (u x v = n)")


def _newell_normal(ring: np.ndarray) -> np.ndarray:
    """Area-weighted normal of a closed ring (Newell's method), not normalized."""
    nxt = np.roll(ring, -1, axis=0)
    n = np.zeros(3)
    n[0] = np.sum((ring[:, 1] - nxt[:, 1]) * (ring[:, 2] + nxt[:, 2]))
    n[1] = np.sum((ring[:, 2] - nxt[:, 2]) * (ring[:, 0] + nxt[:, 0]))
    n[2] = np.sum((ring[:, 0] - nxt[:, 0]) * (ring[:, 1] + nxt[:, 1]))
    return n


def fit_plane_frame(poly: PlanarPolygon) -> PlaneFrame:
    """Frame of a polygon: n from Newell's method, u horizontal where possible.

    The horizontal-u convention keeps texture rows aligned with building
    floors; for horizontal polygons (roof/ground) u falls back to e_x.
    """
    n = _newell_normal(poly.exterior)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        raise DegenerateGeometry("zero-area polygon")
    n = n / norm
    horiz = np.array([-n[1], n[0], 0.0])
    h = np.linalg.norm(horiz)
    if h > _EPS_UNIT:
        u = horiz / h
    else:
        u = np.array([1.0, 0.0, 0.0])
    v = np.cross(n, u)
    # pick the u sign that makes v point upward on facades (v_z >= 0)
    if v[2] < 0:
        u = -u
        v = -v
    return PlaneFrame(origin=poly.exterior[0].copy(), u=u, v=v, n=n)


def project_to_plane(p, frame: PlaneFrame):
    """World point -> (u, v, d): in-plane coordinates plus signed normal offset."""
    rel = as_point(p) - frame.origin
    return float(rel @ frame.u), float(rel @ frame.v), float(rel @ frame.n)


def project_points(points: np.ndarray, frame: PlaneFrame) -> np.ndarray:
    """Vectorized projection of an (N, 3) array; returns (N, 3) of (u, v, d)."""
    rel = np.asarray(points, dtype=np.float64) - frame.origin
    basis = np.stack([frame.u, frame.v, frame.n], axis=1)
    return rel @ basis


def unproject_from_plane(u: float, v: float, d: float, frame: PlaneFrame) -> Vec3:
    return frame.origin + u * frame.u + v * frame.v + d * frame.n


def polygon_rings_2d(poly: PlanarPolygon, frame: PlaneFrame):
    """Rings of ``poly`` as (u, v) coordinate arrays in ``frame``."""
    return [project_points(ring, frame)[:, :2] for ring in poly.rings]


def _ring_area_2d(ring2d: np.ndarray) -> float:
    x, y = ring2d[:, 0], ring2d[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def polygon_area(poly: PlanarPolygon) -> float:
    """Area of exterior minus holes, in m^2."""
    frame = fit_plane_frame(poly)
    rings = polygon_rings_2d(poly, frame)
    area = _ring_area_2d(rings[0]) - sum(_ring_area_2d(r) for r in rings[1:])
    if _ring_area_2d(rings[0]) <= 0.0:
        raise DegenerateGeometry("zero-area exterior ring")
    return max(area, 0.0)


def points_in_ring_2d(pts: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Even-odd (crossing number) containment test, vectorized over (N, 2) pts."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    x1, y1 = ring[:, 0], ring[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for ax, ay, bx, by in zip(x1, y1, x2, y2):
        crosses = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = ax + (y - ay) * (bx - ax) / (by - ay)
        inside ^= crosses & (x < xi)
    return inside


def points_in_polygon_2d(pts: np.ndarray, rings2d) -> np.ndarray:
    """Even-odd test over exterior + holes: odd total crossing count = inside."""
    inside = np.zeros(len(pts), dtype=bool)
    for ring in rings2d:
        inside ^= points_in_ring_2d(pts, ring)
    return inside


def ray_polygon_intersect(r: Ray, poly: PlanarPolygon):
    """Intersection of the ray segment with the polygon interior, or None."""
    frame = fit_plane_frame(poly)
    denom = float(r.direction @ frame.n)
    if abs(denom) < 1e-12:
        return None
    t = float((frame.origin - r.origin) @ frame.n) / denom
    if t < 0.0 or t > r.length:
        return None
    p = r.origin + t * r.direction
    uv = project_points(p[None, :], frame)[:, :2]
    if points_in_polygon_2d(uv, polygon_rings_2d(poly, frame))[0]:
        return p
    return None


def yaw_of_normal(n) -> float:
    """Horizontal orientation of a facade normal, atan2(n_y, n_x) in (-pi, pi]."""
    n = as_point(n)
    if math.hypot(n[0], n[1]) < _EPS_UNIT:
        raise NotAFacade("normal is vertical; surface is not a facade")
    yaw = math.atan2(n[1], n[0])
    return math.pi if yaw == -math.pi else yaw
