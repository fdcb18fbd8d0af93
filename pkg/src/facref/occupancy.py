"""Probabilistic voxel occupancy grid with ray insertion and model population.

The grid covers an axis-aligned bounding box whose per-axis cell counts are
padded to powers of two, so the leaves coincide with an octree subdivision of
leaf size ``voxel_size``.  Leaves are stored densely (desk-scale extents), keyed
by integer (ix, iy, iz) triples.

Occupancy updates follow the clamped additive log-odds rule: the voxel
containing a ray's hit point gains ``l_occ``, every voxel the ray traverses
gains ``l_emp``, and the result is clamped to [l_min, l_max] after each update.
An optional fast path skips log-odds accumulation for traversed-only voxels and
pins them at ``l_emp`` (occupancy 0.4) instead; voxels with hits then
accumulate positive evidence only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, EmptyTraversal
from .geometry import (PlanarPolygon, Ray, fit_plane_frame, points_in_polygon_2d,
                       polygon_rings_2d, project_points)

_EPS_STATE = 1e-6


@dataclass(frozen=True)
class GridParams:
    voxel_size: float = 0.1
    prior: float = 0.5
    l_occ: float = 0.85
    l_emp: float = -0.4
    l_min: float = -2.0
    l_max: float = 3.5
    fast_empty: bool = False

    def __post_init__(self):
        if not self.voxel_size > 0:
            raise ConfigError("grid.voxel_size must be positive")
        if not 0.0 < self.prior < 1.0:
            raise ConfigError("grid.prior must be in (0, 1)")
        if not self.l_min < 0.0 < self.l_max:
            raise ConfigError("grid clamping requires l_min < 0 < l_max")
        if not self.l_emp < 0.0 < self.l_occ:
            raise ConfigError("grid requires l_emp < 0 < l_occ")


class VoxelState(enum.IntEnum):
    UNKNOWN = 0
    OCCUPIED = 1
    EMPTY = 2


def logodds(p: float) -> float:
    """Natural-log odds of a probability."""
    return math.log(p / (1.0 - p))


def prob(l) -> float:
    """Inverse of :func:`logodds`."""
    return 1.0 / (1.0 + np.exp(-np.asarray(l, dtype=np.float64))) if np.ndim(l) \
        else 1.0 / (1.0 + math.exp(-l))


class OccupancyGrid:
    def __init__(self, lower, upper, params: GridParams | None = None):
        self.params = params or GridParams()
        vs = self.params.voxel_size
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        if np.any(upper <= lower):
            raise ValueError("grid upper bound must exceed lower bound")
        needed = np.ceil((upper - lower) / vs - 1e-9).astype(int)
        needed = np.maximum(needed, 1)
        self.dims = np.array([1 << int(n - 1).bit_length() for n in needed])
        self.origin = lower.copy()
        self.upper = lower + self.dims * vs
        self.depth = int(self.dims.max() - 1).bit_length()
        n = tuple(int(d) for d in self.dims)
        self.log_odds = np.zeros(n, dtype=np.float64)
        self.hits = np.zeros(n, dtype=np.uint32)
        self.traversals = np.zeros(n, dtype=np.uint32)
        # filled by populate_model / fuse_points
        self.model_faces: dict[str, np.ndarray] = {}
        self.semantic_faces: dict[str, np.ndarray] = {}
        self.facade_frames: dict[str, object] = {}
        self.fused_label = np.full(n, -1, dtype=np.int8)
        self.p_ex = np.zeros(n, dtype=np.float64)
        self.static_mask = np.zeros(n, dtype=bool)

    # -- addressing ---------------------------------------------------------

    def voxel_of(self, points: np.ndarray) -> np.ndarray:
        """Integer voxel keys of world points ((3,) or (N, 3))."""
        pts = np.asarray(points, dtype=np.float64)
        return np.floor((pts - self.origin) / self.params.voxel_size).astype(np.int64)

    def centers(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.float64)
        return self.origin + (keys + 0.5) * self.params.voxel_size

    def in_bounds(self, keys: np.ndarray) -> np.ndarray:
        keys = np.atleast_2d(keys)
        return np.all((keys >= 0) & (keys < self.dims), axis=1)

    # -- traversal ----------------------------------------------------------

    def _segment_params(self, o, d, length):
        """Clip segment [0, length] to the grid box; None when no overlap."""
        t0, t1 = 0.0, float(length)
        for a in range(3):
            if d[a] == 0.0:
                if not (self.origin[a] <= o[a] < self.upper[a]):
                    return None
                continue
            ta = (self.origin[a] - o[a]) / d[a]
            tb = (self.upper[a] - o[a]) / d[a]
            lo, hi = (ta, tb) if ta < tb else (tb, ta)
            t0, t1 = max(t0, lo), min(t1, hi)
        if t0 >= t1:
            return None
        return t0, t1

    def _traverse_segment(self, o, d, length) -> np.ndarray:
        """Ordered voxel keys the segment visits inside the grid, start included."""
        if length <= 0.0:
            raise EmptyTraversal("zero-length ray")
        span = self._segment_params(o, d, length)
        if span is None:
            return np.empty((0, 3), dtype=np.int64)
        t0, t1 = span
        vs = self.params.voxel_size
        p0 = o + t0 * d
        start = np.floor((p0 - self.origin) / vs).astype(np.int64)
        start = np.clip(start, 0, self.dims - 1)

        ts, axes = [], []
        tiny = 1e-12
        for a in range(3):
            if d[a] == 0.0:
                continue
            if d[a] > 0:
                first_plane = self.origin[a] + (start[a] + 1) * vs
            else:
                first_plane = self.origin[a] + start[a] * vs
            t_first = (first_plane - o[a]) / d[a]
            dt = vs / abs(d[a])
            if t_first <= t0:  # start exactly on a boundary
                t_first += dt
            if t_first >= t1 - tiny:
                continue
            count = int(math.floor((t1 - tiny - t_first) / dt)) + 1
            ts.append(t_first + dt * np.arange(count))
            axes.append(np.full(count, a, dtype=np.int64))
        if not ts:
            return start[None, :]
        ts = np.concatenate(ts)
        axes = np.concatenate(axes)
        order = np.argsort(ts, kind="stable")
        steps = np.zeros((len(order), 3), dtype=np.int64)
        step_sign = np.sign(d).astype(np.int64)
        ax_sorted = axes[order]
        steps[np.arange(len(order)), ax_sorted] = step_sign[ax_sorted]
        keys = np.vstack([start, start + np.cumsum(steps, axis=0)])
        keys = keys[self.in_bounds(keys)]
        return keys

    def traverse(self, ray: Ray) -> np.ndarray:
        """Ordered voxel keys traversed by the ray, excluding the hit voxel.

        A ray that starts and ends inside one voxel reports that single voxel.
        Rays are clipped to the grid bounding box.
        """
        keys = self._traverse_segment(ray.origin, ray.direction, ray.length)
        if len(keys) == 0:
            return keys
        hit_key = self.voxel_of(ray.hit)
        if self.in_bounds(hit_key)[0] and len(keys) > 1:
            keys = keys[~np.all(keys == hit_key, axis=1)]
        return keys

    # -- insertion ----------------------------------------------------------

    def _apply_updates(self, traversed: np.ndarray, hit_key):
        p = self.params
        if len(traversed):
            idx = tuple(traversed.T)
            self.traversals[idx] += 1
            if p.fast_empty:
                no_hit = self.hits[idx] == 0
                sub = tuple(traversed[no_hit].T)
                self.log_odds[sub] = p.l_emp
            else:
                self.log_odds[idx] = np.clip(
                    self.log_odds[idx] + p.l_emp, p.l_min, p.l_max)
        if hit_key is not None:
            k = tuple(int(c) for c in hit_key)
            self.hits[k] += 1
            if p.fast_empty:
                self.log_odds[k] = min(self.hits[k] * p.l_occ, p.l_max)
            else:
                self.log_odds[k] = np.clip(
                    self.log_odds[k] + p.l_occ, p.l_min, p.l_max)

    def _insert_segment(self, origin, hit):
        d = hit - origin
        length = float(np.linalg.norm(d))
        if length == 0.0:
            raise EmptyTraversal("sensor position coincides with hit point")
        d = d / length
        keys = self._traverse_segment(origin, d, length)
        hit_key = self.voxel_of(hit)
        if not self.in_bounds(hit_key)[0]:
            hit_key = None
        elif len(keys):
            keys = keys[~np.all(keys == hit_key, axis=1)]
        self._apply_updates(keys, hit_key)

    def insert_ray(self, ray: Ray):
        """Update occupancy along one laser observation."""
        self._insert_segment(ray.origin, ray.hit)

    def insert_cloud(self, cloud):
        """Insert every point record in file order."""
        for origin, hit in zip(cloud.sensor, cloud.xyz):
            self._insert_segment(origin, hit)

    # -- queries ------------------------------------------------------------

    def occupancy(self, keys: np.ndarray) -> np.ndarray:
        idx = tuple(np.atleast_2d(keys).T)
        return 1.0 / (1.0 + np.exp(-self.log_odds[idx]))

    def state(self, key) -> VoxelState:
        k = tuple(int(c) for c in np.asarray(key).ravel())
        return VoxelState(int(self.state_codes(np.asarray(k)[None, :])[0]))

    def state_codes(self, keys: np.ndarray) -> np.ndarray:
        """Vectorized state of voxel keys (values of :class:`VoxelState`)."""
        idx = tuple(np.atleast_2d(keys).T)
        touched = (self.hits[idx] + self.traversals[idx]) > 0
        thresh = logodds(0.5 + _EPS_STATE)
        l = self.log_odds[idx]
        out = np.zeros(len(l), dtype=np.int8)
        out[touched & (l > thresh)] = VoxelState.OCCUPIED
        out[touched & (l < -thresh)] = VoxelState.EMPTY
        return out

    # -- model population ---------------------------------------------------

    def populate_model(self, model, conf, semantic_band: float | None = None):
        """Mark voxels intersecting each wall facade within its upper CI.

        ``semantic_band``, when given, additionally records a wider slab per
        facade used for projecting point semantics of recessed openings.
        """
        vs = self.params.voxel_size
        for surf in model.walls():
            frame = fit_plane_frame(surf.polygon)
            rings = polygon_rings_2d(surf.polygon, frame)
            band = conf.upper_ci
            wide = semantic_band if semantic_band is not None else band
            reach = max(band, wide)
            ring = surf.polygon.exterior
            lo = ring.min(axis=0) - reach
            hi = ring.max(axis=0) + reach
            k_lo = np.maximum(self.voxel_of(lo), 0)
            k_hi = np.minimum(self.voxel_of(hi) + 1, self.dims)
            if np.any(k_hi <= k_lo):
                continue
            axes = [np.arange(k_lo[a], k_hi[a]) for a in range(3)]
            keys = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
            centers = self.centers(keys)
            uvd = project_points(centers, frame)
            inside = points_in_polygon_2d(uvd[:, :2], rings)
            dist = np.abs(uvd[:, 2])
            self.model_faces[surf.id] = keys[inside & (dist <= band)]
            self.semantic_faces[surf.id] = keys[inside & (dist <= wide)]
            self.facade_frames[surf.id] = frame

    # -- serialization ------------------------------------------------------

    def dump_voxels(self, path):
        """CSV dump of every touched voxel: key, log-odds, counters."""
        touched = np.argwhere((self.hits + self.traversals) > 0)
        idx = tuple(touched.T)
        with open(path, "w", encoding="utf-8") as f:
            f.write("ix,iy,iz,log_odds,hits,traversals\n")
            for (ix, iy, iz), l, h, t in zip(
                    touched, self.log_odds[idx], self.hits[idx], self.traversals[idx]):
                f.write(f"{ix},{iy},{iz},{l:.6f},{h},{t}\n")
