"""Synthetic terrestrial laser scans of a ground-truth building model.

The simulator fires a regular angular fan of rays from each trajectory pose,
intersects them with the model (wall/roof/ground polygons, opening solids,
interior back-planes, transient clutter boxes), and applies glass transmission
and Gaussian range noise.  Output points carry the sensor position, the true
semantic label, and a softened class probability vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import labels as L
from .building import BuildingModel, OpeningLibraryEntry
from .exceptions import SpecError
from .geometry import (PlanarPolygon, fit_plane_frame, points_in_polygon_2d,
                       polygon_rings_2d, project_points)
from .io_formats import PointCloud
from .library import default_library

_SURFACE_LABEL = {"WallSurface": L.WALL, "RoofSurface": L.OTHER,
                  "GroundSurface": L.FLOOR}
_T_MIN = 1e-6


@dataclass(frozen=True)
class TransientBox:
    """Axis-aligned clutter box present during a fraction of the scan passes."""

    lower: np.ndarray
    upper: np.ndarray
    fraction: float
    label: int = L.OTHER

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=np.float64))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=np.float64))
        if np.any(self.upper <= self.lower):
            raise SpecError("transient box upper bound must exceed lower bound")
        if not 0.0 <= self.fraction <= 1.0:
            raise SpecError("transient fraction must be in [0, 1]")
        if not 0 <= self.label < len(L.LABELS):
            raise SpecError(f"transient label {self.label} out of range")


@dataclass(frozen=True)
class ScanSpec:
    """Scanner trajectory and physical parameters of the simulated survey."""

    trajectory: np.ndarray            # (P, 3) scanner positions, scanned in order
    angular_resolution: float = 0.015  # rad between neighboring rays
    max_range: float = 50.0
    sigma_noise: float = 0.005         # ranging noise std dev, m
    tau: float = 0.85                  # glass transmission probability
    epsilon: float = 0.05              # probability mass off the true class
    interior_offset: float = 4.0       # back-plane distance behind facades, m
    transients: tuple = field(default_factory=tuple)
    fov_surfaces: tuple = ()           # limit the ray fan to these surface ids

    def __post_init__(self):
        traj = np.asarray(self.trajectory, dtype=np.float64).reshape(-1, 3)
        if len(traj) == 0:
            raise SpecError("trajectory must contain at least one pose")
        object.__setattr__(self, "trajectory", traj)
        object.__setattr__(self, "transients", tuple(self.transients))
        object.__setattr__(self, "fov_surfaces", tuple(self.fov_surfaces))
        if not self.angular_resolution > 0:
            raise SpecError("angular_resolution must be positive")
        if not self.max_range > 0:
            raise SpecError("max_range must be positive")
        if self.sigma_noise < 0:
            raise SpecError("sigma_noise must be non-negative")
        if not 0.0 <= self.tau <= 1.0:
            raise SpecError("tau must be a probability")
        if not 0.0 <= self.epsilon < 1.0:
            raise SpecError("epsilon must be in [0, 1)")
        if not self.interior_offset > 0:
            raise SpecError("interior_offset must be positive")


class _PolygonTarget:
    """Opaque planar polygon prepared for vectorized ray intersection."""

    def __init__(self, polygon, label: int):
        self.frame = fit_plane_frame(polygon)
        self.rings = polygon_rings_2d(polygon, self.frame)
        self.label = label

    def hit_t(self, o: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        denom = dirs @ self.frame.n
        num = float((self.frame.origin - o) @ self.frame.n)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / denom
        valid = (np.abs(denom) > 1e-12) & (t > _T_MIN)
        t = np.where(valid, t, np.inf)
        if np.any(valid):
            pts = o + t[valid, None] * dirs[valid]
            uv = project_points(pts, self.frame)[:, :2]
            inside = points_in_polygon_2d(uv, self.rings)
            tv = t[valid]
            tv[~inside] = np.inf
            t[valid] = tv
        return t


def _triangles_hit_t(o: np.ndarray, dirs: np.ndarray,
                     triangles: np.ndarray) -> np.ndarray:
    """Nearest hit parameter per ray over a triangle soup (inf on miss)."""
    best = np.full(len(dirs), np.inf)
    for a, b, c in triangles:
        e1, e2 = b - a, c - a
        pvec = np.cross(dirs, e2)
        det = pvec @ e1
        tvec = o - a
        qvec = np.cross(tvec, e1)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            u = (pvec @ tvec) * inv
            v = (dirs @ qvec) * inv
            t = (e2 @ qvec) * inv
        ok = (np.abs(det) > 1e-12) & (u >= 0) & (v >= 0) & (u + v <= 1) \
            & (t > _T_MIN)
        best = np.where(ok & (t < best), t, best)
    return best


class _OpeningTarget:
    """Opening solid split into always-reflecting and transmitting triangles."""

    def __init__(self, solid, entry: OpeningLibraryEntry):
        opaque = set(entry.opaque_triangles)
        idx = np.arange(len(solid.triangles))
        self.opaque = solid.triangles[[i for i in idx if i in opaque]]
        self.glass = solid.triangles[[i for i in idx if i not in opaque]]
        self.label = L.WINDOW if solid.kind == "Window" else L.DOOR


def _box_triangles(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    x0, y0, z0 = lower
    x1, y1, z1 = upper
    v = np.array([[x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
                  [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1]])
    quads = [(0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4),
             (2, 3, 7, 6), (1, 2, 6, 5), (0, 3, 7, 4)]
    tris = []
    for a, b, c, d in quads:
        tris.append([v[a], v[b], v[c]])
        tris.append([v[a], v[c], v[d]])
    return np.array(tris)


def _pose_directions(pose: np.ndarray, targets: np.ndarray, res: float):
    """Regular az/el fan covering the target vertices, one margin step around."""
    rel = targets - pose
    az = np.arctan2(rel[:, 1], rel[:, 0])
    horiz = np.hypot(rel[:, 0], rel[:, 1])
    el = np.arctan2(rel[:, 2], horiz)
    center = math.atan2(float(np.mean(np.sin(az))), float(np.mean(np.cos(az))))
    delta = (az - center + math.pi) % (2 * math.pi) - math.pi
    az_lo, az_hi = delta.min() - res, delta.max() + res
    el_lo, el_hi = el.min() - res, el.max() + res
    azs = center + np.arange(az_lo, az_hi + res, res)
    els = np.arange(el_lo, el_hi + res, res)
    el_g, az_g = np.meshgrid(els, azs, indexing="ij")
    dirs = np.stack([np.cos(el_g) * np.cos(az_g),
                     np.cos(el_g) * np.sin(az_g),
                     np.sin(el_g)], axis=-1).reshape(-1, 3)
    return dirs


def simulate(model: BuildingModel, spec: ScanSpec, seed: int = 0,
             library: list[OpeningLibraryEntry] | None = None) -> PointCloud:
    """Ray-trace the scan described by ``spec`` against a ground-truth model.

    Rays meet the nearest opaque surface; window glass transmits with
    probability ``tau`` per ray, in which case the ray continues (typically to
    the interior back-plane).  Returns points in (pose, ray) order with the
    per-opening facade-crossing counts in ``meta['opening_ray_counts']``.
    """
    library = library if library is not None else default_library()
    by_name = {e.name: e for e in library}

    polygons = [_PolygonTarget(s.polygon, _SURFACE_LABEL[s.type])
                for s in model.surfaces]
    # interior back-planes behind walls that have holes (visible through glass)
    for s in model.walls():
        if not s.polygon.holes:
            continue
        frame = fit_plane_frame(s.polygon)
        shifted = s.polygon.exterior - spec.interior_offset * frame.n
        polygons.append(_PolygonTarget(PlanarPolygon(shifted), L.OTHER))

    openings = []
    for solid in model.openings:
        entry = by_name.get(solid.entry_name)
        if entry is None:
            raise SpecError(f"scan target references unknown library entry "
                            f"{solid.entry_name!r}")
        openings.append(_OpeningTarget(solid, entry))

    n_poses = len(spec.trajectory)
    transient_tris = [(_box_triangles(b.lower, b.upper),
                       int(round(b.fraction * n_poses)), b.label)
                      for b in spec.transients]

    fov = model.surfaces
    if spec.fov_surfaces:
        fov = [s for s in model.surfaces if s.id in spec.fov_surfaces]
        if not fov:
            raise SpecError("fov_surfaces matches no model surface")
    targets = np.vstack([s.polygon.exterior for s in fov])
    rng = np.random.default_rng(seed)
    xyz, sensor, true_label = [], [], []
    crossings = np.zeros(len(openings), dtype=np.int64)

    for pose_i, pose in enumerate(spec.trajectory):
        dirs = _pose_directions(pose, targets, spec.angular_resolution)
        n = len(dirs)
        t_base = np.full(n, np.inf)
        lab_base = np.full(n, L.OTHER, dtype=np.int64)
        for target in polygons:
            t = target.hit_t(pose, dirs)
            closer = t < t_base
            t_base[closer] = t[closer]
            lab_base[closer] = target.label
        for tris, active_until, label in transient_tris:
            if pose_i >= active_until:
                continue
            t = _triangles_hit_t(pose, dirs, tris)
            closer = t < t_base
            t_base[closer] = t[closer]
            lab_base[closer] = label

        t_best = t_base
        lab_best = lab_base
        for k, op in enumerate(openings):
            t_op = _triangles_hit_t(pose, dirs, op.opaque) \
                if len(op.opaque) else np.full(n, np.inf)
            t_glass = _triangles_hit_t(pose, dirs, op.glass) \
                if len(op.glass) else np.full(n, np.inf)
            if len(op.glass):
                transmit = rng.random(n) < spec.tau
                t_gl = np.where(transmit, np.inf, t_glass)
            else:
                t_gl = t_glass
            t_eff = np.minimum(t_op, t_gl)
            t_raw = np.minimum(t_op, t_glass)
            crossings[k] += int(np.sum(
                t_raw < np.minimum(t_base, spec.max_range)))
            closer = t_eff < t_best
            t_best = np.where(closer, t_eff, t_best)
            lab_best = np.where(closer, op.label, lab_best)

        returned = np.flatnonzero(t_best <= spec.max_range)
        t_ret = t_best[returned]
        if spec.sigma_noise > 0:
            t_ret = np.maximum(
                t_ret + rng.normal(0.0, spec.sigma_noise, len(t_ret)), _T_MIN)
        xyz.append(pose + t_ret[:, None] * dirs[returned])
        sensor.append(np.broadcast_to(pose, (len(returned), 3)).copy())
        true_label.append(lab_best[returned])

    xyz = np.vstack(xyz) if xyz else np.empty((0, 3))
    sensor = np.vstack(sensor) if sensor else np.empty((0, 3))
    true_label = np.concatenate(true_label) if true_label \
        else np.empty(0, dtype=np.int64)
    n_pts = len(xyz)
    prob = np.full((n_pts, len(L.LABELS)),
                   spec.epsilon / (len(L.LABELS) - 1))
    prob[np.arange(n_pts), true_label] = 1.0 - spec.epsilon
    return PointCloud(xyz, sensor, true_label, prob,
                      meta={"opening_ray_counts": crossings.tolist(),
                            "n_poses": n_poses, "seed": seed})


@dataclass(frozen=True)
class GroundTruthBox:
    """Reference opening rectangle in its facade's plane frame."""

    facade_id: str
    kind: str
    u_min: float
    v_min: float
    a: float
    b: float


def ground_truth_boxes(model: BuildingModel) -> list[GroundTruthBox]:
    """Facade-frame rectangles of the model's openings, for detection scoring."""
    boxes = []
    for solid in model.openings:
        surf = model.surface_by_id(solid.parent_surface)
        frame = fit_plane_frame(surf.polygon)
        uvd = project_points(solid.anchor[None, :], frame)[0]
        boxes.append(GroundTruthBox(facade_id=solid.parent_surface,
                                    kind=solid.kind,
                                    u_min=float(uvd[0]), v_min=float(uvd[1]),
                                    a=solid.width, b=solid.height))
    return boxes


def corrupt_labels(cloud: PointCloud, confusion: np.ndarray, seed: int = 0,
                   peak: float = 0.9) -> PointCloud:
    """Simulate an imperfect semantic classifier.

    Each point's predicted class is drawn from the row of ``confusion``
    (row-stochastic, indexed by true label); its probability vector places
    ``peak`` mass on the drawn class.  True labels are preserved.
    """
    confusion = np.asarray(confusion, dtype=np.float64)
    if confusion.shape != (len(L.LABELS), len(L.LABELS)):
        raise SpecError("confusion matrix must be 8x8")
    if np.any(confusion < 0) or not np.allclose(confusion.sum(axis=1), 1.0):
        raise SpecError("confusion matrix rows must be distributions")
    rng = np.random.default_rng(seed)
    out = cloud.copy()
    cum = np.cumsum(confusion, axis=1)
    u = rng.random(len(out))
    drawn = (u[:, None] > cum[out.true_label]).sum(axis=1)
    drawn = np.minimum(drawn, len(L.LABELS) - 1)
    out.prob[:] = (1.0 - peak) / (len(L.LABELS) - 1)
    out.prob[np.arange(len(out)), drawn] = peak
    return out
