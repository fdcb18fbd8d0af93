"""Voxel-to-model and voxel-to-point comparison on per-facade texture layers.

Each facade gets a 2D raster in its plane frame whose cell size equals the
voxel size.  The model-comparison layer marks cells confirmed / conflicted /
unknown; the points-comparison layer carries the fused semantic class of the
nearest static voxel.  Point fusion separates static from dynamic voxels and
relabels dynamic points to ``other``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import labels as L
from .geometry import PlaneFrame, project_points
from .occupancy import OccupancyGrid, VoxelState


class ModelCellLabel(enum.IntEnum):
    UNKNOWN = 0
    CONFIRMED = 1
    CONFLICTED = 2


@dataclass(frozen=True)
class FusionParams:
    p_static: float = 0.7
    # static voxels within this distance of the facade plane contribute
    # semantics; wider than the model band so recessed openings are seen
    semantic_band: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p_static <= 1.0:
            raise ValueError("p_static must be a probability")


@dataclass
class TextureLayer:
    """Per-facade raster; cell (0, 0) sits at the facade's minimum (u, v) corner."""

    facade_id: str
    frame: PlaneFrame
    cell_size: float
    u0: float
    v0: float
    labels: np.ndarray   # (rows, cols) int
    probs: np.ndarray    # (rows, cols) float
    kind: str = "model"  # model | points | posterior

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    def cell_names(self) -> np.ndarray:
        """Per-cell discrete label names (object array) for CSV export."""
        out = np.empty(self.labels.shape, dtype=object)
        if self.kind == "model":
            table = {int(m): m.name.lower() for m in ModelCellLabel}
            for code, name in table.items():
                out[self.labels == code] = name
        elif self.kind == "points":
            out[...] = "nodata"
            for i, name in enumerate(L.LABELS):
                out[self.labels == i] = name
        else:
            out[...] = "low"
            out[self.labels == 1] = "high"
        return out


def _layer_grid(surface, frame, cell_size):
    uv = project_points(surface.polygon.exterior, frame)[:, :2]
    u0, v0 = uv[:, 0].min(), uv[:, 1].min()
    cols = int(np.ceil((uv[:, 0].max() - u0) / cell_size - 1e-9))
    rows = int(np.ceil((uv[:, 1].max() - v0) / cell_size - 1e-9))
    return u0, v0, max(rows, 1), max(cols, 1)


def _cells_of(uv, u0, v0, rows, cols, cell_size):
    # the epsilon keeps points sitting exactly on a cell boundary (voxel
    # centers of an axis-aligned facade) in a consistent cell despite FP noise
    c = np.floor((uv[:, 0] - u0) / cell_size + 1e-6).astype(np.int64)
    r = np.floor((uv[:, 1] - v0) / cell_size + 1e-6).astype(np.int64)
    ok = (r >= 0) & (r < rows) & (c >= 0) & (c < cols)
    return r, c, ok


def model_compare(grid: OccupancyGrid, surface) -> TextureLayer:
    """Project band voxels of one facade into the model-comparison layer.

    A cell is confirmed when any projecting voxel is occupied (occupancy wins
    over conflict), conflicted when any is empty, otherwise unknown.
    """
    frame = grid.facade_frames[surface.id]
    cs = grid.params.voxel_size
    u0, v0, rows, cols = _layer_grid(surface, frame, cs)
    labels = np.zeros((rows, cols), dtype=np.int8)
    probs = np.zeros((rows, cols), dtype=np.float64)

    keys = grid.model_faces.get(surface.id, np.empty((0, 3), dtype=np.int64))
    if len(keys):
        states = grid.state_codes(keys)
        occ = grid.occupancy(keys)
        uvd = project_points(grid.centers(keys), frame)
        r, c, ok = _cells_of(uvd[:, :2], u0, v0, rows, cols, cs)

        conf_p = np.zeros((rows, cols))
        confl_p = np.zeros((rows, cols))
        m_occ = ok & (states == VoxelState.OCCUPIED)
        m_emp = ok & (states == VoxelState.EMPTY)
        np.maximum.at(conf_p, (r[m_occ], c[m_occ]), occ[m_occ])
        np.maximum.at(confl_p, (r[m_emp], c[m_emp]), 1.0 - occ[m_emp])
        has_occ = np.zeros((rows, cols), dtype=bool)
        has_emp = np.zeros((rows, cols), dtype=bool)
        has_occ[r[m_occ], c[m_occ]] = True
        has_emp[r[m_emp], c[m_emp]] = True

        labels[has_emp] = ModelCellLabel.CONFLICTED
        probs[has_emp] = confl_p[has_emp]
        labels[has_occ] = ModelCellLabel.CONFIRMED
        probs[has_occ] = conf_p[has_occ]
    return TextureLayer(surface.id, frame, cs, u0, v0, labels, probs, kind="model")


def fuse_points(grid: OccupancyGrid, cloud, params: FusionParams | None = None):
    """Fuse per-point semantics into voxels; relabel points in dynamic voxels.

    Per voxel containing points: the candidate class maximizes the summed
    per-point probability, its median probability is combined with the voxel
    occupancy into an existence score, and the static threshold splits static
    from dynamic.  Dynamic points are relabeled ``other`` in place.
    """
    params = params or FusionParams()
    if len(cloud) == 0:
        return grid, cloud
    keys = grid.voxel_of(cloud.xyz)
    ok = grid.in_bounds(keys)
    idx_pts = np.flatnonzero(ok)
    if len(idx_pts) == 0:
        return grid, cloud
    keys = keys[ok]
    flat = np.ravel_multi_index(tuple(keys.T), grid.log_odds.shape)
    uniq, gid = np.unique(flat, return_inverse=True)
    n_vox = len(uniq)

    summed = np.zeros((n_vox, len(L.LABELS)))
    np.add.at(summed, gid, cloud.prob[idx_pts])
    candidate = summed.argmax(axis=1)

    pvals = cloud.prob[idx_pts, candidate[gid]]
    order = np.lexsort((pvals, gid))
    sorted_vals = pvals[order]
    counts = np.bincount(gid, minlength=n_vox)
    offs = np.concatenate([[0], np.cumsum(counts)])
    lo = offs[:-1] + (counts - 1) // 2
    hi = offs[:-1] + counts // 2
    p_b = 0.5 * (sorted_vals[lo] + sorted_vals[hi])

    vox_keys = np.stack(np.unravel_index(uniq, grid.log_odds.shape), axis=1)
    p_a = grid.occupancy(vox_keys)
    p_ex = p_a * p_b
    static = p_ex >= params.p_static

    vidx = tuple(vox_keys.T)
    grid.fused_label[vidx] = candidate.astype(np.int8)
    grid.p_ex[vidx] = p_ex
    grid.static_mask[vidx] = static

    dynamic_pts = idx_pts[~static[gid]]
    cloud.set_labels(dynamic_pts, L.OTHER)
    return grid, cloud


def points_compare(grid: OccupancyGrid, surface) -> TextureLayer:
    """Project static voxel semantics of one facade into the points layer.

    Per cell the nearest static voxel (by absolute plane distance, ties broken
    by higher existence score) provides the label; cells without one are NoData.
    """
    frame = grid.facade_frames[surface.id]
    cs = grid.params.voxel_size
    u0, v0, rows, cols = _layer_grid(surface, frame, cs)
    labels = np.full((rows, cols), L.NODATA, dtype=np.int8)
    probs = np.zeros((rows, cols), dtype=np.float64)

    keys = grid.semantic_faces.get(surface.id, np.empty((0, 3), dtype=np.int64))
    if len(keys):
        vidx = tuple(keys.T)
        static = grid.static_mask[vidx]
        keys = keys[static]
    if len(keys):
        vidx = tuple(keys.T)
        p_ex = grid.p_ex[vidx]
        fused = grid.fused_label[vidx]
        uvd = project_points(grid.centers(keys), frame)
        r, c, ok = _cells_of(uvd[:, :2], u0, v0, rows, cols, cs)
        r, c = r[ok], c[ok]
        p_ex, fused, dist = p_ex[ok], fused[ok], np.abs(uvd[ok, 2])
        cell_id = r * cols + c
        order = np.lexsort((-p_ex, dist, cell_id))
        cell_sorted = cell_id[order]
        first = np.concatenate([[True], cell_sorted[1:] != cell_sorted[:-1]])
        sel = order[first]
        labels[r[sel], c[sel]] = fused[sel]
        probs[r[sel], c[sel]] = p_ex[sel]
    return TextureLayer(surface.id, frame, cs, u0, v0, labels, probs, kind="points")
