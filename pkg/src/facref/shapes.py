"""Cluster filtering and generalization into opening rectangles.

High-posterior clusters are filtered by area and completeness, cleaned with a
morphological opening, generalized to axis-aligned minimum bounding boxes in
the facade frame, and pruned by a rectangularity-percentile outlier test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .bayes import CellCluster

_SQUARE3 = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class ShapeParams:
    b_s: float = 0.3          # minimum candidate area, m^2
    r_cp_t: float = 0.1       # completeness threshold
    pe_up: float = 95.0       # upper rectangularity percentile
    pe_lo: float = 5.0        # lower rectangularity percentile
    n_min: int = 5            # candidates needed before percentile rejection


@dataclass
class OpeningCandidate:
    facade_id: str
    kind: str
    u_min: float
    v_min: float
    a: float          # width, m
    b: float          # height, m
    area: float       # cluster area, m^2
    r_cp: float
    rect_index: float
    cells: np.ndarray


def cluster_mask(cluster: CellCluster, rows: int, cols: int) -> np.ndarray:
    mask = np.zeros((rows, cols), dtype=bool)
    mask[cluster.cells[:, 0], cluster.cells[:, 1]] = True
    return mask


def completeness_index(mask: np.ndarray) -> float:
    """Ratio of shape area to enclosed-hole area; +inf when there are no holes."""
    filled = ndimage.binary_fill_holes(mask)
    hole_area = int(np.sum(filled & ~mask))
    if hole_area == 0:
        return math.inf
    return float(np.sum(mask)) / hole_area


def filter_candidates(clusters: list[CellCluster], rows: int, cols: int,
                      cell_size: float, params: ShapeParams) -> list[CellCluster]:
    """Keep clusters that are large enough and not hopelessly patchy."""
    kept = []
    for cl in clusters:
        area = len(cl.cells) * cell_size ** 2
        if area < params.b_s:
            continue
        if completeness_index(cluster_mask(cl, rows, cols)) < params.r_cp_t:
            continue
        kept.append(cl)
    return kept


def morph_open(mask: np.ndarray, structure: np.ndarray = _SQUARE3) -> np.ndarray:
    """Erosion followed by dilation; removes spurs and 1-cell bridges."""
    return ndimage.binary_opening(mask, structure=structure)


def min_bbox(cells: np.ndarray, cell_size: float, u0: float = 0.0, v0: float = 0.0):
    """Tight axis-aligned box over cell outer edges: (u_min, v_min, width, height)."""
    r_min, c_min = cells.min(axis=0)
    r_max, c_max = cells.max(axis=0)
    return (u0 + c_min * cell_size,
            v0 + r_min * cell_size,
            (c_max - c_min + 1) * cell_size,
            (r_max - r_min + 1) * cell_size)


def nearest_rank_percentile(values: np.ndarray, q: float) -> float:
    """Nearest-rank percentile (1-based rank ceil(q/100 * n))."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    rank = max(1, math.ceil(q / 100.0 * len(v)))
    return float(v[rank - 1])


def rectangularity_filter(candidates: list[OpeningCandidate],
                          params: ShapeParams) -> list[OpeningCandidate]:
    """Reject per-facade side-ratio outliers beyond the percentile bounds.

    With fewer than ``n_min`` candidates on a facade all are kept; comparisons
    are strict, so candidates sitting exactly on a percentile survive.
    """
    by_facade: dict[str, list[OpeningCandidate]] = {}
    for c in candidates:
        by_facade.setdefault(c.facade_id, []).append(c)
    out = []
    for group in by_facade.values():
        if len(group) < params.n_min:
            out.extend(group)
            continue
        idx = np.array([c.rect_index for c in group])
        hi = nearest_rank_percentile(idx, params.pe_up)
        lo = nearest_rank_percentile(idx, params.pe_lo)
        out.extend(c for c, v in zip(group, idx) if lo <= v <= hi)
    return out


def generalize_clusters(clusters: list[CellCluster], rows: int, cols: int,
                        cell_size: float, u0: float, v0: float,
                        params: ShapeParams) -> list[OpeningCandidate]:
    """Full per-facade shape stage: filter, open, box, percentile-prune."""
    kept = filter_candidates(clusters, rows, cols, cell_size, params)
    candidates = []
    for cl in kept:
        if cl.kind is None:
            continue
        mask = cluster_mask(cl, rows, cols)
        r_cp = completeness_index(mask)
        opened = morph_open(mask)
        cells = np.argwhere(opened)
        if len(cells) == 0:
            continue
        u_min, v_min, a, b = min_bbox(cells, cell_size, u0, v0)
        candidates.append(OpeningCandidate(
            facade_id=cl.facade_id, kind=cl.kind,
            u_min=u_min, v_min=v_min, a=a, b=b,
            area=len(cl.cells) * cell_size ** 2,
            r_cp=r_cp, rect_index=a / b, cells=cells))
    return rectangularity_filter(candidates, params)
