"""Eigenvalue-based and scalar geometric features of point neighborhoods.

Used to enrich per-point descriptors before semantic segmentation and to keep
the synthetic label corruption realistic.  Eigen features follow the usual
normalized-eigenvalue definitions (lambda_1 > lambda_2 > lambda_3, normalized
to sum 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import InsufficientNeighborhood


@dataclass(frozen=True)
class NeighborhoodSpec:
    r_eigen: float = 0.8  # radius for eigen features, roughness, density
    r_vert: float = 0.4   # radius for verticality

    def __post_init__(self):
        if not (self.r_eigen > 0 and self.r_vert > 0):
            raise ValueError("neighborhood radii must be positive")


class NeighborIndex:
    """KD-tree over an (N, 3) point array for radius queries."""

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=np.float64)
        self._tree = cKDTree(self.points)

    def radius_neighbors(self, p, r: float) -> np.ndarray:
        """Indices of all points within distance r of p (inclusive)."""
        idx = self._tree.query_ball_point(np.asarray(p, dtype=np.float64), r)
        return np.asarray(sorted(idx), dtype=np.intp)


def radius_neighbors(points: np.ndarray, p, r: float) -> np.ndarray:
    return NeighborIndex(points).radius_neighbors(p, r)


def _sorted_eigenvalues(pts: np.ndarray) -> np.ndarray:
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    lam = np.linalg.eigvalsh(cov)[::-1]  # descending
    return np.clip(lam, 0.0, None)


def eigen_features(pts: np.ndarray):
    """(omnivariance, planarity, surface_variation) of a neighborhood."""
    pts = np.asarray(pts, dtype=np.float64)
    if len(pts) < 3:
        raise InsufficientNeighborhood(f"need >=3 points, got {len(pts)}")
    lam = _sorted_eigenvalues(pts)
    total = lam.sum()
    if total <= 0.0:
        raise InsufficientNeighborhood("all points coincide")
    lam = lam / total
    omnivariance = float(np.cbrt(lam[0] * lam[1] * lam[2]))
    planarity = float((lam[1] - lam[2]) / lam[0])
    surface_variation = float(lam[2])  # lambda_3 / sum, already normalized
    return omnivariance, planarity, surface_variation


def _plane_normal(pts: np.ndarray) -> np.ndarray:
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    w, vecs = np.linalg.eigh(cov)
    return vecs[:, 0]  # eigenvector of the smallest eigenvalue


def scalar_features(points: np.ndarray, i: int, spec: NeighborhoodSpec,
                    index: NeighborIndex | None = None, z_min: float | None = None):
    """(height, roughness, volume_density, verticality) for point ``i``.

    height is relative to the cloud's minimum z; roughness is the distance of
    the point to the least-squares plane of its r_eigen neighborhood; density
    is neighbor count over the search-sphere volume; verticality is
    1 - |n_z| of the r_vert neighborhood's plane normal.
    """
    points = np.asarray(points, dtype=np.float64)
    if index is None:
        index = NeighborIndex(points)
    if z_min is None:
        z_min = float(points[:, 2].min())
    p = points[i]
    height = float(p[2] - z_min)

    nb = index.radius_neighbors(p, spec.r_eigen)
    volume = 4.0 / 3.0 * np.pi * spec.r_eigen ** 3
    volume_density = len(nb) / volume
    if len(nb) >= 3:
        pts = points[nb]
        n = _plane_normal(pts)
        roughness = float(abs((p - pts.mean(axis=0)) @ n))
    else:
        roughness = 0.0

    nbv = index.radius_neighbors(p, spec.r_vert)
    if len(nbv) >= 3:
        nz = _plane_normal(points[nbv])[2]
        verticality = float(1.0 - abs(nz))
    else:
        verticality = 0.0
    return height, roughness, volume_density, verticality


def feature_table(points: np.ndarray, spec: NeighborhoodSpec | None = None) -> np.ndarray:
    """Per-point feature matrix with columns (height, roughness, volume_density,
    verticality, omnivariance, planarity, surface_variation).

    Points with degenerate neighborhoods get zeros for the eigen features.
    """
    spec = spec or NeighborhoodSpec()
    points = np.asarray(points, dtype=np.float64)
    index = NeighborIndex(points)
    z_min = float(points[:, 2].min())
    out = np.zeros((len(points), 7))
    for i in range(len(points)):
        out[i, :4] = scalar_features(points, i, spec, index=index, z_min=z_min)
        nb = index.radius_neighbors(points[i], spec.r_eigen)
        if len(nb) >= 3:
            try:
                out[i, 4:] = eigen_features(points[nb])
            except InsufficientNeighborhood:
                pass
    return out
