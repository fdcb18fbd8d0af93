"""Per-cell Bayesian network over the two texture layers.

A two-parent network: model-comparison state M and points-comparison state S
feed the binary target node (opening / no_opening) through a conditional
probability table.  Layer evidence enters as soft evidence weighted by each
layer's confidence level; inference is exact enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import labels as L
from .exceptions import ConfigError
from .geometry import project_points
from .textures import TextureLayer

M_STATES = ("unknown", "confirmed", "conflicted")  # order matches ModelCellLabel
S_STATES = L.LABELS + ("nodata",)

_EIGHT = np.ones((3, 3), dtype=int)


def default_cpt() -> dict:
    """Shipped opening-probability table P(opening | M, S), config-overridable.

    Encodes the qualitative co-occurrence rules: conflicts coinciding with
    window/door semantics strongly indicate unmodeled openings; confirmed
    cells indicate existing structure.
    """
    cpt = {}
    for s in S_STATES:
        cpt[("conflicted", s)] = 0.95 if s in ("window", "door") else 0.7
        if s in ("window", "door"):
            cpt[("confirmed", s)] = 0.3
        elif s in ("wall", "molding", "floor"):
            cpt[("confirmed", s)] = 0.05
        else:
            cpt[("confirmed", s)] = 0.1
        cpt[("unknown", s)] = 0.6 if s in ("window", "door") else 0.2
    return cpt


@dataclass(frozen=True)
class NetworkSpec:
    cpt: dict = field(default_factory=default_cpt)
    cl_model: float = 0.9
    cl_points: float = 0.7
    p_t: float = 0.7
    d_mold: int = 2  # cells; "close to an opening" for the molding rule

    def __post_init__(self):
        for cl, name in ((self.cl_model, "cl_model"), (self.cl_points, "cl_points"),
                         (self.p_t, "p_t")):
            if not 0.0 <= cl <= 1.0:
                raise ConfigError(f"bn.{name} must be a probability")
        for m in M_STATES:
            for s in S_STATES:
                if (m, s) not in self.cpt:
                    raise ConfigError(f"bn.cpt missing entry for ({m}, {s})")
                p = self.cpt[(m, s)]
                if not 0.0 <= p <= 1.0:
                    raise ConfigError(f"bn.cpt[{m}.{s}]={p} not a probability")

    def cpt_matrix(self) -> np.ndarray:
        out = np.empty((len(M_STATES), len(S_STATES)))
        for i, m in enumerate(M_STATES):
            for j, s in enumerate(S_STATES):
                out[i, j] = self.cpt[(m, s)]
        return out


def soft_evidence(obs: np.ndarray, cl: float) -> np.ndarray:
    """Mix an observed state distribution with uniform noise per confidence level."""
    obs = np.asarray(obs, dtype=np.float64)
    return cl * obs + (1.0 - cl) / len(obs)


def infer_cell(m_dist, s_dist, spec: NetworkSpec) -> float:
    """P(opening) by exact enumeration over both parents under soft evidence."""
    ev_m = soft_evidence(m_dist, spec.cl_model)
    ev_s = soft_evidence(s_dist, spec.cl_points)
    return float(ev_m @ spec.cpt_matrix() @ ev_s)


def _point_mass(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def posterior_table(spec: NetworkSpec) -> np.ndarray:
    """Opening posterior for every hard (M, S) observation pair."""
    out = np.empty((len(M_STATES), len(S_STATES)))
    for i in range(len(M_STATES)):
        for j in range(len(S_STATES)):
            out[i, j] = infer_cell(
                _point_mass(len(M_STATES), i), _point_mass(len(S_STATES), j), spec)
    return out


def _m_index(model_labels: np.ndarray) -> np.ndarray:
    # ModelCellLabel codes already match M_STATES ordering
    return model_labels.astype(np.int64)


def _s_index(points_labels: np.ndarray) -> np.ndarray:
    s = points_labels.astype(np.int64).copy()
    s[s == L.NODATA] = len(S_STATES) - 1
    return s


def posterior_layer(model_layer: TextureLayer, points_layer: TextureLayer,
                    spec: NetworkSpec) -> TextureLayer:
    """Per-cell opening posterior from the two comparison layers."""
    table = posterior_table(spec)
    post = table[_m_index(model_layer.labels), _s_index(points_layer.labels)]
    decision = (post > spec.p_t).astype(np.int8)
    return TextureLayer(model_layer.facade_id, model_layer.frame,
                        model_layer.cell_size, model_layer.u0, model_layer.v0,
                        decision, post, kind="posterior")


@dataclass
class CellCluster:
    """8-connected component of high-posterior cells on one facade."""

    facade_id: str
    cells: np.ndarray            # (K, 2) array of (row, col)
    kind: str | None             # Window, Door, or None (no opening semantics)
    mean_posterior: float
    window_votes: int = 0
    door_votes: int = 0


def decide_and_cluster(posterior: TextureLayer, points_layer: TextureLayer,
                       spec: NetworkSpec) -> list[CellCluster]:
    """Group high-posterior cells into 8-connected clusters and classify them.

    Kind comes from window-vs-door votes of the points layer among member
    cells (tie goes to Window); a door additionally needs a cell on the
    facade's bottom row, otherwise it is treated as a window.
    """
    high = posterior.probs > spec.p_t
    lab, n = ndimage.label(high, structure=_EIGHT)
    clusters = []
    for k in range(1, n + 1):
        cells = np.argwhere(lab == k)
        s = points_layer.labels[cells[:, 0], cells[:, 1]]
        w_votes = int(np.sum(s == L.WINDOW))
        d_votes = int(np.sum(s == L.DOOR))
        if w_votes == 0 and d_votes == 0:
            kind = None
        elif d_votes > w_votes and np.any(cells[:, 0] == 0):
            kind = "Door"
        else:
            kind = "Window"
        clusters.append(CellCluster(
            facade_id=posterior.facade_id,
            cells=cells,
            kind=kind,
            mean_posterior=float(posterior.probs[cells[:, 0], cells[:, 1]].mean()),
            window_votes=w_votes,
            door_votes=d_votes,
        ))
    return clusters


def back_project(clusters: list[CellCluster], posterior: TextureLayer,
                 points_layer: TextureLayer, grid, cloud,
                 surface, spec: NetworkSpec):
    """Write cluster classifications back onto the points of one facade.

    Points in voxels projecting into a high cluster get the cluster's opening
    class; points in low cells whose semantic label is window/door become
    molding near a cluster and wall otherwise.  Only labels change.
    """
    rows, cols = posterior.labels.shape
    kind_label = np.full((rows, cols), -1, dtype=np.int8)
    high_mask = np.zeros((rows, cols), dtype=bool)
    for cl in clusters:
        if cl.kind is None:
            continue
        code = L.WINDOW if cl.kind == "Window" else L.DOOR
        kind_label[cl.cells[:, 0], cl.cells[:, 1]] = code
        high_mask[cl.cells[:, 0], cl.cells[:, 1]] = True
    near = ndimage.binary_dilation(high_mask, structure=_EIGHT,
                                   iterations=max(spec.d_mold, 1))

    keys = grid.semantic_faces.get(surface.id)
    if keys is None or len(keys) == 0 or len(cloud) == 0:
        return cloud
    in_band = np.zeros(grid.log_odds.shape, dtype=bool)
    in_band[tuple(keys.T)] = True
    pkeys = grid.voxel_of(cloud.xyz)
    ok = grid.in_bounds(pkeys)
    sel = ok.copy()
    sel[ok] = in_band[tuple(pkeys[ok].T)]

    cs = posterior.cell_size
    uv = project_points(cloud.xyz, posterior.frame)[:, :2]
    c = np.floor((uv[:, 0] - posterior.u0) / cs + 1e-6).astype(np.int64)
    r = np.floor((uv[:, 1] - posterior.v0) / cs + 1e-6).astype(np.int64)
    sel &= (r >= 0) & (r < rows) & (c >= 0) & (c < cols)

    idx = np.flatnonzero(sel)
    ri, ci = r[idx], c[idx]
    cell_kind = kind_label[ri, ci]
    cell_s = points_layer.labels[ri, ci]
    cell_near = near[ri, ci]
    for code in (L.WINDOW, L.DOOR):
        cloud.set_labels(idx[cell_kind == code], code)
    low_open = (cell_kind < 0) & ((cell_s == L.WINDOW) | (cell_s == L.DOOR))
    cloud.set_labels(idx[low_open & cell_near], L.MOLDING)
    cloud.set_labels(idx[low_open & ~cell_near], L.WALL)
    return cloud
