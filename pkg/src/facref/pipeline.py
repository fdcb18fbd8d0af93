"""End-to-end refinement: LoD2 model + labeled scan -> LoD3 model + relabeled scan.

Stages: measurement-uncertainty bands, occupancy grid construction from the
rays, model/point texture comparison per facade, per-cell opening inference,
clustering and shape generalization, library fitting, and final assembly.
A failing stage raises :class:`PipelineError` naming the stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bayes import back_project, decide_and_cluster, posterior_layer
from .building import BuildingModel, OpeningLibraryEntry
from .config import Config
from .exceptions import FacrefError, PipelineError
from .io_formats import PointCloud
from .library import default_library
from .occupancy import OccupancyGrid
from .reconstruct import apply_fit, assemble_lod3, compute_fit, select_entry
from .shapes import OpeningCandidate, generalize_clusters
from .textures import TextureLayer, fuse_points, model_compare, points_compare
from .uncertainty import combine

log = logging.getLogger("facref.pipeline")


@dataclass
class FacadeResult:
    model_layer: TextureLayer
    points_layer: TextureLayer
    posterior: TextureLayer
    clusters: list
    candidates: list


@dataclass
class PipelineResult:
    model: BuildingModel               # refined LoD3 model
    cloud: PointCloud                  # relabeled copy of the input scan
    grid: OccupancyGrid
    facades: dict = field(default_factory=dict)   # facade id -> FacadeResult
    candidates: list = field(default_factory=list)
    solids: list = field(default_factory=list)


def _grid_bounds(model: BuildingModel, margin: float):
    pts = np.vstack([ring for s in model.surfaces for ring in s.polygon.rings])
    return pts.min(axis=0) - margin, pts.max(axis=0) + margin


def run_pipeline(model: BuildingModel, cloud: PointCloud, config: Config,
                 library: list[OpeningLibraryEntry] | None = None) -> PipelineResult:
    library = library if library is not None else default_library()
    cloud = cloud.copy()

    def stage(name, fn):
        try:
            return fn()
        except FacrefError as exc:
            raise PipelineError(f"stage {name!r} failed: {exc}") from exc

    conf = stage("uncertainty", lambda: combine(config.uncertainty))
    log.info("uncertainty band: +-%.2f m at CL %.2f", conf.upper_ci, conf.cl)

    # the extra half voxel keeps axis-aligned facade planes off voxel
    # boundaries, where surface hits would split across two voxel layers
    margin = max(conf.upper_ci, config.fusion.semantic_band) \
        + 2.5 * config.grid.voxel_size
    lower, upper = _grid_bounds(model, margin)
    grid = stage("grid", lambda: OccupancyGrid(lower, upper, config.grid))
    stage("insert", lambda: grid.insert_cloud(cloud))
    log.info("grid %s: %d occupied-voxel hits", tuple(grid.dims),
             int((grid.hits > 0).sum()))

    stage("populate", lambda: grid.populate_model(
        model, conf, semantic_band=config.fusion.semantic_band))
    stage("fuse", lambda: fuse_points(grid, cloud, config.fusion))

    facades = {}
    all_candidates = []
    solids = []
    for surf in model.walls():
        ml = stage("model-compare", lambda s=surf: model_compare(grid, s))
        pl = stage("points-compare", lambda s=surf: points_compare(grid, s))
        post = stage("posterior", lambda: posterior_layer(ml, pl, config.bn))
        clusters = stage("cluster",
                         lambda: decide_and_cluster(post, pl, config.bn))
        stage("back-project", lambda s=surf: back_project(
            clusters, post, pl, grid, cloud, s, config.bn))
        candidates = stage("generalize", lambda: generalize_clusters(
            clusters, post.rows, post.cols, post.cell_size,
            post.u0, post.v0, config.shape))
        log.info("facade %s: %d clusters, %d candidates",
                 surf.id, len(clusters), len(candidates))
        for cand in candidates:
            solids.append(stage("fit", lambda c=cand: _fit_candidate(
                c, grid, library, config)))
        facades[surf.id] = FacadeResult(ml, pl, post, clusters, candidates)
        all_candidates.extend(candidates)

    refined = stage("assemble", lambda: assemble_lod3(model, solids))
    return PipelineResult(model=refined, cloud=cloud, grid=grid,
                          facades=facades, candidates=all_candidates,
                          solids=solids)


def _fit_candidate(cand: OpeningCandidate, grid, library, config: Config):
    frame = grid.facade_frames[cand.facade_id]
    entry = select_entry(library, cand.kind)
    t = compute_fit((cand.u_min, cand.v_min, cand.a, cand.b), frame, entry,
                    recess=config.recon.recess)
    return apply_fit(entry, t, cand.facade_id)
