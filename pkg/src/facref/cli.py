"""Command-line front end: simulate, features, refine, eval, textures."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .config import read_config
from .exceptions import FacrefError, ParseError
from .io_formats import (export_texture, read_building_json, read_citygml_subset,
                         read_opening_library, read_point_cloud,
                         write_building_json, write_citygml_subset,
                         write_point_cloud)
from .metrics import det_metrics, format_report, seg_metrics, write_report
from .pipeline import run_pipeline
from .simulator import ScanSpec, ground_truth_boxes, simulate

log = logging.getLogger("facref")


def _setup_logging():
    level = os.environ.get("FACREF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _read_model(path):
    if str(path).endswith((".gml", ".xml")):
        return read_citygml_subset(path)
    return read_building_json(path)


def _write_model(model, path):
    if str(path).endswith((".gml", ".xml")):
        write_citygml_subset(model, path)
    else:
        write_building_json(model, path)


def _read_trajectory(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x,"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected x,y,z")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return np.array(rows, dtype=np.float64)


def _library(args):
    if getattr(args, "library", None):
        return read_opening_library(args.library)
    return None


def cmd_simulate(args):
    cfg = read_config(args.config)
    model = _read_model(args.model)
    traj = _read_trajectory(args.trajectory)
    spec = ScanSpec(trajectory=traj,
                    angular_resolution=cfg.sim.angular_resolution,
                    max_range=cfg.sim.max_range,
                    sigma_noise=cfg.sim.sigma_noise,
                    tau=cfg.sim.tau, epsilon=cfg.sim.epsilon,
                    interior_offset=cfg.sim.interior_offset)
    seed = args.seed if args.seed is not None else cfg.sim.seed
    cloud = simulate(model, spec, seed=seed, library=_library(args))
    write_point_cloud(cloud, args.out)
    if args.counts:
        with open(args.counts, "w", encoding="utf-8") as f:
            json.dump(cloud.meta, f, indent=1)
    log.info("wrote %d points to %s", len(cloud), args.out)


def cmd_features(args):
    from .features import feature_table

    cfg = read_config(args.config)
    cloud = read_point_cloud(args.cloud)
    table = feature_table(cloud.xyz, cfg.features)
    names = ("height", "roughness", "volume_density", "verticality",
             "omnivariance", "planarity", "surface_variation")
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("x,y,z," + ",".join(names) + "\n")
        for p, row in zip(cloud.xyz, table):
            f.write(",".join(f"{v:.6f}" for v in (*p, *row)) + "\n")


def cmd_refine(args):
    cfg = read_config(args.config)
    model = _read_model(args.model)
    cloud = read_point_cloud(args.cloud)
    result = run_pipeline(model, cloud, cfg, library=_library(args))
    _write_model(result.model, args.out_model)
    if args.out_cloud:
        write_point_cloud(result.cloud, args.out_cloud)
    if args.grid_dump:
        result.grid.dump_voxels(args.grid_dump)
    if args.dump_shapes:
        doc = [{"facade": c.facade_id, "kind": c.kind,
                "u_min": c.u_min, "v_min": c.v_min,
                "width": c.a, "height": c.b,
                "area": c.area, "rect_index": c.rect_index}
               for c in result.candidates]
        with open(args.dump_shapes, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=1)
    print(f"fitted {len(result.solids)} openings "
          f"on {len(result.facades)} facades")


def cmd_eval(args):
    cfg = read_config(args.config)
    truth = _read_model(args.truth)
    pred = _read_model(args.model)
    seg = det = None
    if args.cloud:
        cloud = read_point_cloud(args.cloud)
        seg = seg_metrics(cloud.true_label, cloud.predicted())
    t_boxes = ground_truth_boxes(truth)
    p_boxes = ground_truth_boxes(pred)
    measured = None
    if args.counts:
        with open(args.counts, "r", encoding="utf-8") as f:
            meta = json.load(f)
        counts = meta.get("opening_ray_counts", [])
        if len(counts) == len(t_boxes):
            measured = [c >= cfg.eval.k_min for c in counts]
    det = det_metrics(t_boxes, p_boxes, measured_mask=measured,
                      iou_threshold=cfg.eval.iou_threshold)
    if args.report:
        write_report(seg, det, args.report)
    print(format_report(seg, det))


def cmd_textures(args):
    cfg = read_config(args.config)
    model = _read_model(args.model)
    cloud = read_point_cloud(args.cloud)
    result = run_pipeline(model, cloud, cfg, library=_library(args))
    wanted = ("model", "points", "posterior") if args.layer == "all" \
        else (args.layer,)
    os.makedirs(args.out_dir, exist_ok=True)
    for fid, fr in result.facades.items():
        layers = {"model": fr.model_layer, "points": fr.points_layer,
                  "posterior": fr.posterior}
        for name in wanted:
            export_texture(layers[name], os.path.join(args.out_dir,
                                                      f"{fid}_{name}"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="facref",
                                description="LoD2-to-LoD3 facade refinement "
                                            "from laser scans")
    p.add_argument("--config", default=None, help="INI configuration file")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="ray-trace a synthetic scan")
    s.add_argument("--model", required=True)
    s.add_argument("--trajectory", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--counts", default=None,
                   help="write scan metadata (per-opening ray counts) as JSON")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--library", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("features", help="per-point geometric features")
    s.add_argument("--cloud", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("refine", help="refine a LoD2 model to LoD3")
    s.add_argument("--model", required=True)
    s.add_argument("--cloud", required=True)
    s.add_argument("--out-model", required=True)
    s.add_argument("--out-cloud", default=None)
    s.add_argument("--grid-dump", default=None)
    s.add_argument("--dump-shapes", default=None)
    s.add_argument("--library", default=None)
    s.set_defaults(func=cmd_refine)

    s = sub.add_parser("eval", help="score a refined model and cloud")
    s.add_argument("--truth", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--cloud", default=None)
    s.add_argument("--counts", default=None)
    s.add_argument("--report", default=None)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("textures", help="export facade texture layers")
    s.add_argument("--model", required=True)
    s.add_argument("--cloud", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--layer", default="all",
                   choices=("all", "model", "points", "posterior"))
    s.add_argument("--library", default=None)
    s.set_defaults(func=cmd_textures)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except FacrefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
