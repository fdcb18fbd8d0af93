"""Evaluation: semantic segmentation scores and opening detection rates.

Segmentation is scored point-wise over the 8-class scheme against true
labels.  Detection matches fitted opening rectangles to ground-truth
rectangles per facade at an IoU threshold and reports detection rates over
all openings and over measured openings (those actually crossed by enough
laser rays), the false rate, and matched-IoU statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import labels as L


@dataclass
class SegMetrics:
    confusion: np.ndarray          # (8, 8) rows = truth, cols = prediction
    overall_accuracy: float
    precision: np.ndarray          # per label; nan where undefined
    recall: np.ndarray
    f1: np.ndarray
    iou: np.ndarray
    mean_f1: float                 # averaged over labels present in the truth
    mean_iou: float


def seg_metrics(true_label: np.ndarray, predicted: np.ndarray) -> SegMetrics:
    t = np.asarray(true_label, dtype=np.int64)
    p = np.asarray(predicted, dtype=np.int64)
    if len(t) != len(p):
        raise ValueError("label arrays disagree in length")
    valid = t >= 0
    t, p = t[valid], p[valid]
    n = len(L.LABELS)
    confusion = np.zeros((n, n), dtype=np.int64)
    np.add.at(confusion, (t, p), 1)

    tp = np.diag(confusion).astype(np.float64)
    fp = confusion.sum(axis=0) - tp
    fn = confusion.sum(axis=1) - tp
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), np.nan)
        recall = np.where(tp + fn > 0, tp / (tp + fn), np.nan)
        f1 = np.where(np.nan_to_num(precision) + np.nan_to_num(recall) > 0,
                      2 * tp / (2 * tp + fp + fn), np.nan)
        iou = np.where(tp + fp + fn > 0, tp / (tp + fp + fn), np.nan)
    present = confusion.sum(axis=1) > 0
    oa = float(tp.sum() / max(confusion.sum(), 1))
    return SegMetrics(
        confusion=confusion, overall_accuracy=oa,
        precision=precision, recall=recall, f1=f1, iou=iou,
        mean_f1=float(np.nanmean(np.where(present, f1, np.nan))),
        mean_iou=float(np.nanmean(np.where(present, iou, np.nan))))


# -- detection --------------------------------------------------------------

def iou_rect(a, b) -> float:
    """Intersection-over-union of two (u_min, v_min, width, height) boxes."""
    au, av, aw, ah = a
    bu, bv, bw, bh = b
    iw = min(au + aw, bu + bw) - max(au, bu)
    ih = min(av + ah, bv + bh) - max(av, bv)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


@dataclass
class DetMetrics:
    n_truth: int
    n_measured: int
    n_predicted: int
    n_matched: int
    n_matched_measured: int
    dr_all: float                  # matched / all ground-truth openings
    dr_measured: float             # matched / measured ground-truth openings
    false_rate: float              # unmatched predictions / predictions
    median_iou: float              # over matched pairs; nan when none
    mean_iou: float
    matches: list = field(default_factory=list)  # (truth_idx, pred_idx, iou)


def det_metrics(truth_boxes, predicted, measured_mask=None,
                iou_threshold: float = 0.5) -> DetMetrics:
    """Greedy best-IoU matching of predicted to ground-truth rectangles.

    ``truth_boxes`` are GroundTruthBox-like (facade_id, u_min, v_min, a, b);
    ``predicted`` are OpeningCandidate-like with the same fields.  Boxes only
    match within the same facade.  ``measured_mask`` flags truth openings
    that received enough laser rays to be observable.
    """
    n_t, n_p = len(truth_boxes), len(predicted)
    measured = np.ones(n_t, dtype=bool) if measured_mask is None \
        else np.asarray(measured_mask, dtype=bool)
    pairs = []
    for i, tb in enumerate(truth_boxes):
        for j, pb in enumerate(predicted):
            if tb.facade_id != pb.facade_id:
                continue
            v = iou_rect((tb.u_min, tb.v_min, tb.a, tb.b),
                         (pb.u_min, pb.v_min, pb.a, pb.b))
            if v >= iou_threshold:
                pairs.append((v, i, j))
    pairs.sort(key=lambda x: -x[0])
    used_t, used_p, matches = set(), set(), []
    for v, i, j in pairs:
        if i in used_t or j in used_p:
            continue
        used_t.add(i)
        used_p.add(j)
        matches.append((i, j, v))
    ious = np.array([v for _, _, v in matches])
    n_m = len(matches)
    n_mm = sum(1 for i, _, _ in matches if measured[i])
    n_meas = int(measured.sum())
    return DetMetrics(
        n_truth=n_t, n_measured=n_meas, n_predicted=n_p,
        n_matched=n_m, n_matched_measured=n_mm,
        dr_all=n_m / n_t if n_t else float("nan"),
        dr_measured=n_mm / n_meas if n_meas else float("nan"),
        false_rate=(n_p - n_m) / n_p if n_p else 0.0,
        median_iou=float(np.median(ious)) if n_m else float("nan"),
        mean_iou=float(ious.mean()) if n_m else float("nan"),
        matches=matches)


# -- reports ----------------------------------------------------------------

def report_dict(seg: SegMetrics | None, det: DetMetrics | None) -> dict:
    out = {}
    if seg is not None:
        out["segmentation"] = {
            "overall_accuracy": seg.overall_accuracy,
            "mean_f1": seg.mean_f1,
            "mean_iou": seg.mean_iou,
            "per_label": {
                name: {"precision": _nan_none(seg.precision[i]),
                       "recall": _nan_none(seg.recall[i]),
                       "f1": _nan_none(seg.f1[i]),
                       "iou": _nan_none(seg.iou[i])}
                for i, name in enumerate(L.LABELS)},
            "confusion": seg.confusion.tolist(),
        }
    if det is not None:
        out["detection"] = {
            "n_truth": det.n_truth, "n_measured": det.n_measured,
            "n_predicted": det.n_predicted, "n_matched": det.n_matched,
            "detection_rate_all": _nan_none(det.dr_all),
            "detection_rate_measured": _nan_none(det.dr_measured),
            "false_rate": _nan_none(det.false_rate),
            "median_iou": _nan_none(det.median_iou),
            "mean_iou": _nan_none(det.mean_iou),
        }
    return out


def _nan_none(v):
    v = float(v)
    return None if np.isnan(v) else v


def write_report(seg, det, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report_dict(seg, det), f, indent=1)
        f.write("\n")


def format_report(seg, det) -> str:
    lines = []
    if seg is not None:
        lines.append(f"overall accuracy  {seg.overall_accuracy:.4f}")
        lines.append(f"mean F1           {seg.mean_f1:.4f}")
        lines.append(f"mean IoU          {seg.mean_iou:.4f}")
        for i, name in enumerate(L.LABELS):
            if np.isnan(seg.f1[i]):
                continue
            lines.append(f"  {name:<8} P {seg.precision[i]:.3f}  "
                         f"R {seg.recall[i]:.3f}  F1 {seg.f1[i]:.3f}  "
                         f"IoU {seg.iou[i]:.3f}")
    if det is not None:
        lines.append(f"openings: {det.n_matched}/{det.n_truth} detected "
                     f"({det.n_measured} measured, "
                     f"{det.n_matched_measured} of them detected)")
        lines.append(f"detection rate (all)      {det.dr_all:.3f}")
        lines.append(f"detection rate (measured) {det.dr_measured:.3f}")
        lines.append(f"false rate                {det.false_rate:.3f}")
        if det.n_matched:
            lines.append(f"median IoU {det.median_iou:.3f}  "
                         f"mean IoU {det.mean_iou:.3f}")
    return "\n".join(lines)
