"""Scoring of estimated radio maps: weighted MSE and detection AP.

The MSE operates on the unit encoding scale so that obstacle cells (which
have no finite dBm value) compare as 1 against the estimate. Obstacle
detection converts the segmented mask into 4-connected components and
scores them against ground-truth components by mask IoU with greedy
one-to-one matching, pooled over scenes into a single average-precision
number (area under the all-point precision-recall curve).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .envmap import EncodeParams, segment

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


@dataclass(frozen=True)
class Detection:
    """One predicted obstacle: a 4-connected set of cells with a confidence."""

    cells: frozenset[tuple[int, int]]
    score: float

    def __post_init__(self):
        if not self.cells:
            raise ValueError("detection must cover at least one cell")


@dataclass
class SceneEval:
    scene_id: str
    mse: float
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class EvalReport:
    weighted_mse: float
    ap: float
    iou_threshold: float
    per_scene: list[SceneEval] = field(default_factory=list)

    @property
    def n_scenes(self) -> int:
        return len(self.per_scene)

    def to_json(self) -> str:
        doc = {
            "weighted_mse": self.weighted_mse,
            "ap": self.ap,
            "n_scenes": self.n_scenes,
            "iou_threshold": self.iou_threshold,
            "per_scene": [
                {"id": s.scene_id, "mse": s.mse, "tp": s.tp, "fp": s.fp, "fn": s.fn}
                for s in self.per_scene
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def weighted_mse(truth_unit: np.ndarray, estimate_unit: np.ndarray, weights: np.ndarray) -> float:
    """Mean over all cells of w^2 * (truth - estimate)^2, unit scale."""
    truth_unit = np.asarray(truth_unit, dtype=float)
    estimate_unit = np.asarray(estimate_unit, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if truth_unit.shape != estimate_unit.shape or truth_unit.shape != weights.shape:
        raise ValueError("truth, estimate, and weights must share one shape")
    diff = truth_unit - estimate_unit
    return float(np.mean(np.square(weights) * np.square(diff)))


def mask_components(mask: np.ndarray) -> list[frozenset[tuple[int, int]]]:
    """4-connected components of a boolean mask, as cell-index sets."""
    labels, n = ndimage.label(mask, structure=FOUR_CONNECTED)
    comps = []
    for k in range(1, n + 1):
        rows, cols = np.nonzero(labels == k)
        comps.append(frozenset(zip(rows.tolist(), cols.tolist())))
    return comps


def extract_detections(compressed: np.ndarray, enc: EncodeParams) -> list[Detection]:
    """Segment the compressed map and score each component by its mean value."""
    mask = segment(compressed, enc)
    detections = []
    for cells in mask_components(mask):
        idx = tuple(np.array(sorted(cells)).T)
        score = float(np.mean(compressed[idx]))
        detections.append(Detection(cells=cells, score=score))
    return detections


def _mask_iou(a: frozenset, b: frozenset) -> float:
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / len(a | b)


def average_precision(detections_per_scene: list[list[Detection]],
                      gt_per_scene: list[list[frozenset]],
                      iou_threshold: float = 0.5):
    """Pooled AP with greedy score-ordered matching.

    Returns (ap, per_scene_counts) where per_scene_counts is a list of
    (tp, fp, fn) triples aligned with the inputs. With no ground truth at
    all, AP is 1.0 when there are also no detections (vacuous) else 0.0.
    """
    if not (0.0 < iou_threshold < 1.0):
        raise ValueError("iou_threshold must be in (0, 1)")
    if len(detections_per_scene) != len(gt_per_scene):
        raise ValueError("detections and ground truth must cover the same scenes")

    pool = []
    for scene_idx, dets in enumerate(detections_per_scene):
        for det_idx, det in enumerate(dets):
            pool.append((-det.score, scene_idx, det_idx, det))
    pool.sort(key=lambda item: item[:3])

    total_gt = sum(len(g) for g in gt_per_scene)
    matched: list[set[int]] = [set() for _ in gt_per_scene]
    tp_flags = np.zeros(len(pool), dtype=bool)
    tp_scene = [0] * len(gt_per_scene)
    fp_scene = [0] * len(gt_per_scene)

    for rank, (_, scene_idx, _, det) in enumerate(pool):
        best_iou = 0.0
        best_gt = -1
        for gt_idx, gt_cells in enumerate(gt_per_scene[scene_idx]):
            if gt_idx in matched[scene_idx]:
                continue
            iou = _mask_iou(det.cells, gt_cells)
            if iou > best_iou:
                best_iou = iou
                best_gt = gt_idx
        if best_gt >= 0 and best_iou >= iou_threshold:
            matched[scene_idx].add(best_gt)
            tp_flags[rank] = True
            tp_scene[scene_idx] += 1
        else:
            fp_scene[scene_idx] += 1

    fn_scene = [len(g) - t for g, t in zip(gt_per_scene, tp_scene)]
    counts = list(zip(tp_scene, fp_scene, fn_scene))

    if total_gt == 0:
        return (1.0 if not pool else 0.0), counts
    if not pool:
        return 0.0, counts

    tp_cum = np.cumsum(tp_flags)
    fp_cum = np.cumsum(~tp_flags)
    recall = tp_cum / total_gt
    precision = tp_cum / (tp_cum + fp_cum)

    # All-point interpolation: integrate the running-max precision envelope.
    env = np.maximum.accumulate(precision[::-1])[::-1]
    recall_prev = np.concatenate([[0.0], recall[:-1]])
    ap = float(np.sum((recall - recall_prev) * env))
    return ap, counts
