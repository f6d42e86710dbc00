"""Tracking and detection quality against ground truth.

Ground truth and tracker output share one layout: ``frame -> [(id, box)]``.
A ground-truth box and a hypothesis box correspond when their IoU is at least
``iou_threshold``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from collections.abc import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .tracking.detections import TrackTable
from .tracking.geometry import BoundingBox, iou

DEFAULT_IOU_THRESHOLD = 0.5

GroundTruth = TrackTable


class MetricError(ValueError):
    pass


def _check(gt: TrackTable, iou_threshold: float) -> None:
    if not 0 < iou_threshold < 1:
        raise MetricError("IoU threshold must lie in (0, 1)")
    if not any(gt.values()):
        raise MetricError("ground truth is empty")


def _max_overlap_pairs(a: Sequence[BoundingBox], b: Sequence[BoundingBox],
                       iou_threshold: float) -> list[tuple[int, int]]:
    """Index pairs of a maximum total-IoU matching restricted to IoU >= threshold."""
    if not a or not b:
        return []
    overlap = np.array([[iou(x, y) for y in b] for x in a])
    allowed = overlap >= iou_threshold
    # forbidden pairs cost more than any set of allowed ones could save
    cost = np.where(allowed, 1.0 - overlap, len(a) + len(b) + 1.0)
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if allowed[i, j]]


@dataclass(frozen=True)
class MotaResult:
    mota: float
    fp: int
    fn: int
    idsw: int
    matches: int
    gt_total: int


def compute_mota(gt: TrackTable, hyp: TrackTable,
                 iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> MotaResult:
    """CLEAR-MOT accuracy.

    Each frame first keeps last frame's correspondences that still overlap,
    then matches the remaining boxes by maximum total IoU. A ground-truth
    object matched to a different hypothesis than at its previous match is an
    identity switch.
    """
    _check(gt, iou_threshold)
    fp = fn = idsw = matches = total = 0
    current: dict[int, int] = {}
    last_match: dict[int, int] = {}
    for frame in sorted(set(gt) | set(hyp)):
        g_rows = dict(gt.get(frame, []))
        h_rows = dict(hyp.get(frame, []))
        total += len(g_rows)
        pairs: dict[int, int] = {}
        for g, h in current.items():
            if g in g_rows and h in h_rows and iou(g_rows[g], h_rows[h]) >= iou_threshold:
                pairs[g] = h
        free_g = [g for g in sorted(g_rows) if g not in pairs]
        used_h = set(pairs.values())
        free_h = [h for h in sorted(h_rows) if h not in used_h]
        for i, j in _max_overlap_pairs([g_rows[g] for g in free_g], [h_rows[h] for h in free_h],
                                       iou_threshold):
            g, h = free_g[i], free_h[j]
            if g in last_match and last_match[g] != h:
                idsw += 1
            pairs[g] = h
        for g, h in pairs.items():
            last_match[g] = h
        current = pairs
        matches += len(pairs)
        fn += len(g_rows) - len(pairs)
        fp += len(h_rows) - len(pairs)
    mota = 1.0 - (fp + fn + idsw) / total
    return MotaResult(mota, fp, fn, idsw, matches, total)


@dataclass(frozen=True)
class IdResult:
    idf1: float
    idtp: int
    idfp: int
    idfn: int

    @property
    def id_precision(self) -> float:
        return self.idtp / (self.idtp + self.idfp) if self.idtp + self.idfp else 0.0

    @property
    def id_recall(self) -> float:
        return self.idtp / (self.idtp + self.idfn) if self.idtp + self.idfn else 0.0


def trajectory_overlaps(gt: TrackTable, hyp: TrackTable,
                        iou_threshold: float = DEFAULT_IOU_THRESHOLD):
    """Per (ground-truth id, hypothesis id) count of frames where the two correspond."""
    gt_ids = sorted({g for rows in gt.values() for g, _ in rows})
    hyp_ids = sorted({h for rows in hyp.values() for h, _ in rows})
    gi = {g: k for k, g in enumerate(gt_ids)}
    hi = {h: k for k, h in enumerate(hyp_ids)}
    counts = np.zeros((len(gt_ids), len(hyp_ids)), dtype=np.int64)
    for frame, g_rows in gt.items():
        for g, gb in g_rows:
            for h, hb in hyp.get(frame, []):
                if iou(gb, hb) >= iou_threshold:
                    counts[gi[g], hi[h]] += 1
    return gt_ids, hyp_ids, counts


def compute_idf1(gt: TrackTable, hyp: TrackTable,
                 iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> IdResult:
    """Identity F1 under the best one-to-one pairing of whole trajectories."""
    _check(gt, iou_threshold)
    gt_total = sum(len(r) for r in gt.values())
    hyp_total = sum(len(r) for r in hyp.values())
    _, _, counts = trajectory_overlaps(gt, hyp, iou_threshold)
    idtp = 0
    if counts.size:
        rows, cols = linear_sum_assignment(counts, maximize=True)
        idtp = int(counts[rows, cols].sum())
    idfp, idfn = hyp_total - idtp, gt_total - idtp
    return IdResult(2 * idtp / (gt_total + hyp_total), idtp, idfp, idfn)


def compute_ape(nt: int, cn: int) -> float:
    """Relative error of the tracked-object count ``nt`` against the true count ``cn``."""
    if cn <= 0:
        raise MetricError("true object count must be positive")
    if nt < 0:
        raise MetricError("tracked object count must be non-negative")
    return abs(nt - cn) / cn


def compute_detection_prf(gt: TrackTable, detections: dict[int, Sequence[BoundingBox]],
                          iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> tuple[float, float, float]:
    """Precision, recall and F1 of per-frame detections; empty ratios are reported as 0."""
    if not 0 < iou_threshold < 1:
        raise MetricError("IoU threshold must lie in (0, 1)")
    tp = n_gt = n_det = 0
    for frame in set(gt) | set(detections):
        g = [b for _, b in gt.get(frame, [])]
        d = list(detections.get(frame, []))
        n_gt += len(g)
        n_det += len(d)
        tp += len(_max_overlap_pairs(g, d, iou_threshold))
    precision = tp / n_det if n_det else 0.0
    recall = tp / n_gt if n_gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class MetricReport:
    mota: float
    idf1: float
    idsw: int
    ape: float
    nt: int
    cn: int
    fp: int
    fn: int
    gt_total: int
    idtp: int
    idfp: int
    idfn: int
    id_precision: float
    id_recall: float

    def _cells(self) -> list[tuple[str, str]]:
        return [(k, f"{v:.6f}" if isinstance(v, float) else str(v)) for k, v in asdict(self).items()]

    def to_text(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self._cells())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cells = self._cells()
        writer.writerow([k for k, _ in cells])
        writer.writerow([v for _, v in cells])
        return buf.getvalue()


def evaluate(gt: TrackTable, hyp: TrackTable, nt: int | None = None,
             iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> MetricReport:
    """All tracking metrics; ``nt`` defaults to the number of distinct hypothesis ids."""
    mot = compute_mota(gt, hyp, iou_threshold)
    ids = compute_idf1(gt, hyp, iou_threshold)
    cn = len({g for rows in gt.values() for g, _ in rows})
    if nt is None:
        nt = len({h for rows in hyp.values() for h, _ in rows})
    return MetricReport(mot.mota, ids.idf1, mot.idsw, compute_ape(nt, cn), nt, cn, mot.fp, mot.fn,
                        mot.gt_total, ids.idtp, ids.idfp, ids.idfn, ids.id_precision, ids.id_recall)
