"""Frame-by-frame tracking by multiplexed QUBO matching.

Each frame, every live track is advanced by its Kalman filter and compared with
the new detections. Pairs whose predicted box overlaps a detection by more
than ``iou_gate`` become edges; each weight model (IoU, appearance hash) puts
its own weights on that shared edge set. The per-model graphs are solved
jointly as one block-diagonal QUBO and the per-block matchings are merged into
one assignment.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from ..ensemble import SolutionSet, integrate_cyclic, integrate_majority
from ..graph import SIMILARITY, Matching, WeightedBipartiteGraph
from ..qubo import QuboProblem, build_multiplexed_qubo, decode, encode
from ..solvers import SolverConfig, run_solver
from .detections import Detection, FrameDetections, TrackTable
from .geometry import BoundingBox, iou, location_code
from .kalman import KalmanBoxFilter
from .phash import hash_similarity

IOU = "iou"
HASH = "hash"
WEIGHT_MODELS = (IOU, HASH)
INTEGRATORS = ("none", "majority", "cyclic")


class TrackingError(ValueError):
    pass


@dataclass
class Track:
    id: int
    mean: np.ndarray
    cov: np.ndarray
    last_hash: int | None = None
    age_since_update: int = 0
    hits: int = 1
    history: list[tuple[int, BoundingBox]] = field(default_factory=list)

    @property
    def kalman_state(self) -> np.ndarray:
        return self.mean.copy()

    @property
    def predicted_box(self) -> BoundingBox:
        return KalmanBoxFilter.box(self.mean)


@dataclass(frozen=True)
class TrackerConfig:
    models: tuple[str, ...] = WEIGHT_MODELS
    integrator: str = "cyclic"
    solver: SolverConfig = SolverConfig()
    max_age: int = 3
    min_hits: int = 2
    iou_gate: float = 0.1
    grid: tuple[int, int] = (4, 4)
    frame_dims: tuple[float, float] = (640.0, 360.0)

    def __post_init__(self):
        models = tuple(self.models)
        if not models or any(m not in WEIGHT_MODELS for m in models):
            raise TrackingError(f"weight models must be a non-empty subset of {WEIGHT_MODELS}")
        object.__setattr__(self, "models", models)
        if self.integrator not in INTEGRATORS:
            raise TrackingError(f"unknown integrator {self.integrator!r}")
        if self.max_age < 0 or self.min_hits < 1:
            raise TrackingError("max_age must be >= 0 and min_hits >= 1")


def predict_tracks(tracks: Sequence[Track], kf: KalmanBoxFilter | None = None,
                   steps: int = 1) -> list[tuple[int, BoundingBox]]:
    """Advance every track ``steps`` frames in place; returns the predicted boxes."""
    kf = kf or KalmanBoxFilter()
    out = []
    for t in tracks:
        for _ in range(steps):
            t.mean, t.cov = kf.predict(t.mean, t.cov)
        out.append((t.id, t.predicted_box))
    return out


def _weight(model: str, overlap: float, track_hash: int | None, det: Detection) -> float:
    if model == HASH and track_hash is not None and det.hash is not None:
        return hash_similarity(track_hash, det.hash)
    # without both hashes the appearance model falls back to overlap
    return overlap


def build_frame_graphs(predicted: Sequence[BoundingBox], track_hashes: Sequence[int | None],
                       dets: FrameDetections, models: Sequence[str] = WEIGHT_MODELS,
                       iou_gate: float = 0.1) -> list[WeightedBipartiteGraph]:
    """One similarity graph per weight model over the same gated edge set.

    Left node ``u`` is the ``u``-th predicted track, right node ``v`` the
    ``v``-th detection.
    """
    if not models:
        raise TrackingError("need at least one weight model")
    overlaps = {}
    for u, box in enumerate(predicted):
        for v, det in enumerate(dets.detections):
            o = iou(box, det.box)
            if o > iou_gate:
                overlaps[(u, v)] = o
    n_left, n_right = len(predicted), len(dets)
    graphs = []
    for model in models:
        edges = tuple((u, v, _weight(model, o, track_hashes[u], dets.detections[v]))
                      for (u, v), o in overlaps.items())
        graphs.append(WeightedBipartiteGraph(n_left, n_right, edges, SIMILARITY))
    return graphs


def warm_start(predicted: Sequence[BoundingBox], dets: FrameDetections, problem: QuboProblem,
               frame_dims: tuple[float, float] = (640.0, 360.0),
               grid: tuple[int, int] = (4, 4)) -> np.ndarray:
    """Set every edge variable whose track and detection share a grid cell.

    Colliding pairs in one cell all stay set; the same bits are set in every block.
    """
    track_cells = [location_code(b, frame_dims, grid) for b in predicted]
    det_cells = [location_code(d.box, frame_dims, grid) for d in dets.detections]
    x = np.zeros(problem.num_vars, dtype=np.uint8)
    for k, (_, u, v) in enumerate(problem.var_index):
        if track_cells[u] == det_cells[v]:
            x[k] = 1
    return x


def merge_blocks(integrator: str, graphs: Sequence[WeightedBipartiteGraph],
                 matchings: Sequence[Matching]) -> Matching:
    if integrator == "none" or len(matchings) == 1:
        return matchings[0]
    sset = SolutionSet(tuple(graphs), tuple(matchings))
    if integrator == "majority":
        return integrate_majority(sset)
    return integrate_cyclic(sset)


@dataclass
class WarmStartStats:
    """Bitwise disagreement between warm starts and the assignments finally chosen."""

    wrong_bits: int = 0
    total_bits: int = 0

    @property
    def error_rate(self) -> float:
        return self.wrong_bits / self.total_bits if self.total_bits else 0.0


def _frame_seed(seed: int, frame: int) -> int:
    return int(np.random.SeedSequence([seed, frame]).generate_state(1)[0])


class Tracker:
    """Track lifecycle over an ordered detection stream.

    Unmatched tracks age by one per frame and are dropped once their age
    exceeds ``max_age``; unmatched detections open new tracks. A track counts
    as confirmed once it has been matched ``min_hits`` times in total.
    """

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.kf = KalmanBoxFilter()
        self.tracks: list[Track] = []
        self.finished: list[Track] = []
        self.last_frame: int | None = None
        self.next_id = 1
        self.warm_stats = WarmStartStats()

    def _new_track(self, frame: int, det: Detection) -> Track:
        mean, cov = self.kf.initiate(det.box)
        t = Track(self.next_id, mean, cov, det.hash, history=[(frame, det.box)])
        self.next_id += 1
        return t

    def _associate(self, dets: FrameDetections) -> Matching:
        cfg = self.config
        predicted = [t.predicted_box for t in self.tracks]
        graphs = build_frame_graphs(predicted, [t.last_hash for t in self.tracks], dets,
                                    cfg.models, cfg.iou_gate)
        if graphs[0].num_edges == 0:
            return Matching(frozenset())
        problem = build_multiplexed_qubo(graphs, cfg.solver.lam)
        solver = replace(cfg.solver, seed=_frame_seed(cfg.solver.seed, dets.frame))
        initial = None
        if solver.solver == "rsa":
            initial = warm_start(predicted, dets, problem, cfg.frame_dims, cfg.grid)
        result = run_solver(problem, solver, initial)
        blocks = [b.matching() for b in decode(problem, result.best_state)]
        chosen = merge_blocks(cfg.integrator, graphs, blocks)
        if initial is not None:
            target = encode(problem, [chosen.edges] * len(graphs))
            self.warm_stats.wrong_bits += int(np.sum(initial != target))
            self.warm_stats.total_bits += problem.num_vars
        return chosen

    def step(self, dets: FrameDetections) -> list[tuple[int, int]]:
        """Consume one frame; returns ``(track_id, detection_index)`` pairs."""
        if self.last_frame is not None and dets.frame <= self.last_frame:
            raise TrackingError(f"frame {dets.frame} arrived after frame {self.last_frame}")
        gap = 1 if self.last_frame is None else dets.frame - self.last_frame
        self.last_frame = dets.frame
        predict_tracks(self.tracks, self.kf, gap)

        chosen = self._associate(dets) if self.tracks and len(dets) else Matching(frozenset())
        assigned_tracks = set()
        assigned_dets = set()
        pairs = []
        for u, v in chosen.sorted_edges():
            t, det = self.tracks[u], dets.detections[v]
            t.mean, t.cov = self.kf.update(t.mean, t.cov, det.box)
            if det.hash is not None:
                t.last_hash = det.hash
            t.age_since_update = 0
            t.hits += 1
            t.history.append((dets.frame, det.box))
            assigned_tracks.add(u)
            assigned_dets.add(v)
            pairs.append((t.id, v))

        survivors = []
        for u, t in enumerate(self.tracks):
            if u not in assigned_tracks:
                t.age_since_update += gap
                if t.age_since_update > self.config.max_age:
                    self.finished.append(t)
                    continue
            survivors.append(t)
        for v, det in enumerate(dets.detections):
            if v not in assigned_dets:
                t = self._new_track(dets.frame, det)
                survivors.append(t)
                pairs.append((t.id, v))
        self.tracks = survivors
        return sorted(pairs)

    def all_tracks(self) -> list[Track]:
        return sorted(self.finished + self.tracks, key=lambda t: t.id)

    def confirmed(self) -> list[Track]:
        return [t for t in self.all_tracks() if t.hits >= self.config.min_hits]

    def output(self) -> TrackTable:
        """Histories of confirmed tracks as ``frame -> [(track id, box)]``."""
        table: TrackTable = {}
        for t in self.confirmed():
            for frame, box in t.history:
                table.setdefault(frame, []).append((t.id, box))
        return {f: sorted(rows, key=lambda r: r[0]) for f, rows in sorted(table.items())}


@dataclass
class TrackingRun:
    table: TrackTable
    num_tracks: int
    warm_start: WarmStartStats
    assignments: dict[int, list[tuple[int, int]]]


def run_tracker(frames: Iterable[FrameDetections], config: TrackerConfig | None = None) -> TrackingRun:
    tracker = Tracker(config)
    assignments = {fd.frame: tracker.step(fd) for fd in frames}
    return TrackingRun(tracker.output(), len(tracker.confirmed()), tracker.warm_stats, assignments)
