"""Synthetic tracking scenes with ground truth, noisy detections and appearance hashes.

Objects travel at constant velocity along horizontal lanes, alternating
direction from lane to lane. With ``crossing`` the first two objects share a
lane and drive towards each other, so their boxes overlap around the middle of
the sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mot_io import format_detections, format_hashes, format_track_table
from .tracking.detections import Detection, FrameDetections, TrackTable
from .tracking.geometry import BoundingBox
from .tracking.phash import HASH_BITS


@dataclass(frozen=True)
class ScenarioSpec:
    num_objects: int = 5
    frame_count: int = 200
    frame_dims: tuple[float, float] = (640.0, 360.0)
    speed_range: tuple[float, float] = (1.0, 2.5)
    jitter: float = 1.0
    dropout: float = 0.0
    hash_noise_bits: int = 2
    crossing: bool = False

    def __post_init__(self):
        if self.num_objects < 1 or self.frame_count < 1:
            raise ValueError("need at least one object and one frame")
        if self.crossing and self.num_objects < 2:
            raise ValueError("a crossing needs two objects")
        if not 0 <= self.dropout <= 1:
            raise ValueError("dropout must lie in [0, 1]")
        if not 0 <= self.hash_noise_bits <= HASH_BITS:
            raise ValueError(f"hash noise bits must lie in [0, {HASH_BITS}]")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")


@dataclass(frozen=True)
class Scenario:
    ground_truth: TrackTable
    frames: list[FrameDetections]

    def write(self, directory: str | Path) -> None:
        """``gt.txt``, ``det.txt`` and ``hashes.txt`` in ``directory``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "gt.txt").write_text(format_track_table(self.ground_truth))
        (d / "det.txt").write_text(format_detections(self.frames))
        (d / "hashes.txt").write_text(format_hashes(self.frames))


def _flip_bits(h: int, count: int, rng: np.random.Generator) -> int:
    for b in rng.choice(HASH_BITS, size=count, replace=False):
        h ^= 1 << int(b)
    return h


def gen_scenario(spec: ScenarioSpec, seed: int = 0) -> Scenario:
    rng = np.random.default_rng(seed)
    width, height = spec.frame_dims
    n = spec.num_objects
    lanes = n - 1 if spec.crossing else n
    spacing = height / (lanes + 1)
    last = spec.frame_count - 1

    objects = []
    for k in range(n):
        lane = max(k - 1, 0) if spec.crossing else k
        w = float(rng.uniform(30, 50))
        h = float(rng.uniform(0.5, 0.65) * spacing)
        cy = spacing * (lane + 1 + rng.uniform(-0.2, 0.2))
        rightward = (k % 2 == 0)
        if spec.crossing and k < 2:
            # meet mid-sequence; a small vertical offset keeps the boxes distinguishable
            speed = (width - 2 * w) / max(last, 1)
            cy += (-0.1 if k == 0 else 0.1) * h
        else:
            speed = float(rng.uniform(*spec.speed_range))
        span = speed * last
        margin = max(w / 2 + 1, (width - span) / 2 * rng.uniform(0.2, 1.0))
        cx0 = margin if rightward else width - margin
        vx = speed if rightward else -speed
        base_hash = int(rng.integers(0, 2**63)) << 1 | int(rng.integers(0, 2))
        objects.append((w, h, cx0, cy, vx, base_hash))

    gt: TrackTable = {}
    frames = []
    for t in range(spec.frame_count):
        frame = t + 1
        dets = []
        for oid, (w, h, cx0, cy, vx, base_hash) in enumerate(objects, 1):
            cx = cx0 + vx * t
            box = BoundingBox(round(cx - w / 2, 2), round(cy - h / 2, 2), round(w, 2), round(h, 2))
            gt.setdefault(frame, []).append((oid, box))
            jx, jy = rng.normal(0.0, spec.jitter, 2) if spec.jitter else (0.0, 0.0)
            dropped = rng.random() < spec.dropout
            noisy = _flip_bits(base_hash, spec.hash_noise_bits, rng)
            if not dropped:
                dbox = BoundingBox(round(box.x + jx, 2), round(box.y + jy, 2), box.w, box.h)
                dets.append(Detection(dbox, 1.0, noisy))
        order = rng.permutation(len(dets))
        frames.append(FrameDetections(frame, tuple(dets[i] for i in order)))
    return Scenario(gt, frames)
