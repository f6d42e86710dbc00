"""Per-frame detection records."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import BoundingBox

# frame -> [(object id, box)]
TrackTable = dict[int, list[tuple[int, BoundingBox]]]


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    confidence: float = 1.0
    hash: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class FrameDetections:
    frame: int
    detections: tuple[Detection, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))

    def __len__(self) -> int:
        return len(self.detections)
