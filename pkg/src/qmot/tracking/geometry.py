"""Boxes, overlap and grid location codes."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left corner ``(x, y)`` and extent ``(w, h)`` in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box extents must be positive, got w={self.w}, h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2, self.y + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_xyah(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return cx, cy, self.w / self.h, self.h

    @classmethod
    def from_xyah(cls, cx: float, cy: float, a: float, h: float) -> "BoundingBox":
        w = a * h
        return cls(cx - w / 2, cy - h / 2, w, h)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class LocationCode:
    row: int
    col: int
    grid: tuple[int, int] = (4, 4)

    def __post_init__(self):
        rows, cols = self.grid
        if not (0 <= self.row < rows and 0 <= self.col < cols):
            raise ValueError(f"cell ({self.row}, {self.col}) outside a {rows}x{cols} grid")


def location_code(box: BoundingBox, frame_dims: tuple[float, float],
                  grid: tuple[int, int] = (4, 4)) -> LocationCode:
    """Grid cell of the box centre; centres outside the frame clamp to the border cell.

    ``frame_dims`` is ``(width, height)``, ``grid`` is ``(rows, cols)``.
    """
    width, height = frame_dims
    rows, cols = grid
    cx, cy = box.center
    col = min(max(math.floor(cx / width * cols), 0), cols - 1)
    row = min(max(math.floor(cy / height * rows), 0), rows - 1)
    return LocationCode(row, col, (rows, cols))
