"""MOTChallenge-style CSV files and the detection hash sidecar.

Rows are ``frame,id,x,y,w,h,conf,-1,-1,-1``; raw detections carry ``id = -1``.
The sidecar holds ``frame,det_index,hash_hex`` where ``det_index`` counts the
detections of a frame in file order from 0.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable
from pathlib import Path

from .tracking.detections import Detection, FrameDetections, TrackTable
from .tracking.geometry import BoundingBox
from .tracking.phash import hash_to_hex, hex_to_hash

__all__ = ["DataError", "Detection", "FrameDetections", "TrackTable", "format_detections",
           "format_hashes", "format_track_table", "read_detections", "read_hashes", "read_mot",
           "read_track_table"]


class DataError(ValueError):
    """Unreadable or inconsistent input file."""


def _rows(path: str | Path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        row = [c.strip() for c in row]
        if not row or not row[0] or row[0].startswith("#"):
            continue
        yield lineno, row


def read_mot(path: str | Path) -> dict[int, list[tuple[int, BoundingBox, float]]]:
    out: dict[int, list[tuple[int, BoundingBox, float]]] = {}
    for lineno, row in _rows(path):
        if len(row) < 6:
            raise DataError(f"{path}:{lineno}: expected at least 6 fields")
        try:
            frame, oid = int(float(row[0])), int(float(row[1]))
            box = BoundingBox(*(float(c) for c in row[2:6]))
            conf = float(row[6]) if len(row) > 6 else 1.0
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        out.setdefault(frame, []).append((oid, box, conf))
    return out


def read_track_table(path: str | Path) -> TrackTable:
    """Ground truth or tracker output as ``frame -> [(id, box)]``."""
    return {f: [(oid, box) for oid, box, _ in rows] for f, rows in read_mot(path).items()}


def read_hashes(path: str | Path) -> dict[tuple[int, int], int]:
    out = {}
    for lineno, row in _rows(path):
        try:
            out[(int(row[0]), int(row[1]))] = hex_to_hash(row[2])
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return out


def read_detections(path: str | Path,
                    hashes: dict[tuple[int, int], int] | None = None) -> list[FrameDetections]:
    table = read_mot(path)
    frames = []
    for frame in sorted(table):
        dets = []
        for k, (_, box, conf) in enumerate(table[frame]):
            h = None if hashes is None else hashes.get((frame, k))
            try:
                dets.append(Detection(box, min(max(conf, 0.0), 1.0), h))
            except ValueError as exc:
                raise DataError(f"{path}: frame {frame}: {exc}") from None
        frames.append(FrameDetections(frame, tuple(dets)))
    return frames


def _num(x: float) -> str:
    return f"{x:.2f}"


def format_track_table(table: TrackTable) -> str:
    lines = []
    for frame in sorted(table):
        for oid, box in sorted(table[frame], key=lambda r: r[0]):
            lines.append(f"{frame},{oid},{_num(box.x)},{_num(box.y)},{_num(box.w)},{_num(box.h)},1,-1,-1,-1")
    return "\n".join(lines) + ("\n" if lines else "")


def format_detections(frames: Iterable[FrameDetections]) -> str:
    lines = []
    for fd in frames:
        for d in fd.detections:
            b = d.box
            lines.append(f"{fd.frame},-1,{_num(b.x)},{_num(b.y)},{_num(b.w)},{_num(b.h)},"
                         f"{d.confidence:.3f},-1,-1,-1")
    return "\n".join(lines) + ("\n" if lines else "")


def format_hashes(frames: Iterable[FrameDetections]) -> str:
    lines = [f"{fd.frame},{k},{hash_to_hex(d.hash)}"
             for fd in frames for k, d in enumerate(fd.detections) if d.hash is not None]
    return "\n".join(lines) + ("\n" if lines else "")
