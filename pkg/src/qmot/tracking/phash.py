"""64-bit DCT perceptual hash and the hash similarity weight."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import scipy.fft
from PIL import Image

from .geometry import BoundingBox

HASH_BITS = 64
_MASK = (1 << HASH_BITS) - 1


def perceptual_hash(patch) -> int:
    """pHash of a grayscale patch.

    The patch is resampled to 32x32, transformed with an orthonormal 2-D DCT-II,
    and the 8x8 block of lowest non-DC frequencies (rows and columns 1..8) is
    thresholded at its median. Bits are packed row-major, most significant
    first. Coefficients equal to the median give 0 bits, so a flat patch hashes
    to 0.
    """
    pixels = np.asarray(patch, dtype=np.float32)
    if pixels.ndim != 2 or min(pixels.shape) < 8:
        raise ValueError(f"need a 2-D patch of at least 8x8 pixels, got shape {pixels.shape}")
    small = Image.fromarray(pixels).resize((32, 32), Image.Resampling.LANCZOS)
    coeffs = scipy.fft.dctn(np.asarray(small, dtype=np.float64), type=2, norm="ortho")
    low = coeffs[1:9, 1:9].copy()
    low[np.abs(low) < 1e-9 * max(1.0, abs(coeffs[0, 0]))] = 0.0
    bits = (low > np.median(low)).ravel()
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def hamming(h1: int, h2: int) -> int:
    return ((h1 ^ h2) & _MASK).bit_count()


def hash_similarity(h1: int, h2: int) -> float:
    """``exp(-hamming / 32)``: 1 for equal hashes, e^-2 at the maximum distance."""
    return math.exp(-hamming(h1, h2) / 32)


def hash_to_hex(h: int) -> str:
    return f"{h & _MASK:016x}"


def hex_to_hash(text: str) -> int:
    value = int(text, 16)
    if value > _MASK:
        raise ValueError(f"{text!r} is wider than {HASH_BITS} bits")
    return value


def crop_hash(image: np.ndarray, box: BoundingBox) -> int:
    """Hash of ``box`` cut out of a grayscale frame, clipped to the frame."""
    height, width = image.shape[:2]
    x0 = int(np.clip(np.floor(box.x), 0, width - 1))
    y0 = int(np.clip(np.floor(box.y), 0, height - 1))
    x1 = int(np.clip(np.ceil(box.x + box.w), x0 + 1, width))
    y1 = int(np.clip(np.ceil(box.y + box.h), y0 + 1, height))
    patch = image[y0:y1, x0:x1]
    if min(patch.shape) < 8:
        patch = np.asarray(Image.fromarray(patch.astype(np.float32)).resize(
            (max(8, patch.shape[1]), max(8, patch.shape[0])), Image.Resampling.BILINEAR))
    return perceptual_hash(patch)


def load_gray(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float32)
