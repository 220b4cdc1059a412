"""Keypoint representation: normalized float coordinates <-> 8-bit wire form.

Normalized keypoints are arrays of shape ``(..., K, 2)`` holding ``(x, y)``
pairs in ``[-1, 1]``. A keypoint frame is the flat ``uint8`` array
``x0, y0, x1, y1, ...`` of length ``2K``; a stack of frames has shape
``(F, 2K)``.
"""

from __future__ import annotations

import io
import os
from typing import Iterable

import numpy as np

from .errors import DomainError, ParseError, StructuralError

DEFAULT_NUM_KEYPOINTS = 10
LEVELS = 255
# Half a quantization step in the [-1, 1] domain.
HALF_STEP = 1.0 / LEVELS


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def validate_normalized(kps) -> np.ndarray:
    arr = np.asarray(kps, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[-1] != 2:
        raise StructuralError(f"normalized keypoints need shape (..., K, 2), got {arr.shape}")
    if arr.shape[-2] < 1:
        raise StructuralError("at least one keypoint is required")
    if not np.all(np.isfinite(arr)):
        raise DomainError("keypoint coordinates must be finite")
    if arr.size and (arr.min() < -1.0 or arr.max() > 1.0):
        raise DomainError(
            f"keypoint coordinates must lie in [-1, 1], got range [{arr.min()}, {arr.max()}]"
        )
    return arr


def validate_frame(frame, num_keypoints: int | None = None) -> np.ndarray:
    """Return ``frame`` as a ``uint8`` array of shape ``(..., 2K)``."""
    arr = np.asarray(frame)
    if arr.ndim < 1 or arr.shape[-1] == 0 or arr.shape[-1] % 2:
        raise StructuralError(f"keypoint frames need an even, non-zero length, got {arr.shape}")
    if num_keypoints is not None and arr.shape[-1] != 2 * num_keypoints:
        raise StructuralError(f"expected {2 * num_keypoints} coordinates, got {arr.shape[-1]}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise StructuralError(f"keypoint frames hold integers, got dtype {arr.dtype}")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise DomainError("keypoint frame values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def quantize(kps) -> np.ndarray:
    """Map ``(..., K, 2)`` coordinates in [-1, 1] to ``(..., 2K)`` bytes.

    ``v -> round((v + 1) / 2 * 255)`` with ties rounded away from zero, so
    ``-1 -> 0``, ``0 -> 128`` and ``1 -> 255``. Out-of-range input raises
    :class:`DomainError`; clamp deliberately before calling if needed.
    """
    arr = validate_normalized(kps)
    q = _round_half_away((arr + 1.0) / 2.0 * LEVELS)
    q = np.clip(q, 0, LEVELS).astype(np.uint8)
    return q.reshape(arr.shape[:-2] + (2 * arr.shape[-2],))


def dequantize(frame) -> np.ndarray:
    """Inverse of :func:`quantize` up to half a step; returns ``(..., K, 2)``."""
    q = validate_frame(frame).astype(np.float64)
    v = q / LEVELS * 2.0 - 1.0
    return v.reshape(q.shape[:-1] + (q.shape[-1] // 2, 2))


def simulate_quantization_noise(
    kps, rng: np.random.Generator, amplitude: float = HALF_STEP
) -> np.ndarray:
    """Add independent uniform noise in ``[-amplitude, amplitude]`` and clamp to [-1, 1].

    This is the training-time stand-in for quantization loss. ``amplitude=0``
    returns the input unchanged.
    """
    arr = validate_normalized(kps)
    if amplitude < 0:
        raise DomainError("noise amplitude must be non-negative")
    if amplitude == 0:
        return arr.copy()
    noise = rng.uniform(-amplitude, amplitude, size=arr.shape)
    return np.clip(arr + noise, -1.0, 1.0)


# --- sidecar text format -------------------------------------------------


def parse_sidecar(text: str) -> np.ndarray:
    """Parse sidecar text into normalized keypoints of shape ``(F, K, 2)``.

    One frame per line, ``2K`` comma-separated reals in display order. Blank
    lines and ``#`` comments are ignored.
    """
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values = [float(tok) for tok in line.split(",")]
        except ValueError as exc:
            raise ParseError(f"sidecar line {lineno}: {exc}") from None
        if not values or len(values) % 2:
            raise ParseError(f"sidecar line {lineno}: expected an even number of values")
        if rows and len(values) != len(rows[0]):
            raise ParseError(
                f"sidecar line {lineno}: {len(values)} values, previous lines had {len(rows[0])}"
            )
        rows.append(values)
    if not rows:
        raise ParseError("sidecar contains no frames")
    arr = np.asarray(rows, dtype=np.float64)
    return arr.reshape(len(rows), arr.shape[1] // 2, 2)


def read_sidecar(path: str | os.PathLike) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return parse_sidecar(fh.read())


def format_sidecar(kps: Iterable) -> str:
    arr = np.asarray(kps, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    buf = io.StringIO()
    for frame in arr.reshape(arr.shape[0], -1):
        buf.write(",".join(repr(float(v)) for v in frame))
        buf.write("\n")
    return buf.getvalue()


def write_sidecar(path: str | os.PathLike, kps) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_sidecar(kps))
