"""Lossless keypoint segment codec.

Chain per segment: intra prediction for the first frame (each coordinate
predicted from the same axis of the previous keypoint, the first keypoint from
128), inter prediction for the rest (same coordinate of the previous frame),
zigzag mapping, zero-order exp-Golomb codes, and one adaptive binary range
coder over the concatenated codewords.

Wire format: ``varint(frame_count) varint(K) body terminator`` with unsigned
LEB128 varints; ``body terminator`` is the range-coder payload.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .arith import AdaptiveBinaryModel, RangeDecoder, RangeEncoder
from .bitio import decode_varint, encode_varint, exp_golomb_codeword, exp_golomb_decode
from .errors import CorruptStreamError, StructuralError
from .keypoints import validate_frame

INTRA_SEED = 128


class PredictionMode(enum.Enum):
    INTRA = "intra"
    INTER = "inter"


@dataclass(frozen=True)
class ResidualFrame:
    residuals: np.ndarray  # int16, length 2K, values in [-255, 255]
    mode: PredictionMode


def predict_intra(frame) -> ResidualFrame:
    f = validate_frame(frame).astype(np.int16)
    if f.ndim != 1:
        raise StructuralError("predict_intra takes a single frame")
    pred = np.empty_like(f)
    pred[:2] = INTRA_SEED
    pred[2:] = f[:-2]
    return ResidualFrame(f - pred, PredictionMode.INTRA)


def predict_inter(prev, cur) -> ResidualFrame:
    p = validate_frame(prev).astype(np.int16)
    c = validate_frame(cur).astype(np.int16)
    if p.shape != c.shape or p.ndim != 1:
        raise StructuralError(f"frame shapes differ: {p.shape} vs {c.shape}")
    return ResidualFrame(c - p, PredictionMode.INTER)


def reconstruct(residual: ResidualFrame, prev=None) -> np.ndarray:
    """Invert :func:`predict_intra` / :func:`predict_inter`."""
    r = np.asarray(residual.residuals, dtype=np.int32)
    if residual.mode is PredictionMode.INTER:
        if prev is None:
            raise StructuralError("inter reconstruction needs the previous frame")
        out = validate_frame(prev, len(r) // 2).astype(np.int32) + r
    else:
        out = np.empty_like(r)
        out[0:2] = INTRA_SEED + r[0:2]
        for i in range(2, len(r)):
            out[i] = out[i - 2] + r[i]
    if out.min() < 0 or out.max() > 255:
        raise CorruptStreamError("reconstructed coordinate outside [0, 255]")
    return out.astype(np.uint8)


def segment_residuals(frames: np.ndarray) -> np.ndarray:
    """Stack of residuals, shape ``(F, 2K)``: row 0 intra, the rest inter."""
    f = frames.astype(np.int16)
    res = np.empty_like(f)
    res[0] = predict_intra(frames[0]).residuals
    res[1:] = f[1:] - f[:-1]
    return res


def _zigzag_array(r: np.ndarray) -> np.ndarray:
    r = r.astype(np.int32)
    return np.where(r >= 0, 2 * r, -2 * r - 1)


def segment_bitstring(frames) -> str:
    """The exp-Golomb bit string that the range coder compresses."""
    arr = _as_segment(frames)
    codes = _zigzag_array(segment_residuals(arr)).ravel().tolist()
    return "".join(exp_golomb_codeword(n) for n in codes)


def _as_segment(frames) -> np.ndarray:
    arr = validate_frame(np.asarray(frames))
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise StructuralError("a segment is a non-empty (F, 2K) stack of keypoint frames")
    return arr


def encode_segment(frames, model: AdaptiveBinaryModel | None = None) -> bytes:
    arr = _as_segment(frames)
    enc = RangeEncoder(model)
    enc.encode_bits(segment_bitstring(arr))
    return encode_varint(arr.shape[0]) + encode_varint(arr.shape[1] // 2) + enc.finish()


def decode_segment(
    payload: bytes,
    frame_count: int | None = None,
    num_keypoints: int | None = None,
    model: AdaptiveBinaryModel | None = None,
) -> np.ndarray:
    """Decode a segment payload into a ``(F, 2K)`` uint8 array.

    ``frame_count`` and ``num_keypoints``, when given, must agree with the
    values carried in the payload.
    """
    f, pos = decode_varint(payload, 0)
    k, pos = decode_varint(payload, pos)
    if frame_count is not None and f != frame_count:
        raise CorruptStreamError(f"payload holds {f} frames, expected {frame_count}")
    if num_keypoints is not None and k != num_keypoints:
        raise CorruptStreamError(f"payload holds K={k}, expected {num_keypoints}")
    if f < 1 or k < 1:
        raise CorruptStreamError("segment payload declares an empty segment")
    dec = RangeDecoder(payload[pos:], model)
    width = 2 * k
    codes = [exp_golomb_decode(dec) for _ in range(f * width)]
    dec.finish()
    u = np.asarray(codes, dtype=np.int64)
    if u.max(initial=0) > 510:
        raise CorruptStreamError("residual magnitude exceeds 255")
    res = np.where(u % 2 == 0, u // 2, -(u + 1) // 2).reshape(f, width)
    out = np.empty((f, width), dtype=np.int64)
    out[0, 0:2] = INTRA_SEED + res[0, 0:2]
    for i in range(2, width):
        out[0, i] = out[0, i - 2] + res[0, i]
    out[1:] = out[0] + np.cumsum(res[1:], axis=0)
    if out.min() < 0 or out.max() > 255:
        raise CorruptStreamError("reconstructed coordinate outside [0, 255]")
    return out.astype(np.uint8)
