"""The ``.hkpc`` hybrid container: key-frame payloads plus per-GOP keypoint payloads.

Layout, all integers little-endian::

    header   magic "HKPC", version u8, width u16, height u16, fps_num u16,
             fps_den u16, interval u16, K u8, total_frames u32, keycodec u8
    index    n_key u32, n_kp u32, then n_key + n_kp entries of
             (offset u32, length u32, crc32 u32); offsets are absolute
    payloads key payloads, then keypoint payloads, in index order

Gaps between payloads are allowed only as zero padding (``mux`` never writes
any).
"""

from __future__ import annotations

import enum
import math
import struct
import zlib
from dataclasses import dataclass
from typing import Sequence

from .errors import CorruptStreamError, DomainError, StructuralError, UnsupportedFormatError

MAGIC = b"HKPC"
VERSION = 1
HEADER_STRUCT = struct.Struct("<4sBHHHHHBIB")
INDEX_COUNTS = struct.Struct("<II")
INDEX_ENTRY = struct.Struct("<III")
HEADER_SIZE = HEADER_STRUCT.size


class KeyCodec(enum.IntEnum):
    STORE = 0
    EXTERNAL = 1


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    fps_num: int
    fps_den: int
    interval: int
    num_keypoints: int
    total_frames: int
    keyframe_codec: KeyCodec = KeyCodec.STORE
    version: int = VERSION

    def __post_init__(self) -> None:
        if self.interval < 2:
            raise DomainError(f"sampling interval must be >= 2, got {self.interval}")
        if self.num_keypoints < 1:
            raise DomainError("K must be >= 1")
        if self.total_frames < 1:
            raise DomainError("a stream needs at least one frame")
        if self.width < 1 or self.height < 1:
            raise DomainError("frame dimensions must be positive")
        if self.fps_num < 1 or self.fps_den < 1:
            raise DomainError("frame rate must be a positive rational")

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den

    @property
    def num_key_frames(self) -> int:
        return math.ceil(self.total_frames / self.interval)

    def pack(self) -> bytes:
        try:
            return HEADER_STRUCT.pack(
                MAGIC, self.version, self.width, self.height, self.fps_num,
                self.fps_den, self.interval, self.num_keypoints,
                self.total_frames, int(self.keyframe_codec),
            )
        except struct.error as exc:
            raise DomainError(f"header field out of range: {exc}") from None

    @classmethod
    def unpack(cls, data: bytes) -> "StreamHeader":
        if len(data) < HEADER_SIZE:
            if data[:4] != MAGIC[: len(data[:4])]:
                raise UnsupportedFormatError("not an HKPC container (bad magic)")
            raise CorruptStreamError("file shorter than the container header")
        (magic, version, width, height, fps_num, fps_den, interval, k, total,
         codec) = HEADER_STRUCT.unpack_from(data, 0)
        if magic != MAGIC:
            raise UnsupportedFormatError("not an HKPC container (bad magic)")
        if version != VERSION:
            raise UnsupportedFormatError(f"unsupported container version {version}")
        try:
            return cls(width, height, fps_num, fps_den, interval, k, total,
                       KeyCodec(codec), version)
        except (ValueError, DomainError) as exc:
            raise CorruptStreamError(f"invalid header: {exc}") from None


@dataclass(frozen=True)
class FrameRole:
    index: int
    is_key: bool
    key_ordinal: int | None = None
    prev_key: int | None = None
    next_key: int | None = None


def classify_frame(index: int, interval: int, total_frames: int) -> FrameRole:
    if not 0 <= index < total_frames:
        raise DomainError(f"frame index {index} outside [0, {total_frames})")
    if interval < 1:
        raise DomainError("interval must be positive")
    if index % interval == 0:
        return FrameRole(index, True, key_ordinal=index // interval)
    prev = interval * (index // interval)
    nxt = prev + interval
    return FrameRole(index, False, prev_key=prev, next_key=nxt if nxt < total_frames else None)


def split_stream(total_frames: int, interval: int) -> tuple[list[int], list[list[int]]]:
    """Key indices and the non-empty runs of non-key frames after each key."""
    if total_frames < 1 or interval < 1:
        raise DomainError("total_frames and interval must be positive")
    keys = list(range(0, total_frames, interval))
    segments = []
    for k in keys:
        seg = list(range(k + 1, min(k + interval, total_frames)))
        if seg:
            segments.append(seg)
    return keys, segments


def index_size(n_key: int, n_kp: int) -> int:
    return INDEX_COUNTS.size + (n_key + n_kp) * INDEX_ENTRY.size


def mux(header: StreamHeader, key_payloads: Sequence[bytes], kp_payloads: Sequence[bytes]) -> bytes:
    """Serialize a container. Deterministic: equal inputs give equal bytes."""
    if len(key_payloads) < 1:
        raise StructuralError("at least one key-frame payload is required")
    _, segments = split_stream(header.total_frames, header.interval)
    if len(kp_payloads) != len(segments):
        raise StructuralError(
            f"header implies {len(segments)} keypoint segments, got {len(kp_payloads)} payloads"
        )
    payloads = [bytes(p) for p in key_payloads] + [bytes(p) for p in kp_payloads]
    out = bytearray(header.pack())
    out += INDEX_COUNTS.pack(len(key_payloads), len(kp_payloads))
    offset = HEADER_SIZE + index_size(len(key_payloads), len(kp_payloads))
    for p in payloads:
        out += INDEX_ENTRY.pack(offset, len(p), zlib.crc32(p))
        offset += len(p)
    for p in payloads:
        out += p
    return bytes(out)


def demux(data: bytes) -> tuple[StreamHeader, list[bytes], list[bytes]]:
    """Inverse of :func:`mux`, validating structure and payload checksums."""
    data = bytes(data)
    header = StreamHeader.unpack(data)
    pos = HEADER_SIZE
    if len(data) < pos + INDEX_COUNTS.size:
        raise CorruptStreamError("file truncated inside the payload index")
    n_key, n_kp = INDEX_COUNTS.unpack_from(data, pos)
    pos += INDEX_COUNTS.size
    _, segments = split_stream(header.total_frames, header.interval)
    if n_key < 1 or n_kp != len(segments):
        raise CorruptStreamError(
            f"index lists {n_key} key and {n_kp} keypoint payloads; header implies "
            f"{len(segments)} keypoint segments"
        )
    end_of_index = pos + (n_key + n_kp) * INDEX_ENTRY.size
    if len(data) < end_of_index:
        raise CorruptStreamError("file truncated inside the payload index")
    payloads = []
    cursor = end_of_index
    for i in range(n_key + n_kp):
        offset, length, crc = INDEX_ENTRY.unpack_from(data, pos + i * INDEX_ENTRY.size)
        if offset < cursor:
            raise CorruptStreamError(f"payload {i} overlaps the index or a previous payload")
        if offset + length > len(data):
            raise CorruptStreamError(f"payload {i} runs past the end of the file (truncated)")
        if any(data[cursor:offset]):
            raise CorruptStreamError(f"non-zero bytes in the gap before payload {i}")
        payload = data[offset : offset + length]
        if zlib.crc32(payload) != crc:
            raise CorruptStreamError(f"payload {i} failed its checksum")
        payloads.append(payload)
        cursor = offset + length
    if any(data[cursor:]):
        raise CorruptStreamError("trailing non-zero bytes after the last payload")
    return header, payloads[:n_key], payloads[n_key:]


def rearrange(key_frames: Sequence, generated: Sequence[Sequence], interval: int, total_frames: int) -> list:
    """Interleave key frames and per-segment generated frames chronologically."""
    keys, segments = split_stream(total_frames, interval)
    if len(key_frames) != len(keys):
        raise StructuralError(f"expected {len(keys)} key frames, got {len(key_frames)}")
    if len(generated) != len(segments):
        raise StructuralError(f"expected {len(segments)} generated segments, got {len(generated)}")
    out: list = [None] * total_frames
    for k, frame in zip(keys, key_frames):
        out[k] = frame
    for seg, frames in zip(segments, generated):
        if len(frames) != len(seg):
            raise StructuralError(
                f"segment starting at frame {seg[0]} needs {len(seg)} frames, got {len(frames)}"
            )
        for i, frame in zip(seg, frames):
            out[i] = frame
    return out
