"""YUV4MPEG2 (4:2:0 and mono) and binary PGM readers/writers."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, StructuralError

Y4M_MAGIC = b"YUV4MPEG2"
_C420 = {"420", "420jpeg", "420paldv", "420mpeg2"}


@dataclass
class FramePlane:
    """An 8-bit frame: full-range luma plus optional half-resolution chroma."""

    y: np.ndarray
    u: np.ndarray | None = None
    v: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.y = np.ascontiguousarray(self.y, dtype=np.uint8)
        if self.y.ndim != 2 or 0 in self.y.shape:
            raise StructuralError(f"luma plane must be a non-empty 2-D array, got {self.y.shape}")
        if (self.u is None) != (self.v is None):
            raise StructuralError("chroma planes come in pairs")
        if self.u is not None:
            self.u = np.ascontiguousarray(self.u, dtype=np.uint8)
            self.v = np.ascontiguousarray(self.v, dtype=np.uint8)
            if self.u.shape != self.chroma_shape or self.v.shape != self.chroma_shape:
                raise StructuralError(
                    f"chroma planes must be {self.chroma_shape}, got {self.u.shape}/{self.v.shape}"
                )

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def chroma_shape(self) -> tuple[int, int]:
        return ((self.height + 1) // 2, (self.width + 1) // 2)

    @property
    def has_chroma(self) -> bool:
        return self.u is not None

    def planes(self) -> list[np.ndarray]:
        return [self.y] if self.u is None else [self.y, self.u, self.v]

    def tobytes(self) -> bytes:
        return b"".join(p.tobytes() for p in self.planes())

    def copy(self) -> "FramePlane":
        return FramePlane(self.y.copy(), None if self.u is None else self.u.copy(),
                          None if self.v is None else self.v.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, FramePlane):
            return NotImplemented
        return all(
            (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))
            for a, b in ((self.y, other.y), (self.u, other.u), (self.v, other.v))
        )


@dataclass
class Y4MVideo:
    width: int
    height: int
    fps_num: int = 30
    fps_den: int = 1
    colorspace: str = "420jpeg"
    frames: list[FramePlane] = field(default_factory=list)

    @property
    def has_chroma(self) -> bool:
        return self.colorspace != "mono"

    def header_line(self) -> bytes:
        return (
            f"YUV4MPEG2 W{self.width} H{self.height} F{self.fps_num}:{self.fps_den} "
            f"Ip A1:1 C{self.colorspace}\n"
        ).encode("ascii")

    def with_frames(self, frames) -> "Y4MVideo":
        return Y4MVideo(self.width, self.height, self.fps_num, self.fps_den, self.colorspace,
                        list(frames))


def parse_y4m(data: bytes) -> Y4MVideo:
    nl = data.find(b"\n")
    if nl < 0 or not data.startswith(Y4M_MAGIC):
        raise ParseError("not a YUV4MPEG2 stream")
    params = {}
    for tok in data[len(Y4M_MAGIC):nl].decode("ascii", "replace").split():
        params[tok[0]] = tok[1:]
    try:
        width, height = int(params["W"]), int(params["H"])
    except (KeyError, ValueError):
        raise ParseError("Y4M header lacks valid W/H") from None
    if width < 1 or height < 1:
        raise ParseError("Y4M dimensions must be positive")
    m = re.fullmatch(r"(\d+):(\d+)", params.get("F", "30:1"))
    if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
        raise ParseError(f"bad Y4M frame rate {params.get('F')!r}")
    cs = params.get("C", "420jpeg")
    if cs not in _C420 and cs != "mono":
        raise ParseError(f"unsupported Y4M colorspace C{cs}; only 4:2:0 and mono are handled")
    video = Y4MVideo(width, height, int(m.group(1)), int(m.group(2)), cs)
    luma = width * height
    cw, ch = (width + 1) // 2, (height + 1) // 2
    chroma = 0 if cs == "mono" else cw * ch
    size = luma + 2 * chroma
    pos = nl + 1
    while pos < len(data):
        fnl = data.find(b"\n", pos)
        if fnl < 0 or not data.startswith(b"FRAME", pos):
            raise ParseError(f"bad FRAME marker at byte {pos}")
        start = fnl + 1
        if start + size > len(data):
            raise ParseError("Y4M stream truncated inside a frame")
        buf = np.frombuffer(data, dtype=np.uint8, count=size, offset=start)
        y = buf[:luma].reshape(height, width)
        if chroma:
            u = buf[luma:luma + chroma].reshape(ch, cw)
            v = buf[luma + chroma:].reshape(ch, cw)
            video.frames.append(FramePlane(y.copy(), u.copy(), v.copy()))
        else:
            video.frames.append(FramePlane(y.copy()))
        pos = start + size
    return video


def format_y4m(video: Y4MVideo) -> bytes:
    out = [video.header_line()]
    for f in video.frames:
        if (f.width, f.height) != (video.width, video.height):
            raise StructuralError("frame dimensions differ from the stream header")
        if f.has_chroma != video.has_chroma:
            raise StructuralError("frame chroma does not match the stream colorspace")
        out.append(b"FRAME\n")
        out.append(f.tobytes())
    return b"".join(out)


def read_y4m(path: str | os.PathLike) -> Y4MVideo:
    with open(path, "rb") as fh:
        return parse_y4m(fh.read())


def write_y4m(path: str | os.PathLike, video: Y4MVideo) -> None:
    with open(path, "wb") as fh:
        fh.write(format_y4m(video))


def format_pgm(plane: np.ndarray) -> bytes:
    plane = np.asarray(plane, dtype=np.uint8)
    h, w = plane.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + plane.tobytes()


def parse_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Return ``(samples, maxval)``; 16-bit PGMs are read big-endian."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("PGM header truncated")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ParseError("only binary (P5) PGM is supported")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError("bad PGM header values") from None
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise ParseError("bad PGM dimensions or maxval")
    pos += 1
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    count = w * h
    if len(data) - pos < count * dtype.itemsize:
        raise ParseError("PGM truncated")
    samples = np.frombuffer(data, dtype=dtype, count=count, offset=pos).reshape(h, w)
    return samples.copy(), maxval


def read_pgm(path: str | os.PathLike) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def write_pgm(path: str | os.PathLike, plane: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(format_pgm(plane))
