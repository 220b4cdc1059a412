"""Pixel operations at the generator boundary: mask blend, PSNR(Y), generators."""

from __future__ import annotations

import os
import tempfile
from typing import Callable, Protocol

import numpy as np

from ._shell import fill_template, run_shell, tmpdir
from .errors import DomainError, GeneratorError, ParseError, StructuralError
from .keypoints import dequantize, format_sidecar, validate_frame
from .y4m import FramePlane, format_pgm, parse_pgm


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def validate_mask(mask, shape: tuple[int, int]) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != tuple(shape):
        raise StructuralError(f"mask shape {m.shape} does not match frame shape {tuple(shape)}")
    if not np.all((m >= 0.0) & (m <= 1.0)):
        raise DomainError("mask values must lie in [0, 1]")
    return m


def uniform_mask(height: int, width: int, value: float = 0.5) -> np.ndarray:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"mask value must lie in [0, 1], got {value}")
    return np.full((height, width), float(value))


def downsample_mask(mask: np.ndarray) -> np.ndarray:
    """2x2 average for 4:2:0 chroma; odd edges are padded by replication."""
    h, w = mask.shape
    padded = np.pad(mask, ((0, h % 2), (0, w % 2)), mode="edge")
    return padded.reshape(padded.shape[0] // 2, 2, padded.shape[1] // 2, 2).mean(axis=(1, 3))


def _blend_plane(a: np.ndarray, b: np.ndarray, m: np.ndarray) -> np.ndarray:
    out = _round_half_away(m * a.astype(np.float64) + (1.0 - m) * b.astype(np.float64))
    return np.clip(out, 0, 255).astype(np.uint8)


def bi_blend(f1: FramePlane, f2: FramePlane, mask) -> FramePlane:
    """Per-pixel ``mask * f1 + (1 - mask) * f2``, rounded half away from zero.

    ``f1`` is the prediction from the earlier key frame. Chroma planes, when
    present, use the 2x2-averaged mask.
    """
    if f1.y.shape != f2.y.shape:
        raise StructuralError(f"frame shapes differ: {f1.y.shape} vs {f2.y.shape}")
    if f1.has_chroma != f2.has_chroma:
        raise StructuralError("one frame has chroma planes and the other does not")
    m = validate_mask(mask, f1.y.shape)
    y = _blend_plane(f1.y, f2.y, m)
    if not f1.has_chroma:
        return FramePlane(y)
    mc = downsample_mask(m)
    return FramePlane(y, _blend_plane(f1.u, f2.u, mc), _blend_plane(f1.v, f2.v, mc))


def psnr_y(ref: FramePlane, test: FramePlane) -> float:
    """Luma PSNR with peak 255; ``inf`` for identical planes."""
    a = ref.y if isinstance(ref, FramePlane) else np.asarray(ref)
    b = test.y if isinstance(test, FramePlane) else np.asarray(test)
    if a.shape != b.shape:
        raise StructuralError(f"frame shapes differ: {a.shape} vs {b.shape}")
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(255.0**2 / mse))


class GeneratorPort(Protocol):
    """Predicts a frame from a key frame and the target frame's quantized keypoints."""

    def __call__(self, key: FramePlane, kps: np.ndarray) -> FramePlane: ...


def identity_generator(key: FramePlane, kps: np.ndarray) -> FramePlane:
    return key.copy()


def _run(command: str, what: str, timeout: float | None) -> None:
    code, stderr = run_shell(command, timeout)
    if code != 0:
        raise GeneratorError(f"{what} failed (status {code}): {command}\nstderr: {stderr}")


def _read_plane(path: str, shape: tuple[int, int], what: str) -> tuple[np.ndarray, int]:
    try:
        with open(path, "rb") as fh:
            plane, maxval = parse_pgm(fh.read())
    except FileNotFoundError:
        raise GeneratorError(f"{what} produced no output file") from None
    except ParseError as exc:
        raise GeneratorError(f"{what} produced a malformed PGM: {exc}") from None
    if plane.shape != tuple(shape):
        raise GeneratorError(
            f"{what} produced a {plane.shape[1]}x{plane.shape[0]} frame, "
            f"expected {shape[1]}x{shape[0]}"
        )
    return plane, maxval


class ExternalGenerator:
    """Runs a shell command template per frame.

    Placeholders: ``{key}`` key-frame luma PGM, ``{kps}`` keypoint sidecar
    (one line, dequantized coordinates; optional), ``{out}`` PGM the command
    must write.
    The output replaces the luma plane; chroma is carried over from the key
    frame. Temporary files go under ``$HKPC_TMPDIR`` when set.
    """

    def __init__(self, template: str, timeout: float | None = None) -> None:
        for name in ("key", "out"):
            if "{" + name + "}" not in template:
                raise DomainError(f"generator template lacks the {{{name}}} placeholder")
        self.template = template
        self.timeout = timeout

    def __call__(self, key: FramePlane, kps: np.ndarray) -> FramePlane:
        kf = validate_frame(kps)
        with tempfile.TemporaryDirectory(prefix="hkpc-gen-", dir=tmpdir()) as tmp:
            paths = {n: os.path.join(tmp, n + ext)
                     for n, ext in (("key", ".pgm"), ("kps", ".kps"), ("out", ".pgm"))}
            with open(paths["key"], "wb") as fh:
                fh.write(format_pgm(key.y))
            with open(paths["kps"], "w", encoding="utf-8") as fh:
                fh.write(format_sidecar(dequantize(kf)))
            command = fill_template(self.template, paths)
            _run(command, "generator", self.timeout)
            plane, maxval = _read_plane(paths["out"], key.y.shape, "generator")
        if maxval != 255:
            plane = _round_half_away(plane.astype(np.float64) * 255.0 / maxval)
        return FramePlane(plane, key.u, key.v)


def external_generator(command_template: str, key: FramePlane, kps: np.ndarray) -> FramePlane:
    return ExternalGenerator(command_template)(key, kps)


MaskSource = Callable[[FramePlane, FramePlane, np.ndarray], np.ndarray]


class UniformMask:
    def __init__(self, value: float = 0.5) -> None:
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"mask value must lie in [0, 1], got {value}")
        self.value = value

    def __call__(self, f1: FramePlane, f2: FramePlane, kps: np.ndarray) -> np.ndarray:
        return uniform_mask(f1.height, f1.width, self.value)


class ExternalMask:
    """Mask from a command: ``{f1}``, ``{f2}`` luma PGMs and ``{kps}`` in, ``{out}`` PGM out.

    Output samples are scaled by the PGM maxval into [0, 1].
    """

    def __init__(self, template: str, timeout: float | None = None) -> None:
        if "{out}" not in template:
            raise DomainError("mask template lacks the {out} placeholder")
        self.template = template
        self.timeout = timeout

    def __call__(self, f1: FramePlane, f2: FramePlane, kps: np.ndarray) -> np.ndarray:
        kf = validate_frame(kps)
        with tempfile.TemporaryDirectory(prefix="hkpc-mask-", dir=tmpdir()) as tmp:
            paths = {n: os.path.join(tmp, n + ext) for n, ext in
                     (("f1", ".pgm"), ("f2", ".pgm"), ("kps", ".kps"), ("out", ".pgm"))}
            for n, f in (("f1", f1), ("f2", f2)):
                with open(paths[n], "wb") as fh:
                    fh.write(format_pgm(f.y))
            with open(paths["kps"], "w", encoding="utf-8") as fh:
                fh.write(format_sidecar(dequantize(kf)))
            command = fill_template(self.template, paths)
            _run(command, "mask command", self.timeout)
            plane, maxval = _read_plane(paths["out"], f1.y.shape, "mask command")
        return plane.astype(np.float64) / maxval
