"""Bitrate accounting, unit conversion, delay, BD-rate and budget planning."""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, ParseError

BD_SAMPLES = 1000
DEFAULT_RA_GOP = 32
RATE_TABLE_FIELDS = (
    "label", "mode", "qp", "interval", "key_bpf", "nonkey_Bpf",
    "avg_bpf", "bpp_e3", "kbps", "psnr_y",
)


class Mode(str, enum.Enum):
    LDP = "LDP"
    RA = "RA"

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        try:
            return cls(str(value.value if isinstance(value, Mode) else value).upper())
        except ValueError:
            raise DomainError(f"unknown encoder mode {value!r}; expected LDP or RA") from None


@dataclass(frozen=True)
class VideoParams:
    width: int
    height: int
    fps: float

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0 or self.fps <= 0:
            raise DomainError("width, height and fps must be positive")


@dataclass(frozen=True)
class RatePoint:
    qp: int
    interval_n: int | None
    bitrate_bpf: float
    psnr_y_db: float

    def __post_init__(self) -> None:
        if not self.bitrate_bpf > 0:
            raise DomainError("bitrate must be positive")
        if not math.isfinite(self.psnr_y_db):
            raise DomainError("PSNR must be finite")


@dataclass(frozen=True)
class RateCurve:
    label: str
    points: tuple[RatePoint, ...]

    def __init__(self, label: str, points: Iterable[RatePoint]) -> None:
        pts = tuple(sorted(points, key=lambda p: p.bitrate_bpf))
        rates = [p.bitrate_bpf for p in pts]
        if len(pts) < 2:
            raise DomainError("a rate curve needs at least two points")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise DomainError(f"curve {label!r}: bitrates must be strictly increasing")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "points", pts)

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.bitrate_bpf for p in self.points])

    @property
    def psnrs(self) -> np.ndarray:
        return np.array([p.psnr_y_db for p in self.points])


def average_bitrate(b_key: float, b_nonkey: float, n: int) -> float:
    """Mean bits per frame with one key frame every ``n`` frames."""
    if n < 1:
        raise DomainError(f"sampling interval must be >= 1, got {n}")
    if b_key < 0 or b_nonkey < 0:
        raise DomainError("bitrates must be non-negative")
    return (b_key + b_nonkey * (n - 1)) / n


def convert_units(bpf: float, vp: VideoParams) -> dict[str, float]:
    """Bits/frame to bits/pixel and KB/s (1 KB = 1024 bytes)."""
    if bpf < 0:
        raise DomainError("bitrate must be non-negative")
    return {
        "bpp": bpf / (vp.width * vp.height),
        "kbps": bpf * vp.fps / (8 * 1024),
    }


def delay_frames(mode: "Mode | str", n: int, gop_size: int = DEFAULT_RA_GOP) -> int:
    """Receiver delay in frames: ``n - 1`` for LDP, ``gop_size * n - 1`` for RA."""
    mode = Mode.parse(mode)
    if n < 1:
        raise DomainError("sampling interval must be >= 1")
    if mode is Mode.LDP:
        return n - 1
    if gop_size < 1:
        raise DomainError("GOP size must be >= 1")
    return gop_size * n - 1


def _log_rate_integral(curve: RateCurve, lo: float, hi: float) -> float:
    order = np.argsort(curve.psnrs)
    q = curve.psnrs[order]
    if np.any(np.diff(q) <= 0):
        raise DomainError(f"curve {curve.label!r}: PSNR values must be distinct")
    fit = PchipInterpolator(q, np.log10(curve.rates[order]))
    samples = np.linspace(lo, hi, BD_SAMPLES)
    return float(trapezoid(fit(samples), samples))


def bd_rate(anchor: RateCurve, test: RateCurve) -> float:
    """Bjontegaard delta rate of ``test`` against ``anchor`` in percent.

    Negative values mean ``test`` needs less rate for the same PSNR. Both
    curves are fitted with monotone piecewise-cubic Hermite interpolants of
    log10 rate over PSNR and integrated by the trapezoid rule on the shared
    PSNR range.
    """
    for c in (anchor, test):
        if len(c.points) < 4:
            raise DomainError(f"curve {c.label!r}: BD-rate needs at least 4 points")
    lo = max(anchor.psnrs.min(), test.psnrs.min())
    hi = min(anchor.psnrs.max(), test.psnrs.max())
    if not hi > lo:
        raise DomainError("PSNR ranges of the two curves do not overlap")
    gap = (_log_rate_integral(test, lo, hi) - _log_rate_integral(anchor, lo, hi)) / (hi - lo)
    return (10.0 ** gap - 1.0) * 100.0


def plan(
    budget_kbps: float,
    mode: "Mode | str",
    table: Sequence[RatePoint],
    vp: VideoParams,
    max_delay_frames: int | None = None,
    gop_size: int = DEFAULT_RA_GOP,
) -> RatePoint | None:
    """Best-PSNR operating point within a bandwidth budget and optional delay cap.

    Ties go to lower delay, then lower bitrate. Points without an interval
    (anchor codec points) count as interval 1. Returns ``None`` when nothing
    fits.
    """
    best = None
    best_key = None
    for p in table:
        if convert_units(p.bitrate_bpf, vp)["kbps"] > budget_kbps:
            continue
        delay = delay_frames(mode, p.interval_n or 1, gop_size)
        if max_delay_frames is not None and delay > max_delay_frames:
            continue
        key = (-p.psnr_y_db, delay, p.bitrate_bpf)
        if best_key is None or key < best_key:
            best, best_key = p, key
    return best


# --- rate tables ---------------------------------------------------------


@dataclass(frozen=True)
class RateRow:
    """One row of a rate-table CSV. ``interval``/``nonkey_Bpf`` are None for anchor rows."""

    label: str
    mode: Mode
    qp: int
    interval: int | None
    key_bpf: float
    nonkey_Bpf: float | None
    avg_bpf: float
    bpp_e3: float | None
    kbps: float | None
    psnr_y: float

    def point(self) -> RatePoint:
        return RatePoint(self.qp, self.interval, self.avg_bpf, self.psnr_y)


def _opt(cell: str, kind):
    cell = cell.strip()
    return kind(cell) if cell else None


def parse_rate_table(text: str) -> list[RateRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(RATE_TABLE_FIELDS) - set(reader.fieldnames):
        raise ParseError(f"rate table must have columns {','.join(RATE_TABLE_FIELDS)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        try:
            key_bpf = _opt(rec["key_bpf"], float)
            avg = _opt(rec["avg_bpf"], float)
            if avg is None:
                avg = key_bpf
            rows.append(RateRow(
                label=rec["label"].strip(),
                mode=Mode.parse(rec["mode"].strip()),
                qp=int(rec["qp"]),
                interval=_opt(rec["interval"], int),
                key_bpf=key_bpf if key_bpf is not None else avg,
                nonkey_Bpf=_opt(rec["nonkey_Bpf"], float),
                avg_bpf=avg,
                bpp_e3=_opt(rec["bpp_e3"], float),
                kbps=_opt(rec["kbps"], float),
                psnr_y=float(rec["psnr_y"]),
            ))
        except (TypeError, ValueError, DomainError) as exc:
            raise ParseError(f"rate table line {lineno}: {exc}") from None
    return rows


def read_rate_table(path: str | os.PathLike | None = None) -> list[RateRow]:
    """Read a rate-table CSV; with no path, the bundled published tables."""
    if path is None:
        text = resources.files("hkpc.data").joinpath("published_tables.csv").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_rate_table(text)


def write_rate_table(path: str | os.PathLike, rows: Iterable[RateRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATE_TABLE_FIELDS)
        for r in rows:
            w.writerow([
                r.label, r.mode.value, r.qp,
                "" if r.interval is None else r.interval,
                r.key_bpf, "" if r.nonkey_Bpf is None else r.nonkey_Bpf,
                r.avg_bpf, "" if r.bpp_e3 is None else r.bpp_e3,
                "" if r.kbps is None else r.kbps, r.psnr_y,
            ])


def select_rows(rows: Iterable[RateRow], label: str | None = None, mode=None,
                qp: int | None = None, interval: int | None = None) -> list[RateRow]:
    out = []
    for r in rows:
        if label is not None and r.label != label:
            continue
        if mode is not None and r.mode is not Mode.parse(mode):
            continue
        if qp is not None and r.qp != qp:
            continue
        if interval is not None and r.interval != interval:
            continue
        out.append(r)
    return out


def curve_from_rows(rows: Sequence[RateRow], label: str | None = None) -> RateCurve:
    if not rows:
        raise DomainError("no rows selected for the curve")
    return RateCurve(label or rows[0].label, [r.point() for r in rows])
