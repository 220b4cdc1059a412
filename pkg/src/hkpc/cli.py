"""Command line: ``hkpc encode | decode | analyze``.

Exit codes are fixed per error class, see ``EXIT_CODES``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from . import errors
from .keypoints import read_sidecar
from .pipeline import ExternalKeyCodec, StoreKeyCodec, decode_stream, encode_stream
from .pixelops import ExternalGenerator, ExternalMask, UniformMask, identity_generator, psnr_y
from .rate import (
    VideoParams, average_bitrate, bd_rate, convert_units, curve_from_rows, delay_frames,
    plan, read_rate_table, select_rows,
)
from .y4m import format_y4m, read_y4m

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_MISMATCH = 4
EXIT_DOMAIN = 5
EXIT_KEYCODEC = 6
EXIT_CORRUPT = 7
EXIT_GENERATOR = 8
EXIT_IO = 9

# Most specific first.
EXIT_CODES = (
    (errors.ParseError, EXIT_PARSE),
    (errors.StructuralError, EXIT_MISMATCH),
    (errors.DomainError, EXIT_DOMAIN),
    (errors.KeyCodecError, EXIT_KEYCODEC),
    (errors.CorruptStreamError, EXIT_CORRUPT),
    (errors.TruncatedStreamError, EXIT_CORRUPT),
    (errors.UnsupportedFormatError, EXIT_CORRUPT),
    (errors.GeneratorError, EXIT_GENERATOR),
    (OSError, EXIT_IO),
)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True)


def _write_atomic(path: str, data: bytes) -> None:
    """Write via a sibling temp file so a failure never leaves a partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".hkpc-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cmd_template(value: str, option: str) -> str | None:
    """``cmd:<template>`` -> template; other values -> None."""
    if value.startswith("cmd:"):
        template = value[4:].strip()
        if not template:
            raise errors.DomainError(f"{option}: empty command template")
        return template
    return None


def cmd_encode(args) -> int:
    video = read_y4m(args.input)
    kps = read_sidecar(args.kps)
    if args.keycodec == "store":
        codec = StoreKeyCodec()
    else:
        template = _cmd_template(args.keycodec, "--keycodec")
        if template is None:
            raise errors.DomainError("--keycodec must be 'store' or 'cmd:<template>'")
        codec = ExternalKeyCodec(encode_template=template)
    data, stats = encode_stream(video, kps, args.interval, codec)
    _write_atomic(args.out, data)
    text = _dump(stats)
    if args.stats:
        _write_atomic(args.stats, text.encode("utf-8") + b"\n")
    print(text)
    return EXIT_OK


def cmd_decode(args) -> int:
    if args.generator == "identity":
        generator = identity_generator
    else:
        template = _cmd_template(args.generator, "--generator")
        if template is None:
            raise errors.DomainError("--generator must be 'identity' or 'cmd:<template>'")
        generator = ExternalGenerator(template)
    if args.mask.startswith("uniform:"):
        try:
            mask = UniformMask(float(args.mask.split(":", 1)[1]))
        except ValueError:
            raise errors.DomainError(f"bad mask value in {args.mask!r}") from None
    else:
        template = _cmd_template(args.mask, "--mask")
        if template is None:
            raise errors.DomainError("--mask must be 'uniform:<v>' or 'cmd:<template>'")
        mask = ExternalMask(template)
    keycodec = None
    if args.keydecoder:
        template = _cmd_template(args.keydecoder, "--keydecoder")
        if template is None:
            raise errors.DomainError("--keydecoder must be 'cmd:<template>'")
        keycodec = ExternalKeyCodec(decode_template=template)
    with open(args.input, "rb") as fh:
        data = fh.read()
    decoded = decode_stream(data, generator, mask, keycodec, jobs=args.jobs)
    _write_atomic(args.out, format_y4m(decoded.video))
    text = _dump(decoded.report)
    if args.report:
        _write_atomic(args.report, text.encode("utf-8") + b"\n")
    print(text)
    return EXIT_OK


def _curve_from_csv(path: str, label: str | None):
    rows = read_rate_table(path)
    if label is None:
        labels = sorted({r.label for r in rows})
        if len(labels) > 1:
            raise errors.DomainError(f"{path} holds several curves {labels}; pick one with a label option")
    else:
        rows = select_rows(rows, label=label)
    return curve_from_rows(rows)


def cmd_analyze(args) -> int:
    if args.what == "rate":
        avg = average_bitrate(args.key_bpf, 8.0 * args.nonkey_Bpf, args.interval)
        units = convert_units(avg, VideoParams(args.width, args.height, args.fps))
        report = {"avg_bitrate_bpf": avg, "avg_bitrate_bpp": units["bpp"],
                  "avg_bitrate_KBps": units["kbps"]}
    elif args.what == "delay":
        report = {"mode": args.mode.upper(), "interval": args.interval, "gop_size": args.gop,
                  "delay_frames": delay_frames(args.mode, args.interval, args.gop)}
    elif args.what == "bdrate":
        anchor = _curve_from_csv(args.anchor, args.anchor_label)
        test = _curve_from_csv(args.test, args.test_label)
        report = {"anchor": anchor.label, "test": test.label,
                  "bd_rate_percent": bd_rate(anchor, test)}
    elif args.what == "psnr":
        ref, test = read_y4m(args.ref), read_y4m(args.test)
        if len(ref.frames) != len(test.frames):
            raise errors.StructuralError(
                f"frame counts differ: {len(ref.frames)} vs {len(test.frames)}")
        per_frame = [psnr_y(a, b) for a, b in zip(ref.frames, test.frames)]
        finite = [p for p in per_frame if math.isfinite(p)]
        # Identical frames give inf, which then dominates the plain mean.
        report = {
            "frames": len(per_frame),
            "mean_psnr_y_db": sum(per_frame) / len(per_frame) if per_frame else None,
            "mean_finite_psnr_y_db": sum(finite) / len(finite) if finite else None,
            "per_frame_psnr_y_db": per_frame,
        }
    else:  # plan
        rows = read_rate_table(args.table)
        rows = select_rows(rows, label=args.label, mode=args.mode)
        choice = plan(args.budget, args.mode, [r.point() for r in rows],
                      VideoParams(args.width, args.height, args.fps), args.max_delay, args.gop)
        report = {"budget_KBps": args.budget, "mode": args.mode.upper(), "selected": None}
        if choice is not None:
            report["selected"] = {
                "qp": choice.qp, "interval": choice.interval_n,
                "bitrate_bpf": choice.bitrate_bpf, "psnr_y_db": choice.psnr_y_db,
                "KBps": convert_units(choice.bitrate_bpf,
                                      VideoParams(args.width, args.height, args.fps))["kbps"],
                "delay_frames": delay_frames(args.mode, choice.interval_n or 1, args.gop),
            }
    print(_dump(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hkpc", description="Hybrid keypoint/key-frame face video codec")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="build an .hkpc container from a Y4M video and keypoints")
    e.add_argument("--input", required=True, help="input Y4M video")
    e.add_argument("--kps", required=True, help="keypoint sidecar, one line per frame")
    e.add_argument("--interval", type=int, required=True, help="key-frame sampling interval N")
    e.add_argument("--keycodec", default="store", help="'store' or 'cmd:<template with {in} {out}>'")
    e.add_argument("--out", required=True, help="output container")
    e.add_argument("--stats", help="also write the stats JSON here")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="reconstruct a Y4M video from an .hkpc container")
    d.add_argument("--in", dest="input", required=True, help="input container")
    d.add_argument("--generator", default="identity",
                   help="'identity' or 'cmd:<template with {key} {kps} {out}>'")
    d.add_argument("--mask", default="uniform:0.5",
                   help="'uniform:<v>' or 'cmd:<template with {f1} {f2} {kps} {out}>'")
    d.add_argument("--keydecoder", help="'cmd:<template with {in} {out}>' for external key codecs")
    d.add_argument("--jobs", type=int, default=1, help="parallel generator calls")
    d.add_argument("--out", required=True, help="output Y4M")
    d.add_argument("--report", help="also write the decode report JSON here")
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("analyze", help="rate, delay, BD-rate, PSNR and planning reports")
    asub = a.add_subparsers(dest="what", required=True)
    r = asub.add_parser("rate", help="average bitrate and unit conversion")
    r.add_argument("key_bpf", type=float, help="key-frame bits per frame")
    r.add_argument("nonkey_Bpf", type=float, help="non-key-frame Bytes per frame")
    r.add_argument("interval", type=int)
    r.add_argument("width", type=int)
    r.add_argument("height", type=int)
    r.add_argument("fps", type=float)
    dl = asub.add_parser("delay", help="receiver delay in frames")
    dl.add_argument("mode", choices=["LDP", "RA", "ldp", "ra"])
    dl.add_argument("interval", type=int)
    dl.add_argument("gop", type=int, nargs="?", default=32, help="RA GOP size (default 32)")
    b = asub.add_parser("bdrate", help="BD-rate of TEST against ANCHOR (rate-table CSVs)")
    b.add_argument("anchor")
    b.add_argument("test")
    b.add_argument("--anchor-label")
    b.add_argument("--test-label")
    ps = asub.add_parser("psnr", help="per-frame and mean PSNR(Y) of two Y4M files")
    ps.add_argument("ref")
    ps.add_argument("test")
    pl = asub.add_parser("plan", help="pick (QP, N) for a bandwidth budget")
    pl.add_argument("budget", type=float, help="budget in KB/s (1 KB = 1024 bytes)")
    pl.add_argument("mode", choices=["LDP", "RA", "ldp", "ra"])
    pl.add_argument("--table", help="rate-table CSV (default: bundled published tables)")
    pl.add_argument("--label", help="restrict to one curve label")
    pl.add_argument("--max-delay", type=int)
    pl.add_argument("--gop", type=int, default=32)
    pl.add_argument("--width", type=int, default=256)
    pl.add_argument("--height", type=int, default=256)
    pl.add_argument("--fps", type=float, default=30.0)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        for cls, code in EXIT_CODES:
            if isinstance(exc, cls):
                print(f"hkpc: error: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
