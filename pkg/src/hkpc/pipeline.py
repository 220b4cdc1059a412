"""Sender and receiver pipelines over the container, keypoint codec and generator port."""

from __future__ import annotations

import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._shell import fill_template, run_shell, tmpdir
from .container import (
    HEADER_SIZE, KeyCodec, StreamHeader, classify_frame, demux, index_size, mux,
    rearrange, split_stream,
)
from .errors import CorruptStreamError, GeneratorError, KeyCodecError, ParseError, StructuralError
from .keypoints import quantize
from .kpcodec import decode_segment, encode_segment
from .pixelops import GeneratorPort, MaskSource, UniformMask, bi_blend, identity_generator
from .rate import VideoParams, average_bitrate, convert_units
from .y4m import FramePlane, Y4MVideo, format_y4m, parse_y4m


class StoreKeyCodec:
    """Key frames travel as the raw bytes of their Y4M sub-sequence."""

    codec_id = KeyCodec.STORE

    def encode(self, y4m_bytes: bytes) -> bytes:
        return y4m_bytes

    def decode(self, payload: bytes) -> bytes:
        return payload


class ExternalKeyCodec:
    """Shells out once per stream; templates use ``{in}`` and ``{out}`` placeholders."""

    codec_id = KeyCodec.EXTERNAL

    def __init__(self, encode_template: str | None = None, decode_template: str | None = None,
                 timeout: float | None = None) -> None:
        self.encode_template = encode_template
        self.decode_template = decode_template
        self.timeout = timeout

    def _run(self, template: str | None, data: bytes, what: str) -> bytes:
        if template is None:
            raise KeyCodecError(f"no external key-frame {what} command configured")
        with tempfile.TemporaryDirectory(prefix="hkpc-key-", dir=tmpdir()) as tmp:
            src, dst = os.path.join(tmp, "in"), os.path.join(tmp, "out")
            with open(src, "wb") as fh:
                fh.write(data)
            command = fill_template(template, {"in": src, "out": dst})
            code, stderr = run_shell(command, self.timeout)
            if code != 0:
                raise KeyCodecError(f"key-frame {what} failed (status {code}): {command}\n{stderr}")
            try:
                with open(dst, "rb") as fh:
                    return fh.read()
            except FileNotFoundError:
                raise KeyCodecError(f"key-frame {what} wrote no output") from None

    def encode(self, y4m_bytes: bytes) -> bytes:
        return self._run(self.encode_template, y4m_bytes, "encoder")

    def decode(self, payload: bytes) -> bytes:
        return self._run(self.decode_template, payload, "decoder")


def encode_stream(
    video: Y4MVideo,
    keypoints: np.ndarray,
    interval: int,
    keycodec: StoreKeyCodec | ExternalKeyCodec | None = None,
) -> tuple[bytes, dict]:
    """Build a container from a video and its normalized keypoints ``(F, K, 2)``.

    Returns the container bytes and a stats dictionary.
    """
    keycodec = keycodec or StoreKeyCodec()
    total = len(video.frames)
    kps = np.asarray(keypoints, dtype=np.float64)
    if total < 1:
        raise StructuralError("input video has no frames")
    if kps.ndim != 3 or kps.shape[0] != total:
        raise StructuralError(
            f"keypoint sidecar has {kps.shape[0] if kps.ndim else 0} frames, video has {total}"
        )
    header = StreamHeader(video.width, video.height, video.fps_num, video.fps_den, interval,
                          kps.shape[1], total, keycodec.codec_id)
    q = quantize(kps)
    keys, segments = split_stream(total, interval)
    key_y4m = format_y4m(video.with_frames(video.frames[k] for k in keys))
    key_payload = keycodec.encode(key_y4m)
    kp_payloads = [encode_segment(q[seg[0] : seg[-1] + 1]) for seg in segments]
    data = mux(header, [key_payload], kp_payloads)
    return data, stream_stats(header, [key_payload], kp_payloads, len(data))


def stream_stats(header: StreamHeader, key_payloads, kp_payloads, container_bytes: int) -> dict:
    keys, segments = split_stream(header.total_frames, header.interval)
    n_key = len(keys)
    n_nonkey = header.total_frames - n_key
    key_bytes = sum(len(p) for p in key_payloads)
    kp_bytes = sum(len(p) for p in kp_payloads)
    key_bpf = 8.0 * key_bytes / n_key
    nonkey_Bpf = kp_bytes / n_nonkey if n_nonkey else 0.0
    avg_n = min(header.interval, header.total_frames)
    avg = average_bitrate(key_bpf, 8.0 * nonkey_Bpf, avg_n)
    units = convert_units(avg, VideoParams(header.width, header.height, header.fps))
    return {
        "avg_bitrate_KBps": units["kbps"],
        "avg_bitrate_bpf": avg,
        "avg_bitrate_bpp": units["bpp"],
        "container_bytes": container_bytes,
        "averaging_interval": avg_n,
        "fps": header.fps,
        "header_bytes": HEADER_SIZE,
        "height": header.height,
        "index_bytes": index_size(len(key_payloads), len(kp_payloads)),
        "interval": header.interval,
        "key_bitrate_bpf": key_bpf,
        "key_frames": n_key,
        "key_payload_bytes": key_bytes,
        "keycodec": header.keyframe_codec.name.lower(),
        "keypoint_payload_bytes": kp_bytes,
        "keypoint_segments": len(segments),
        "nonkey_bitrate_Bpf": nonkey_Bpf,
        "nonkey_frames": n_nonkey,
        "num_keypoints": header.num_keypoints,
        "reproducible": True,
        "stream_bitrate_bpf": 8.0 * container_bytes / header.total_frames,
        "total_frames": header.total_frames,
        "width": header.width,
    }


@dataclass
class DecodedStream:
    video: Y4MVideo
    report: dict


def _check_generated(frame: FramePlane, key: FramePlane) -> FramePlane:
    if not isinstance(frame, FramePlane) or frame.y.shape != key.y.shape:
        raise GeneratorError("generator output does not match the key-frame dimensions")
    if frame.has_chroma != key.has_chroma:
        raise GeneratorError("generator output chroma layout differs from the key frame")
    return frame


def decode_stream(
    data: bytes,
    generator: GeneratorPort = identity_generator,
    mask_source: MaskSource | None = None,
    keycodec: StoreKeyCodec | ExternalKeyCodec | None = None,
    jobs: int = 1,
) -> DecodedStream:
    """Demux, decode key frames and keypoints, synthesize non-key frames, rearrange."""
    mask_source = mask_source or UniformMask(0.5)
    header, key_payloads, kp_payloads = demux(data)
    if keycodec is None:
        if header.keyframe_codec is not KeyCodec.STORE:
            raise KeyCodecError("container uses an external key-frame codec; supply a decoder")
        keycodec = StoreKeyCodec()
    key_frames: list[FramePlane] = []
    key_video = None
    for payload in key_payloads:
        try:
            key_video = parse_y4m(keycodec.decode(payload))
        except ParseError as exc:
            raise CorruptStreamError(f"key-frame payload is not a valid Y4M stream: {exc}") from None
        key_frames.extend(key_video.frames)
    keys, segments = split_stream(header.total_frames, header.interval)
    if len(key_frames) != len(keys):
        raise CorruptStreamError(f"expected {len(keys)} key frames, decoded {len(key_frames)}")
    if (key_video.width, key_video.height) != (header.width, header.height):
        raise CorruptStreamError("key-frame dimensions disagree with the container header")

    key_at = dict(zip(keys, key_frames))
    tasks = []
    for seg, payload in zip(segments, kp_payloads):
        kp = decode_segment(payload, len(seg), header.num_keypoints)
        tasks.extend(zip(seg, kp))

    counts = {"generator_calls": 0, "forward_only_frames": 0}

    def synthesize(task):
        index, kps = task
        role = classify_frame(index, header.interval, header.total_frames)
        k1 = key_at[role.prev_key]
        f1 = _check_generated(generator(k1, kps), k1)
        if role.next_key is None:
            return f1, 1, True
        k2 = key_at[role.next_key]
        f2 = _check_generated(generator(k2, kps), k2)
        return bi_blend(f1, f2, mask_source(f1, f2, kps)), 2, False

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(synthesize, tasks))
    else:
        results = [synthesize(t) for t in tasks]

    generated = []
    pos = 0
    for seg in segments:
        chunk = results[pos : pos + len(seg)]
        pos += len(seg)
        generated.append([frame for frame, _, _ in chunk])
        for _, calls, forward in chunk:
            counts["generator_calls"] += calls
            counts["forward_only_frames"] += forward
    frames = rearrange(key_frames, generated, header.interval, header.total_frames)
    video = Y4MVideo(header.width, header.height, header.fps_num, header.fps_den,
                     key_video.colorspace, frames)
    report = {
        "container_bytes": len(data),
        "generated_frames": len(tasks),
        "interval": header.interval,
        "key_frames": len(keys),
        "num_keypoints": header.num_keypoints,
        "reproducible": True,
        "total_frames": header.total_frames,
        **counts,
    }
    return DecodedStream(video, dict(sorted(report.items())))
