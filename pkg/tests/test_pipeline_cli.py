import json
import sys

import numpy as np
import pytest

from hkpc import cli
from hkpc.container import HEADER_SIZE, demux, index_size
from hkpc.errors import CorruptStreamError, KeyCodecError, StructuralError
from hkpc.keypoints import write_sidecar
from hkpc.pipeline import ExternalKeyCodec, decode_stream, encode_stream
from hkpc.pixelops import UniformMask, identity_generator
from hkpc.y4m import read_y4m, write_y4m

from conftest import make_video, smooth_keypoints


def _run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_end_to_end_api():
    video = make_video()
    kps = smooth_keypoints(11)
    data, stats = encode_stream(video, kps, 5)
    assert stats["container_bytes"] == len(data)
    _, keys, segs = demux(data)
    assert len(data) == HEADER_SIZE + index_size(len(keys), len(segs)) + sum(map(len, keys + segs))
    out = decode_stream(data, identity_generator, UniformMask(0.5))
    frames = out.video.frames
    assert len(frames) == 11
    for k in (0, 5, 10):
        assert frames[k] == video.frames[k]
    # Identity generator + half mask: frame i is the rounded mean of its bracketing keys.
    mean = np.floor((video.frames[0].y.astype(int) + video.frames[5].y + 1) / 2)
    assert np.array_equal(frames[3].y, mean.astype(np.uint8))
    assert out.report["generator_calls"] == 16
    assert out.report["forward_only_frames"] == 0
    assert encode_stream(video, kps, 5)[0] == data


def test_trailing_frames_forward_only():
    video = make_video(13)
    data, _ = encode_stream(video, smooth_keypoints(13), 5)
    out = decode_stream(data)
    assert out.report["forward_only_frames"] == 2
    assert out.video.frames[12] == video.frames[10]


def test_interval_at_least_total():
    video = make_video(6)
    data, stats = encode_stream(video, smooth_keypoints(6), 10)
    assert stats["key_frames"] == 1 and stats["averaging_interval"] == 6
    out = decode_stream(data)
    assert len(out.video.frames) == 6
    assert all(f == video.frames[0] for f in out.video.frames)


def test_parallel_decode_matches_serial():
    data, _ = encode_stream(make_video(21), smooth_keypoints(21), 4)
    assert decode_stream(data, jobs=4).video.frames == decode_stream(data).video.frames


def test_constant_keypoints_cost_at_most_2_bytes_per_frame():
    video = make_video(100, 16, 16)
    data, stats = encode_stream(video, np.zeros((100, 10, 2)), 100)
    assert stats["nonkey_bitrate_Bpf"] <= 2.0


def test_keypoint_count_mismatch():
    with pytest.raises(StructuralError):
        encode_stream(make_video(), smooth_keypoints(10), 5)


def test_external_keycodec_roundtrip():
    video = make_video()
    codec = ExternalKeyCodec("gzip -c {in} > {out}", "gzip -dc {in} > {out}")
    data, stats = encode_stream(video, smooth_keypoints(11), 5, codec)
    assert stats["keycodec"] == "external"
    with pytest.raises(KeyCodecError):
        decode_stream(data)
    assert decode_stream(data, keycodec=codec).video.frames[5] == video.frames[5]


def test_corrupt_key_payload():
    data, _ = encode_stream(make_video(), smooth_keypoints(11), 5)
    with pytest.raises(CorruptStreamError):
        decode_stream(data[:-3])


# --- CLI -----------------------------------------------------------------


def test_cli_encode_decode(stream_files, tmp_path, capsys):
    video, y4m, kps = stream_files
    out, stats = tmp_path / "a.hkpc", tmp_path / "s.json"
    code, text, _ = _run(capsys, "encode", "--input", y4m, "--kps", kps, "--interval", 5,
                         "--out", out, "--stats", stats)
    assert code == 0
    assert json.loads(text) == json.loads(stats.read_text())
    assert json.loads(text)["container_bytes"] == out.stat().st_size
    dec, report = tmp_path / "b.y4m", tmp_path / "r.json"
    code, text, _ = _run(capsys, "decode", "--in", out, "--out", dec, "--report", report)
    assert code == 0
    frames = read_y4m(dec).frames
    assert len(frames) == 11 and frames[5] == video.frames[5]
    first = dec.read_bytes()
    assert _run(capsys, "decode", "--in", out, "--generator", "cmd:cp {key} {out}",
                "--out", dec, "--jobs", 3)[0] == 0
    assert dec.read_bytes() == first


def test_cli_corrupted_container_leaves_no_output(stream_files, tmp_path, capsys):
    _, y4m, kps = stream_files
    out = tmp_path / "a.hkpc"
    _run(capsys, "encode", "--input", y4m, "--kps", kps, "--interval", 5, "--out", out)
    data = bytearray(out.read_bytes())
    data[len(data) // 2] ^= 0x10
    out.write_bytes(bytes(data))
    dec = tmp_path / "b.y4m"
    code, _, err = _run(capsys, "decode", "--in", out, "--out", dec)
    assert code == cli.EXIT_CORRUPT
    assert "checksum" in err
    assert not dec.exists()


def test_cli_exit_codes(stream_files, tmp_path, capsys):
    video, y4m, kps = stream_files
    out = tmp_path / "a.hkpc"
    bad_kps = tmp_path / "bad.kps"
    bad_kps.write_text("0.1,oops\n")
    assert _run(capsys, "encode", "--input", y4m, "--kps", bad_kps, "--interval", 5,
                "--out", out)[0] == cli.EXIT_PARSE
    short = tmp_path / "short.kps"
    write_sidecar(short, smooth_keypoints(4))
    assert _run(capsys, "encode", "--input", y4m, "--kps", short, "--interval", 5,
                "--out", out)[0] == cli.EXIT_MISMATCH
    assert _run(capsys, "encode", "--input", y4m, "--kps", kps, "--interval", 1,
                "--out", out)[0] == cli.EXIT_DOMAIN
    assert _run(capsys, "encode", "--input", tmp_path / "missing.y4m", "--kps", kps,
                "--interval", 5, "--out", out)[0] == cli.EXIT_IO
    assert _run(capsys, "encode", "--input", y4m, "--kps", kps, "--interval", 5,
                "--keycodec", "cmd:false {in} {out}", "--out", out)[0] == cli.EXIT_KEYCODEC
    assert not out.exists()
    assert _run(capsys, "encode", "--input", y4m, "--kps", kps, "--interval", 5, "--out", out)[0] == 0
    assert _run(capsys, "decode", "--in", out, "--generator", "cmd:false {key} {out}",
                "--out", tmp_path / "x.y4m")[0] == cli.EXIT_GENERATOR
    assert _run(capsys, "decode", "--in", y4m, "--out", tmp_path / "x.y4m")[0] == cli.EXIT_CORRUPT
    with pytest.raises(SystemExit) as exc:
        cli.main(["decode"])
    assert exc.value.code == cli.EXIT_USAGE


def test_cli_analyze_rate(capsys):
    code, text, _ = _run(capsys, "analyze", "rate", 3648, 5.079, 10, 256, 256, 30)
    r = json.loads(text)
    assert code == 0
    assert r["avg_bitrate_bpf"] == pytest.approx(401.4, abs=0.1)
    assert r["avg_bitrate_bpp"] * 1e3 == pytest.approx(6.12, abs=0.01)
    assert r["avg_bitrate_KBps"] == pytest.approx(1.47, abs=0.01)


def test_cli_analyze_delay(capsys):
    assert json.loads(_run(capsys, "analyze", "delay", "RA", 10)[1])["delay_frames"] == 319
    assert json.loads(_run(capsys, "analyze", "delay", "LDP", 10)[1])["delay_frames"] == 9


def test_cli_analyze_bdrate(capsys):
    from hkpc.data import __file__ as data_init
    import os
    table = os.path.join(os.path.dirname(data_init), "published_tables.csv")
    code, text, _ = _run(capsys, "analyze", "bdrate", table, table,
                         "--anchor-label", "VVenC-LDP", "--test-label", "VVenC-LDP")
    assert code == 0 and json.loads(text)["bd_rate_percent"] == 0.0
    assert _run(capsys, "analyze", "bdrate", table, table)[0] == cli.EXIT_DOMAIN


def test_cli_analyze_psnr(tmp_path, capsys):
    v = make_video(2, 16, 16)
    a, b = tmp_path / "a.y4m", tmp_path / "b.y4m"
    write_y4m(a, v)
    shifted = v.with_frames([type(f)((f.y.astype(int) ^ 1).astype(np.uint8), f.u, f.v)
                             for f in v.frames])
    write_y4m(b, shifted)
    r = json.loads(_run(capsys, "analyze", "psnr", a, b)[1])
    assert r["frames"] == 2
    assert r["per_frame_psnr_y_db"][0] == pytest.approx(48.1308, abs=1e-4)
    same = json.loads(_run(capsys, "analyze", "psnr", a, a)[1])
    assert same["mean_psnr_y_db"] == float("inf")


def test_cli_analyze_plan(capsys):
    r = json.loads(_run(capsys, "analyze", "plan", 1.0, "RA", "--label", "Ours-RA")[1])
    assert r["selected"]["KBps"] <= 1.0
    none = json.loads(_run(capsys, "analyze", "plan", 0.001, "LDP")[1])
    assert none["selected"] is None


def test_module_entry_point(tmp_path):
    import subprocess
    proc = subprocess.run([sys.executable, "-m", "hkpc", "analyze", "delay", "LDP", "1"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["delay_frames"] == 0
