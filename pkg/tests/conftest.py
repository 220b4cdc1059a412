import sys

import numpy as np
import pytest

from hkpc.keypoints import write_sidecar
from hkpc.y4m import FramePlane, Y4MVideo, write_y4m


def make_video(n_frames=11, width=64, height=64, seed=0, chroma=True):
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(n_frames):
        y = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
        if chroma:
            ch, cw = (height + 1) // 2, (width + 1) // 2
            u = rng.integers(0, 256, size=(ch, cw), dtype=np.uint8)
            v = rng.integers(0, 256, size=(ch, cw), dtype=np.uint8)
            frames.append(FramePlane(y, u, v))
        else:
            frames.append(FramePlane(y))
    return Y4MVideo(width, height, 30, 1, "420jpeg" if chroma else "mono", frames)


def smooth_keypoints(n_frames, k=10, seed=0):
    """Normalized keypoints drifting by small random steps."""
    rng = np.random.default_rng(seed)
    start = rng.uniform(-0.8, 0.8, size=(k, 2))
    steps = rng.uniform(-0.01, 0.01, size=(n_frames - 1, k, 2))
    kps = np.concatenate([start[None], start + np.cumsum(steps, axis=0)])
    return np.clip(kps, -1, 1)


@pytest.fixture
def stream_files(tmp_path):
    """An 11-frame 64x64 Y4M plus a matching K=10 sidecar on disk."""
    video = make_video()
    y4m = tmp_path / "in.y4m"
    kps = tmp_path / "in.kps"
    write_y4m(y4m, video)
    write_sidecar(kps, smooth_keypoints(len(video.frames)))
    return video, y4m, kps


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
