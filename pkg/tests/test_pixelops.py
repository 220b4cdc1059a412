import math

import numpy as np
import pytest

from hkpc.errors import DomainError, GeneratorError, StructuralError
from hkpc.keypoints import quantize
from hkpc.pixelops import (
    ExternalGenerator, ExternalMask, UniformMask, bi_blend, downsample_mask, external_generator,
    identity_generator, psnr_y, uniform_mask,
)
from hkpc.y4m import FramePlane

from conftest import make_video


def _pair(seed, h=32, w=48, chroma=True):
    v = make_video(2, w, h, seed=seed, chroma=chroma)
    return v.frames[0], v.frames[1]


def _const(value, h=16, w=16):
    return FramePlane(np.full((h, w), value, np.uint8),
                      np.full((h // 2, w // 2), value, np.uint8),
                      np.full((h // 2, w // 2), value, np.uint8))


KPS = quantize(np.zeros((10, 2)))


def test_blend_endpoints():
    for seed in range(20):
        f1, f2 = _pair(seed)
        ones = np.ones(f1.y.shape)
        assert bi_blend(f1, f2, ones) == f1
        assert bi_blend(f1, f2, 0 * ones) == f2


def test_blend_uniform_half_case():
    out = bi_blend(_const(100), _const(200), uniform_mask(16, 16, 0.5))
    assert np.all(out.y == 150) and np.all(out.u == 150) and np.all(out.v == 150)


def test_blend_rounds_half_away():
    # 0.5 * 100 + 0.5 * 101 = 100.5 -> 101
    out = bi_blend(_const(100), _const(101), uniform_mask(16, 16, 0.5))
    assert np.all(out.y == 101)


def test_blend_convex_and_symmetric():
    rng = np.random.default_rng(0)
    for seed in range(100):
        f1, f2 = _pair(seed)
        m = rng.random(f1.y.shape)
        out = bi_blend(f1, f2, m)
        for a, b, o in zip(f1.planes(), f2.planes(), out.planes()):
            assert np.all(o >= np.minimum(a, b)) and np.all(o <= np.maximum(a, b))
        swapped = bi_blend(f2, f1, 1 - m)
        for a, b in zip(out.planes(), swapped.planes()):
            assert np.abs(a.astype(int) - b.astype(int)).max() <= 1


def test_blend_errors():
    f1, f2 = _pair(0)
    with pytest.raises(StructuralError):
        bi_blend(f1, f2, np.ones((3, 3)))
    with pytest.raises(DomainError):
        bi_blend(f1, f2, np.full(f1.y.shape, 1.5))
    small, _ = _pair(0, h=16, w=16)
    with pytest.raises(StructuralError):
        bi_blend(f1, small, np.ones(f1.y.shape))


def test_downsample_mask_odd_edges():
    m = np.arange(15, dtype=float).reshape(3, 5)
    d = downsample_mask(m)
    assert d.shape == (2, 3)
    assert d[0, 0] == pytest.approx((0 + 1 + 5 + 6) / 4)
    assert d[1, 2] == pytest.approx(14.0)


def test_psnr_closed_forms():
    a = np.full((32, 32), 100, np.uint8)
    assert psnr_y(FramePlane(a), FramePlane(a)) == math.inf
    assert psnr_y(FramePlane(a), FramePlane(a + 1)) == pytest.approx(48.1308, abs=1e-4)
    assert psnr_y(FramePlane(a), FramePlane(a + 16)) == pytest.approx(
        10 * math.log10(255**2 / 256), abs=1e-9)


def test_psnr_symmetric_and_luma_only():
    f1, f2 = _pair(3)
    assert psnr_y(f1, f2) == psnr_y(f2, f1)
    other_chroma = FramePlane(f1.y, f2.u, f2.v)
    assert psnr_y(f1, other_chroma) == math.inf
    with pytest.raises(StructuralError):
        psnr_y(f1, _const(1))


def test_identity_generator_copies():
    f1, _ = _pair(4)
    out = identity_generator(f1, KPS)
    assert out == f1 and out.y is not f1.y


def test_cp_generator_is_identity():
    f1, _ = _pair(5)
    assert ExternalGenerator("cp {key} {out}")(f1, KPS) == f1
    assert external_generator("cp {key} {out}", f1, KPS) == f1


def test_generator_sees_keypoints(tmp_path):
    f1, _ = _pair(6)
    log = tmp_path / "kps.txt"
    ExternalGenerator(f"cp {{kps}} {log} && cp {{key}} {{out}}")(f1, KPS)
    assert len(log.read_text().strip().split(",")) == 20


def test_generator_respects_tmpdir(tmp_path, monkeypatch):
    monkeypatch.setenv("HKPC_TMPDIR", str(tmp_path))
    f1, _ = _pair(7)
    seen = tmp_path / "seen"
    ExternalGenerator(f"dirname {{key}} > {seen}; cp {{key}} {{out}}")(f1, KPS)
    assert seen.read_text().startswith(str(tmp_path))


@pytest.mark.parametrize("template", ["false {key} {out}", "true {key} {out}",
                                      "head -c 10 {key} > {out}"])
def test_generator_failures(template):
    f1, _ = _pair(8)
    with pytest.raises(GeneratorError):
        ExternalGenerator(template)(f1, KPS)


def test_generator_dimension_mismatch(tmp_path):
    from hkpc.y4m import write_pgm
    other = tmp_path / "o.pgm"
    write_pgm(other, np.zeros((8, 8), np.uint8))
    f1, _ = _pair(9)
    with pytest.raises(GeneratorError, match="expected"):
        ExternalGenerator(f"cp {other} {{out}} # {{key}}")(f1, KPS)


def test_generator_timeout():
    f1, _ = _pair(10)
    with pytest.raises(GeneratorError):
        ExternalGenerator("sleep 5; cp {key} {out}", timeout=0.2)(f1, KPS)


def test_generator_template_requires_placeholders():
    with pytest.raises(DomainError):
        ExternalGenerator("cp a {out}")


def test_masks():
    f1, f2 = _pair(11)
    m = UniformMask(0.25)(f1, f2, KPS)
    assert m.shape == f1.y.shape and np.all(m == 0.25)
    with pytest.raises(DomainError):
        UniformMask(2.0)
    ext = ExternalMask("cp {f1} {out}")(f1, f2, KPS)
    assert np.array_equal(ext, f1.y / 255.0)
    with pytest.raises(GeneratorError):
        ExternalMask("exit 3; {out}")(f1, f2, KPS)
