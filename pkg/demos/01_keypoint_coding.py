"""Lossless keypoint coding, step by step.

Quantize a drifting set of keypoints, look at the intra/inter residuals,
then entropy-code a segment and check that decoding gives back every byte.
"""

# %%
import numpy as np

from hkpc import (
    dequantize, decode_segment, encode_segment, exp_golomb_codeword, predict_inter,
    predict_intra, quantize,
)

rng = np.random.default_rng(0)
start = rng.uniform(-0.6, 0.6, size=(10, 2))
kps = np.clip(start + np.cumsum(rng.uniform(-0.01, 0.01, size=(9, 10, 2)), axis=0), -1, 1)

# %% Quantization: 10 keypoints -> 20 bytes per frame
q = quantize(kps)
print("frame 0 bytes:", q[0].tolist())
print("worst roundtrip error:", np.abs(dequantize(q) - kps).max(), "<= 1/255 =", 1 / 255)

# %% Prediction turns coordinates into small residuals
print("intra residuals:", predict_intra(q[0]).residuals.tolist())
print("inter residuals:", predict_inter(q[0], q[1]).residuals.tolist())

# %% Small residuals get short exp-Golomb codewords
for n in range(7):
    print(n, exp_golomb_codeword(n))

# %% The whole segment goes through one adaptive range coder
payload = encode_segment(q)
print(f"{len(q)} frames: {q.nbytes} raw bytes -> {len(payload)} coded bytes "
      f"({len(payload) / len(q):.2f} B/frame)")
assert np.array_equal(decode_segment(payload), q)

# %% A motionless face costs almost nothing
still = np.full((100, 20), 131, np.uint8)
print("100 still frames:", len(encode_segment(still)), "bytes")
