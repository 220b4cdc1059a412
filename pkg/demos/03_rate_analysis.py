"""Bitrate accounting on the bundled published rate tables.

Averages key and non-key costs, converts units, compares curves with the
BD-rate metric and picks an operating point under a bandwidth budget.
"""

# %%
from hkpc import (
    VideoParams, average_bitrate, bd_rate, convert_units, curve_from_rows, delay_frames, plan,
    read_rate_table, select_rows,
)

vp = VideoParams(256, 256, 30)
rows = read_rate_table()

# %% One row: key frames every 10 frames at QP27
(row,) = select_rows(rows, label="Ours-RA", qp=27, interval=10)
bpf = average_bitrate(row.key_bpf, 8 * row.nonkey_Bpf, row.interval)
print(f"{bpf:.1f} bpf, {convert_units(bpf, vp)['bpp'] * 1e3:.2f}e-3 bpp, "
      f"{convert_units(bpf, vp)['kbps']:.2f} KB/s (table: {row.avg_bpf}, {row.bpp_e3}, {row.kbps})")

# %% Longer intervals amortize the key frame
for n in (5, 10, 20, 50, 100):
    (r,) = select_rows(rows, label="Ours-LDP", qp=32, interval=n)
    print(f"N={n:3d}: {r.avg_bpf:7.1f} bpf  {r.psnr_y:.2f} dB  delay LDP {delay_frames('LDP', n)}"
          f" / RA {delay_frames('RA', n)} frames")

# %% BD-rate against the conventional codec
for mode in ("RA", "LDP"):
    anchor = curve_from_rows(select_rows(rows, label=f"VVenC-{mode}"))
    test = curve_from_rows(select_rows(rows, label=f"Ours-{mode}", interval=10))
    print(f"{mode}: BD-rate {bd_rate(anchor, test):+.2f}%")

# %% What fits in 0.5 KB/s?
pts = [r.point() for r in select_rows(rows, label="Ours-LDP")]
best = plan(0.5, "LDP", pts, vp)
print("0.5 KB/s, LDP ->", best)
print("0.5 KB/s, LDP, delay <= 20 frames ->", plan(0.5, "LDP", pts, vp, max_delay_frames=20))
