"""End-to-end link demo: shaped vs uniform BICM-ID at a common Eb/N0.

Runs a handful of frames through the full transmit chain and iterative
receiver on short (n = 2160) codes.  The shaped system converges in fewer
iterations and survives noise levels where the uniform chain still fails.
"""

import numpy as np

from apskshape.channel import complex_awgn, db_to_linear, frame_rng
from apskshape.cli import build_preset_system
from apskshape.txrx import receive, transmit

EBN0_DB = 6.0
N_FRAMES = 8

for preset in ("shaped-bicmid-23opt", "uniform-bicmid-35std"):
    cfg = build_preset_system(preset, 2160, seed=3)
    n0 = 1.0 / db_to_linear(EBN0_DB + 10 * np.log10(cfg.rate))
    ok = 0
    iters = []
    for frame in range(N_FRAMES):
        rng = frame_rng(42, frame)
        bits = rng.integers(0, 2, size=cfg.ldpc.k, dtype=np.uint8)
        x = transmit(cfg, bits)
        y = x + complex_awgn(x.shape, n0, rng)
        res = receive(cfg, y, n0, max_iterations=80)
        good = res.converged and np.array_equal(res.bits, bits)
        ok += good
        iters.append(res.iterations)
    print(f"{preset:24s} @ Eb/N0 {EBN0_DB} dB: {ok}/{N_FRAMES} frames clean, "
          f"iterations {iters}")
