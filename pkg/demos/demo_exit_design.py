"""EXIT-chart view of the shaped receiver and a small degree search.

Generates the detector characteristic of the shaped 32-APSK front end
(demapper plus (4,2) shaping decoder), folds it into the variable-node
curve of the rate-2/3 code, and locates the convergence threshold where
the tunnel against the dc=10 check curve just opens.
"""

import numpy as np

from apskshape.constellation import build_apsk, shaping_strategy
from apskshape.exitlab import (
    CachingDetector,
    DetectorSpec,
    cnd_curve,
    threshold_search,
    vnd_curve,
)
from apskshape.ldpc import paper_distribution
from apskshape.shaping import build_shaping_code

const = build_apsk(32, (2.64, 4.64))
scode = build_shaping_code(4, 2)
spec = DetectorSpec(const, shaping_strategy(32, 1, scode.p0), scode)
provider = CachingDetector(spec, n_samples=100_000, seed=0)

dist = paper_distribution("rate23-optimized")
print(f"degree profile dv={dist.dv} a={tuple(round(a, 4) for a in dist.a)} dc={dist.dc}")

esn0 = 4.73 + 10 * np.log10(3.0)
det = provider(esn0)
vnd = vnd_curve(det, dist)
cnd = cnd_curve(dist.dc, det.ia)
print(f"\ncurves at Eb/N0 = 4.73 dB (Es/N0 = {esn0:.2f} dB):")
print("  IA     detector   VND      CND")
for i in range(0, det.ia.size, 4):
    print(f"  {det.ia[i]:.2f}   {det.ie[i]:.4f}   {vnd.ie[i]:.4f}   {cnd.ie[i]:.4f}")

thr = threshold_search(provider, dist, 8.0, 12.0, resolution_db=0.02)
print(f"\nconvergence threshold: Es/N0 = {thr:.2f} dB -> Eb/N0 = {thr - 10*np.log10(3):.2f} dB")
