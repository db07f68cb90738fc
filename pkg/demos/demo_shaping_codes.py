"""Build a few minimal-weight shaping codes and inspect their bias.

The codebook of an (n, k) shaping code holds the 2^k n-tuples of lowest
Hamming weight, so a transmitted codeword bit is 0 with probability p0 > 1/2.
Larger codebooks trade bias for rate: the (11, 10) code reaches the floor
p0 = 0.6230 permitted by the complexity bound n <= 20, k <= 10.
"""

import numpy as np

from apskshape.shaping import build_shaping_code, decode_message, encode

for n, k in [(4, 2), (3, 2), (9, 7), (11, 10)]:
    code = build_shaping_code(n, k, seed=0)
    weights = np.bincount(code.codebook.sum(axis=1))
    print(f"({n:2d},{k:2d}): rate {k}/{n}  p0 = {code.p0:.6f}  "
          f"weight profile {weights.tolist()}  column weights {code.column_weights.tolist()}")

print()
code = build_shaping_code(4, 2)
print("(4,2) codebook:", ["".join(map(str, row)) for row in code.codebook])

# soft decoding demo: noisy codeword-bit LLRs in, message extrinsics out
rng = np.random.default_rng(1)
msg = np.array([1, 0], dtype=np.uint8)
cw = encode(code, msg)
clean = np.where(cw == 0, 4.0, -4.0)
noisy = clean + rng.normal(0, 2.0, size=4)
le = decode_message(code, noisy, np.zeros(2))
print(f"message {msg} -> codeword {cw}; noisy LLRs {np.round(noisy, 2)}")
print(f"decoded extrinsics {np.round(le, 2)} -> hard {np.asarray(le < 0, dtype=int)}")
