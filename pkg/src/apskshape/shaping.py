"""Nonlinear minimal-weight shaping codes and their soft MAP decoders.

An (n, k) shaping code is the set of the 2^k distinct n-tuples of lowest
possible Hamming weight, so a codeword bit is zero with probability p0 > 1/2
when messages are equiprobable.  Decoding is exact MAP by codebook
enumeration (2^k <= 1024), producing extrinsic LLRs in both directions:
toward the message bits and toward the codeword bits.

LLR convention throughout: L = log P(bit = 0) / P(bit = 1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

# Saturation bound applied to LLRs before and after exponent-domain work.
LLR_MAX = 50.0

MAX_N = 20
MAX_K = 10


def weight_profile(n: int, k: int) -> tuple[int, int, int]:
    """(boundary weight w, count of weight-w words used, total ones count)
    of the minimal-weight codebook, by binomial counting alone."""
    size = 2 ** k
    total = 0
    ones = 0
    for w in range(n + 1):
        c = comb(n, w)
        if total + c >= size:
            need = size - total
            return w, need, ones + need * w
        total += c
        ones += w * c
    raise ValueError(f"2^{k} exceeds the number of {n}-tuples")


def p0_exact(n: int, k: int) -> Fraction:
    """Zero-probability of a codeword bit, exact."""
    _, _, ones = weight_profile(n, k)
    return 1 - Fraction(ones, n * 2 ** k)


@dataclass(frozen=True)
class ShapingCode:
    n: int
    k: int
    codebook: np.ndarray          # (2^k, n) uint8, weight-ascending order
    message_bits: np.ndarray      # (2^k, k) uint8, row j = binary of j
    p0: float
    column_weights: np.ndarray
    _index_of: dict = field(repr=False)

    @property
    def rate(self) -> float:
        return self.k / self.n

    def message_of(self, codeword) -> int:
        """Message index of a codeword; KeyError if not in the codebook."""
        key = bytes(np.asarray(codeword, dtype=np.uint8))
        return self._index_of[key]


def build_shaping_code(n: int, k: int, seed: int = 0,
                       allow_large: bool = False) -> ShapingCode:
    """Construct the (n, k) minimal-weight codebook.

    All full weight classes below the boundary weight are included; the
    boundary class is filled by greedily picking words that keep the maximum
    column weight low, with ties broken in seeded pseudorandom order.
    """
    if k >= n:
        raise ValueError(f"need k < n, got ({n}, {k})")
    if not allow_large and (n > MAX_N or k > MAX_K):
        raise ValueError(f"({n}, {k}) exceeds the (n<={MAX_N}, k<={MAX_K}) complexity bound")

    size = 2 ** k
    w_boundary, need, ones_total = weight_profile(n, k)

    rows = [np.zeros(n, dtype=np.uint8)]
    for w in range(1, w_boundary):
        for pos in itertools.combinations(range(n), w):
            row = np.zeros(n, dtype=np.uint8)
            row[list(pos)] = 1
            rows.append(row)
    if w_boundary == 0:
        rows = rows[:size]
    elif need:
        cands = np.zeros((comb(n, w_boundary), n), dtype=np.uint8)
        for i, pos in enumerate(itertools.combinations(range(n), w_boundary)):
            cands[i, list(pos)] = 1
        rng = np.random.default_rng(seed)
        cands = cands[rng.permutation(len(cands))]
        counts = np.sum(rows, axis=0, dtype=np.int64)
        alive = np.ones(len(cands), dtype=bool)
        for _ in range(need):
            peak = (counts[None, :] + cands).max(axis=1)
            peak[~alive] = np.iinfo(np.int64).max
            pick = int(np.argmin(peak))
            rows.append(cands[pick])
            counts += cands[pick]
            alive[pick] = False

    codebook = np.array(rows, dtype=np.uint8)
    assert codebook.shape == (size, n)
    col_w = codebook.sum(axis=0).astype(np.int64)
    assert col_w.sum() == ones_total
    p0 = float(1 - Fraction(int(ones_total), n * size))

    msg = ((np.arange(size)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
    index_of = {bytes(row): j for j, row in enumerate(codebook)}
    for arr in (codebook, msg, col_w):
        arr.setflags(write=False)
    return ShapingCode(n=n, k=k, codebook=codebook, message_bits=msg,
                       p0=p0, column_weights=col_w, _index_of=index_of)


def encode(code: ShapingCode, message):
    """Encode a k-bit message (or an (L, k) batch) to codeword bits."""
    message = np.asarray(message, dtype=np.uint8)
    batched = message.ndim == 2
    msg2d = message if batched else message[None, :]
    if msg2d.shape[1] != code.k:
        raise ValueError(f"message length {msg2d.shape[1]} != k={code.k}")
    idx = msg2d @ (1 << np.arange(code.k - 1, -1, -1))
    out = code.codebook[idx]
    return out if batched else out[0]


def _clip(llrs):
    return np.clip(np.asarray(llrs, dtype=float), -LLR_MAX, LLR_MAX)


def _lse_masked(scores, mask):
    """log-sum-exp of scores[..., mask] along the last axis; -inf if empty."""
    if not mask.any():
        return np.full(scores.shape[:-1], -np.inf)
    sel = scores[..., mask]
    top = sel.max(axis=-1)
    out = top + np.log(np.exp(sel - top[..., None]).sum(axis=-1))
    return np.where(np.isfinite(top), out, top)


def _map_extrinsics(scores_fixed, priors, bit_matrix):
    """Extrinsic LLRs for each column of `bit_matrix`.

    scores_fixed: (..., 2^k) log-weights from the other input, complete.
    priors: (..., width) LLRs on the bits of `bit_matrix` (width columns);
        the column being decided is excluded from its own score, so the
        output is extrinsic by construction.
    """
    priors = _clip(priors)
    width = bit_matrix.shape[1]
    out = np.empty(priors.shape, dtype=float)
    cols = np.arange(width)
    for j in range(width):
        keep = cols != j
        part = scores_fixed - priors[..., keep] @ bit_matrix[:, keep].T.astype(float)
        zero = bit_matrix[:, j] == 0
        out[..., j] = _lse_masked(part, zero) - _lse_masked(part, ~zero)
    return np.clip(out, -LLR_MAX, LLR_MAX)


def decode_message(code: ShapingCode, La_c, La_d):
    """Extrinsic LLRs on the message bits given codeword-bit and message-bit
    priors.  Accepts (n,)/(k,) vectors or (L, n)/(L, k) batches."""
    La_c = _clip(La_c)
    La_d = np.asarray(La_d, dtype=float)
    base = -La_c @ code.codebook.T.astype(float)
    return _map_extrinsics(base, La_d, code.message_bits)


def decode_codeword(code: ShapingCode, La_c, La_d):
    """Extrinsic LLRs on the codeword bits; mirror of `decode_message` with
    the roles of message and codeword exchanged."""
    La_d = _clip(La_d)
    La_c = np.asarray(La_c, dtype=float)
    base = -La_d @ code.message_bits.T.astype(float)
    return _map_extrinsics(base, La_c, code.codebook)


def export_codebook(code: ShapingCode, path) -> None:
    """Write the codebook as text: a header line, then one codeword per line."""
    with open(path, "w") as fh:
        fh.write(f"# n={code.n} k={code.k} p0={code.p0!r}\n")
        for row in code.codebook:
            fh.write("".join(str(int(b)) for b in row) + "\n")
