"""Symbol-by-symbol MAP demapper producing extrinsic bit LLRs.

For a received sample y and per-bit priors La(z), the extrinsic LLR of label
bit k weighs every constellation point by its Gaussian channel metric
exp(-|y-x|^2/N0) times the prior likelihood of the other m-1 label bits.
The bit's own prior never enters its output.

LLR convention: L = log P(bit = 0) / P(bit = 1), so a prior La favors
bit value 0 when positive and a point with label bit 1 is weighted by
exp(-La).
"""

from __future__ import annotations

import numpy as np

from .constellation import Constellation, ShapingStrategy
from .shaping import LLR_MAX


def max_star(a, b):
    """max(a, b) + log(1 + exp(-|a - b|)), the exact Jacobian logarithm."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    hi = np.maximum(a, b)
    with np.errstate(invalid="ignore"):
        diff = np.abs(a - b)
        corr = np.log1p(np.exp(-diff))
    # both -inf: the correction is ill-defined but the result is -inf
    return np.where(np.isfinite(hi), hi + np.where(np.isnan(corr), 0.0, corr), hi)


def max_star_chain(values):
    """Left-to-right max-star reduction of a 1-D sequence."""
    values = np.asarray(values, dtype=float)
    acc = values[0]
    for v in values[1:]:
        acc = max_star(acc, v)
    return acc


def _lse(scores, mask):
    """log-sum-exp over the masked entries of the last axis."""
    sel = scores[..., mask]
    top = sel.max(axis=-1)
    with np.errstate(invalid="ignore"):
        out = top + np.log(np.exp(sel - top[..., None]).sum(axis=-1))
    return np.where(np.isfinite(top), out, top)


def demap_block(c: Constellation, y, n0: float, La_z=None, max_log: bool = False):
    """Extrinsic LLRs for a block of symbols.

    Parameters
    ----------
    y : (N,) complex channel outputs.
    n0 : one-sided noise spectral density.
    La_z : (N, m) priors on the label bits, or None for zero priors.
    max_log : replace the exact max-star reduction by a plain max
        (the usual speed/accuracy trade; off by default).

    Returns (N, m) extrinsic LLRs.
    """
    if n0 <= 0:
        raise ValueError("N0 must be positive")
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    n = y.size
    if La_z is None:
        La_z = np.zeros((n, c.m))
    La_z = np.clip(np.asarray(La_z, dtype=float).reshape(n, c.m), -LLR_MAX, LLR_MAX)

    bits = c.labels.astype(float)                       # (M, m)
    gauss = -np.abs(y[:, None] - c.points[None, :]) ** 2 / n0   # (N, M)
    reduce = _max_only if max_log else _lse
    out = np.empty((n, c.m))
    cols = np.arange(c.m)
    for k in range(c.m):
        keep = cols != k
        scores = gauss - La_z[:, keep] @ bits[:, keep].T
        zero = c.labels[:, k] == 0
        out[:, k] = reduce(scores, zero) - reduce(scores, ~zero)
    return np.clip(out, -LLR_MAX, LLR_MAX)


def _max_only(scores, mask):
    return scores[..., mask].max(axis=-1)


def demap_symbol(c: Constellation, y: complex, n0: float, La_z=None):
    """Extrinsic LLRs (length m) for one received symbol."""
    prior = None if La_z is None else np.asarray(La_z, dtype=float)[None, :]
    return demap_block(c, np.array([y]), n0, prior)[0]


def initial_priors(c: Constellation, strategy: ShapingStrategy | None):
    """First-iteration priors: log(p0/p1) on shaping bits, zero elsewhere."""
    la = np.zeros(c.m)
    if strategy is not None and strategy.g > 0:
        la[list(strategy.bit_positions)] = np.log(strategy.p0 / (1.0 - strategy.p0))
    return la
