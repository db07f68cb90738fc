"""Complex AWGN channel and SNR bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SnrSpec:
    """An SNR given either per-symbol (es) or per-information-bit (eb)."""

    mode: str          # "es" or "eb"
    value_db: float
    rate: float        # overall rate in bits/symbol

    def __post_init__(self):
        if self.mode not in ("es", "eb"):
            raise ValueError(f"mode must be 'es' or 'eb', got {self.mode!r}")
        if self.rate <= 0:
            raise ValueError("rate must be positive")


def convert_snr(spec: SnrSpec) -> tuple[float, float]:
    """(Es/N0 dB, Eb/N0 dB) for the spec, via Es/N0 = R * Eb/N0."""
    shift = 10.0 * np.log10(spec.rate)
    if spec.mode == "es":
        return spec.value_db, spec.value_db - shift
    return spec.value_db + shift, spec.value_db


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)


def frame_rng(seed, frame: int = 0) -> np.random.Generator:
    """Counter-based generator for a (seed, frame) substream.

    Philox keyed on the pair gives independent, reproducible streams for
    frame-parallel simulation.
    """
    return np.random.Generator(np.random.Philox(key=np.uint64([seed, frame])))


def complex_awgn(shape, n0: float, rng: np.random.Generator):
    """Circularly-symmetric complex Gaussian noise with E|n|^2 = n0."""
    scale = np.sqrt(n0 / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit_awgn(x, esn0_linear: float, seed=0, frame: int = 0):
    """y = x + n with noise power N0 = 1/(Es/N0); Es = 1 assumed."""
    if esn0_linear <= 0:
        raise ValueError("Es/N0 must be positive")
    x = np.asarray(x, dtype=complex)
    rng = frame_rng(seed, frame)
    return x + complex_awgn(x.shape, 1.0 / esn0_linear, rng)
