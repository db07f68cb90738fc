"""EXIT-chart machinery: J-function algebra, Monte Carlo detector transfer
characteristics (with the shaping decoder absorbed into the detector when
shaping is active), VND/CND curves, convergence-threshold search, and
variable-degree optimization under a fixed check degree.

Mutual informations are per-bit values in [0, 1].  The detector characteristic
feeds the variable-node curve through

    IE_VND(IA, dv) = J( sqrt( (dv-1) Jinv(IA)^2 + Jinv(IE_DET(IA))^2 ) )

mixed over degrees by edge fractions, while the check side follows
IE_CND(IA) = 1 - J( sqrt(dc-1) Jinv(1-IA) ).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.interpolate import PchipInterpolator

from . import shaping as shaping_mod
from .channel import db_to_linear
from .constellation import Constellation, ShapingStrategy, with_pmf
from .demod import demap_block, initial_priors
from .ldpc import DegreeDistribution, solve_three_degree

_SIGMA_MAX = 12.0
_J_TABLE = None


def _build_j_table():
    sigmas = np.arange(0.0, _SIGMA_MAX + 1e-9, 1e-3)
    t, w = hermgauss(64)
    # L ~ N(sigma^2/2, sigma^2); E[log2(1 + e^-L)] by Gauss-Hermite
    means = sigmas**2 / 2.0
    samples = means[:, None] + np.sqrt(2.0) * sigmas[:, None] * t[None, :]
    vals = np.log1p(np.exp(-np.clip(samples, -700, 700))) / np.log(2.0)
    j = 1.0 - (vals @ w) / np.sqrt(np.pi)
    j[0] = 0.0
    j = np.maximum.accumulate(j)
    # strictly increasing subset for the inverse map
    keep = np.concatenate([[True], np.diff(j) > 0])
    fwd = PchipInterpolator(sigmas, j)
    inv = PchipInterpolator(j[keep], sigmas[keep])
    return fwd, inv, float(j[-1])


def _table():
    global _J_TABLE
    if _J_TABLE is None:
        _J_TABLE = _build_j_table()
    return _J_TABLE


def j_function(sigma):
    """Mutual information of a consistent Gaussian LLR with std `sigma`."""
    fwd, _, _ = _table()
    sigma = np.asarray(sigma, dtype=float)
    out = np.where(sigma >= _SIGMA_MAX, 1.0, fwd(np.clip(sigma, 0.0, _SIGMA_MAX)))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def j_inverse(mi):
    """Inverse of `j_function`; saturates at the table edge near mi = 1."""
    _, inv, j_max = _table()
    mi = np.asarray(mi, dtype=float)
    if np.any(mi < 0) or np.any(mi > 1):
        raise ValueError("mutual information must lie in [0, 1]")
    out = np.where(mi >= j_max, _SIGMA_MAX, inv(np.clip(mi, 0.0, j_max)))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def mi_from_llrs(bits, llrs) -> float:
    """Time-averaging estimator of the mutual information between bits and
    their LLRs (log P0/P1 convention)."""
    bits = np.asarray(bits, dtype=float).ravel()
    llrs = np.clip(np.asarray(llrs, dtype=float).ravel(), -shaping_mod.LLR_MAX,
                   shaping_mod.LLR_MAX)
    aligned = (1.0 - 2.0 * bits) * llrs
    return float(1.0 - np.mean(np.log1p(np.exp(-aligned))) / np.log(2.0))


def gaussian_priors(bits, sigma: float, rng) -> np.ndarray:
    """Consistent conditionally-Gaussian a priori LLRs for the given bits."""
    bits = np.asarray(bits, dtype=float)
    if sigma == 0.0:
        return np.zeros_like(bits)
    sign = 1.0 - 2.0 * bits
    return sigma**2 / 2.0 * sign + sigma * rng.standard_normal(bits.shape)


@dataclass(frozen=True)
class ExitCurve:
    ia: np.ndarray
    ie: np.ndarray
    context: str
    esn0_db: float | None = None


@dataclass(frozen=True)
class DetectorSpec:
    """The modulation front end seen by the LDPC variable nodes: the demapper
    alone (uniform) or demapper plus shaping decoder (shaped)."""

    constellation: Constellation
    strategy: ShapingStrategy | None = None
    shaping_code: shaping_mod.ShapingCode | None = None

    def __post_init__(self):
        if (self.strategy is None) != (self.shaping_code is None):
            raise ValueError("strategy and shaping_code must be given together")

    @property
    def shaped(self) -> bool:
        return self.strategy is not None


DEFAULT_IA_GRID = np.linspace(0.0, 1.0, 21)


def detector_characteristic(spec: DetectorSpec, esn0_db: float, ia_grid=None,
                            n_samples: int = 200_000, seed: int = 0,
                            check_convergence: bool = False) -> ExitCurve:
    """Monte Carlo transfer characteristic I_E(I_A) of the detector.

    `n_samples` counts modulated label bits per grid point.  The a priori
    input on the detector's code-side bits is conditionally Gaussian with
    sigma = Jinv(I_A).  With `check_convergence`, a per-point estimator
    confidence interval wider than 0.005 flags the sample count as too low.
    """
    ia_grid = DEFAULT_IA_GRID if ia_grid is None else np.asarray(ia_grid, dtype=float)
    if spec.shaped:
        const = with_pmf(spec.constellation, spec.strategy)
    else:
        const = spec.constellation
    m = const.m
    esn0 = db_to_linear(esn0_db)
    n0 = 1.0 / esn0
    ies = np.empty_like(ia_grid)
    for i, ia in enumerate(ia_grid):
        rng = np.random.default_rng((seed, i))
        sigma = j_inverse(float(ia))
        if not spec.shaped:
            n_sym = max(1, n_samples // m)
            z = rng.integers(0, 2, size=(n_sym, m), dtype=np.uint8)
            x = const.map_bits(z)
            y = x + np.sqrt(n0 / 2) * (rng.standard_normal(n_sym)
                                       + 1j * rng.standard_normal(n_sym))
            la = gaussian_priors(z, sigma, rng)
            le = demap_block(const, y, n0, la)
            ies[i] = mi_from_llrs(z, le)
            if check_convergence:
                _flag_wide_interval(z, le, float(ia))
        else:
            ies[i] = _shaped_detector_point(spec, const, n0, sigma, n_samples, rng)
    return ExitCurve(ia=ia_grid, ie=ies, context="detector", esn0_db=esn0_db)


def _flag_wide_interval(bits, llrs, ia: float, n_chunks: int = 10) -> None:
    """Chunked-bootstrap confidence width of the MI estimate; raises when the
    sample count is too low for curve work."""
    bits = np.asarray(bits).ravel()
    llrs = np.asarray(llrs).ravel()
    size = bits.size // n_chunks
    vals = [mi_from_llrs(bits[j * size:(j + 1) * size],
                         llrs[j * size:(j + 1) * size]) for j in range(n_chunks)]
    width = 2 * 1.96 * float(np.std(vals, ddof=1)) / np.sqrt(n_chunks)
    if width > 0.005:
        raise ValueError(
            f"detector sample count too low: CI width {width:.4f} > 0.005 at IA={ia}")


def _shaped_detector_point(spec, const, n0, sigma, n_samples, rng) -> float:
    """One Monte Carlo point of the shaped detector: unbiased bits drive the
    shaping encoder and modulator; one demap pass and one shaping decode pass
    (both directions) turn channel output plus Gaussian priors into extrinsic
    LLRs on the unshaped and pre-shaping bits."""
    scode = spec.shaping_code
    strat = spec.strategy
    m, g = const.m, strat.g
    # whole symbols per group of blocks: n_blocks * n / g must be an integer
    step = g // np.gcd(scode.n, g)
    approx = max(1, n_samples * g // (m * scode.n))
    n_blocks = max(step, approx // step * step)
    n_sym = n_blocks * scode.n // g

    d = rng.integers(0, 2, size=(n_blocks, scode.k), dtype=np.uint8)
    s2 = rng.integers(0, 2, size=(n_sym, m - g), dtype=np.uint8)
    cwords = shaping_mod.encode(scode, d)
    z = np.empty((n_sym, m), dtype=np.uint8)
    z[:, list(strat.bit_positions)] = cwords.reshape(n_sym, g)
    unshaped = [p for p in range(m) if p not in strat.bit_positions]
    z[:, unshaped] = s2
    x = const.map_bits(z)
    y = x + np.sqrt(n0 / 2) * (rng.standard_normal(n_sym)
                               + 1j * rng.standard_normal(n_sym))

    La_d = gaussian_priors(d, sigma, rng)
    La_s2 = gaussian_priors(s2, sigma, rng)
    # codeword-direction shaping pass supplies the demapper's shaped-bit priors
    Le_c = shaping_mod.decode_codeword(scode, np.zeros((n_blocks, scode.n)), La_d)
    La_z = np.empty((n_sym, m))
    La_z[:, list(strat.bit_positions)] = Le_c.reshape(n_sym, g)
    La_z[:, unshaped] = La_s2
    Le_z = demap_block(const, y, n0, La_z)
    # message-direction pass turns shaped-bit extrinsics into pre-shaping LLRs
    La_c = Le_z[:, list(strat.bit_positions)].reshape(n_blocks, scode.n)
    Le_d = shaping_mod.decode_message(scode, La_c, La_d)
    bits = np.concatenate([d.ravel(), s2.ravel()])
    llrs = np.concatenate([Le_d.ravel(), Le_z[:, unshaped].ravel()])
    return mi_from_llrs(bits, llrs)


def vnd_curve(det: ExitCurve, dist: DegreeDistribution, esn0_db: float | None = None) -> ExitCurve:
    """Variable-node transfer curve: per-degree combining of the a priori
    and detector LLR variances, mixed by edge fractions.

    A degree-dv node feeds the detector the combination of all dv check
    messages, so the detector characteristic is evaluated at
    J(sqrt(dv) Jinv(IA)) per degree class before the (dv-1)-edge combining.
    """
    det_fn = PchipInterpolator(det.ia, det.ie)
    sig_a = j_inverse(det.ia)
    ie = np.zeros_like(det.ia)
    for frac, dv in zip(dist.b, dist.dv):
        ia_det = j_function(np.sqrt(dv) * sig_a)
        ie_det = np.clip(det_fn(np.clip(ia_det, 0.0, 1.0)), 0.0, 1.0)
        sig_det = j_inverse(ie_det)
        ie += frac * j_function(np.sqrt((dv - 1) * sig_a**2 + sig_det**2))
    return ExitCurve(ia=det.ia, ie=ie, context=f"vnd(dc={dist.dc})",
                     esn0_db=esn0_db if esn0_db is not None else det.esn0_db)


def cnd_curve(dc: int, ia_grid=None) -> ExitCurve:
    """Check-node transfer curve for a degree-dc check."""
    if dc < 2:
        raise ValueError("check degree must be at least 2")
    ia = DEFAULT_IA_GRID if ia_grid is None else np.asarray(ia_grid, dtype=float)
    ie = 1.0 - j_function(np.sqrt(dc - 1) * j_inverse(1.0 - ia))
    return ExitCurve(ia=ia, ie=ie, context=f"cnd(dc={dc})")


def cnd_inverse_on(dc: int, abscissa) -> np.ndarray:
    """IA values at which the CND curve attains the given IE abscissa."""
    fine = np.linspace(0.0, 1.0, 2001)
    ie = cnd_curve(dc, fine).ie
    keep = np.concatenate([[True], np.diff(ie) > 0])
    interp = PchipInterpolator(ie[keep], fine[keep])
    x = np.asarray(abscissa, dtype=float)
    out = np.where(x <= ie[0], 0.0, np.where(x >= ie[-1], 1.0, interp(np.clip(x, ie[0], ie[-1]))))
    return out


def tunnel_open(det: ExitCurve, dist: DegreeDistribution,
                target: float = 0.9999) -> bool:
    """True when the VND curve clears the inverted CND curve everywhere below
    the convergence target."""
    vnd = vnd_curve(det, dist)
    need = cnd_inverse_on(dist.dc, vnd.ia)
    mask = vnd.ia <= target
    return bool(np.all(vnd.ie[mask] > need[mask]))


def threshold_search(detector_provider, dist: DegreeDistribution,
                     lo_db: float, hi_db: float, resolution_db: float = 0.01,
                     target: float = 0.9999) -> float:
    """Smallest Es/N0 (dB) with an open decoding tunnel, by bisection.

    `detector_provider(esn0_db)` returns the detector ExitCurve; memoize it
    when scanning many degree pairs.
    """
    if not tunnel_open(detector_provider(hi_db), dist, target):
        raise ValueError(f"tunnel closed at the upper bracket {hi_db} dB")
    if tunnel_open(detector_provider(lo_db), dist, target):
        return lo_db
    lo, hi = lo_db, hi_db
    while hi - lo > resolution_db:
        mid = 0.5 * (lo + hi)
        if tunnel_open(detector_provider(mid), dist, target):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class DegreeSearchSpace:
    dv2_choices: tuple[int, ...] = (3, 4)
    dv3_max: int = 25
    target: float = 0.9999


class CachingDetector:
    """Memoizing detector-curve provider for threshold searches."""

    def __init__(self, spec: DetectorSpec, ia_grid=None, n_samples: int = 200_000,
                 seed: int = 0):
        self.spec = spec
        self.ia_grid = DEFAULT_IA_GRID if ia_grid is None else np.asarray(ia_grid)
        self.n_samples = n_samples
        self.seed = seed
        self._cache = {}

    def __call__(self, esn0_db: float) -> ExitCurve:
        key = round(float(esn0_db), 6)
        if key not in self._cache:
            self._cache[key] = detector_characteristic(
                self.spec, key, self.ia_grid, self.n_samples, self.seed)
        return self._cache[key]


def optimize_degrees(detector_provider, rate_num: int, rate_den: int, dc: int,
                     space: DegreeSearchSpace | None = None,
                     lo_db: float = 0.0, hi_db: float = 14.0,
                     resolution_db: float = 0.01):
    """Exhaustive scan of (dv2, dv3) pairs; returns (best distribution,
    threshold dB, per-candidate report rows)."""
    space = space or DegreeSearchSpace()
    rows = []
    best = None
    for dv2 in space.dv2_choices:
        for dv3 in range(dv2 + 1, space.dv3_max + 1):
            dist = solve_three_degree(rate_num, rate_den, dv2, dv3, dc)
            if dist is None:
                continue
            try:
                thr = threshold_search(detector_provider, dist, lo_db, hi_db,
                                       resolution_db, space.target)
            except ValueError:
                continue
            rows.append({"dv2": dv2, "dv3": dv3, "a2": dist.a[1], "a3": dist.a[2],
                         "threshold_db": thr})
            if best is None or thr < best[1]:
                best = (dist, thr)
    if best is None:
        raise ValueError("no feasible degree distribution in the search space")
    return best[0], best[1], rows
