import numpy as np
import pytest
from scipy.integrate import quad

from apskshape.channel import db_to_linear
from apskshape.constellation import build_apsk, shaping_strategy
from apskshape.exitlab import (
    CachingDetector,
    DEFAULT_IA_GRID,
    DegreeSearchSpace,
    DetectorSpec,
    ExitCurve,
    cnd_curve,
    cnd_inverse_on,
    detector_characteristic,
    gaussian_priors,
    j_function,
    j_inverse,
    mi_from_llrs,
    optimize_degrees,
    threshold_search,
    tunnel_open,
    vnd_curve,
)
from apskshape.infotheory import bicm_information_rate
from apskshape.ldpc import DegreeDistribution, paper_distribution
from apskshape.shaping import build_shaping_code


def j_oracle(sigma):
    """Independent numeric-integration evaluation of the J-function."""
    if sigma == 0:
        return 0.0
    mean, var = sigma**2 / 2.0, sigma**2

    def integrand(l):
        return (np.exp(-((l - mean) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
                * np.log2(1 + np.exp(-l)))

    val, _ = quad(integrand, mean - 12 * sigma, mean + 12 * sigma, limit=200)
    return 1.0 - val


def test_j_endpoints():
    assert j_function(0.0) == 0.0
    assert j_function(20.0) > 0.9999
    assert j_inverse(0.0) == 0.0


def test_j_matches_integration_oracle():
    # the tabulated Gauss-Hermite evaluation agrees with adaptive quadrature
    # to about 1e-6 (the softplus tail limits fixed-node accuracy)
    for s in (0.1, 0.5, 1.0, 2.0, 5.0):
        assert j_function(s) == pytest.approx(j_oracle(s), abs=5e-6)


def test_j_roundtrip():
    for s in (0.1, 0.5, 1.0, 2.0, 5.0):
        assert j_inverse(j_function(s)) == pytest.approx(s, abs=1e-6)


def test_j_inverse_rejects_out_of_range():
    with pytest.raises(ValueError):
        j_inverse(1.5)
    with pytest.raises(ValueError):
        j_inverse(-0.1)


def test_cnd_endpoints_and_oracle():
    curve = cnd_curve(10)
    assert curve.ie[-1] == pytest.approx(1.0, abs=1e-9)   # IA = 1
    assert curve.ie[0] == pytest.approx(0.0, abs=1e-6)    # IA = 0
    assert np.all(np.diff(curve.ie) >= 0)
    # direct formula evaluation with the integration oracle at IA = 0.9
    got = cnd_curve(11, np.array([0.9])).ie[0]
    want = 1.0 - j_oracle(np.sqrt(10) * j_inverse(1 - 0.9))
    assert got == pytest.approx(want, abs=1e-6)


def test_cnd_inverse_consistency():
    # below IA ~ 0.1 the dc=10 curve is under double-precision resolution,
    # so round-trip the invertible region only
    fine = np.linspace(0.1, 0.98, 25)
    curve = cnd_curve(10, fine)
    back = cnd_inverse_on(10, curve.ie)
    assert np.max(np.abs(back - fine)) < 1e-4


def test_vnd_degenerate_single_edge():
    ia = DEFAULT_IA_GRID
    det = ExitCurve(ia=ia, ie=0.3 + 0.5 * ia, context="synthetic", esn0_db=0.0)
    dist = DegreeDistribution(dv=(1,), a=(1.0,), dc=6)
    out = vnd_curve(det, dist)
    assert np.max(np.abs(out.ie - det.ie)) < 1e-6


def test_vnd_single_degree_mixture_is_identity():
    ia = DEFAULT_IA_GRID
    det = ExitCurve(ia=ia, ie=0.4 + 0.4 * ia, context="synthetic", esn0_db=0.0)
    d3 = DegreeDistribution(dv=(3,), a=(1.0,), dc=6)
    mixed = vnd_curve(det, d3)
    # one degree class: the mixture is the per-degree curve itself, with the
    # detector evaluated at the all-edges prior quality J(sqrt(3) Jinv(IA))
    sig = np.array([j_inverse(a) for a in ia])
    ia_det = np.clip([j_function(np.sqrt(3) * s) for s in sig], 0, 1)
    ie_det = np.clip(0.4 + 0.4 * np.asarray(ia_det), 0, 1)
    want = [j_function(np.sqrt(2 * s**2 + j_inverse(v) ** 2))
            for s, v in zip(sig, ie_det)]
    assert np.max(np.abs(mixed.ie - want)) < 1e-6
    assert np.all(np.diff(mixed.ie) >= -1e-9)
    assert mixed.ie[-1] == pytest.approx(1.0, abs=1e-6)


def test_mi_estimator_limits():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=20000)
    perfect = np.where(bits == 0, 50.0, -50.0)
    assert mi_from_llrs(bits, perfect) == pytest.approx(1.0, abs=1e-9)
    assert mi_from_llrs(bits, np.zeros_like(perfect)) == pytest.approx(0.0, abs=1e-12)


def test_gaussian_priors_consistency():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, size=200_000)
    sigma = 2.0
    la = gaussian_priors(bits, sigma, rng)
    assert mi_from_llrs(bits, la) == pytest.approx(j_function(sigma), abs=0.005)
    assert np.all(gaussian_priors(bits, 0.0, rng) == 0.0)


def test_detector_at_zero_prior_equals_bicm_capacity():
    c = build_apsk(32, (2.64, 4.64))
    spec = DetectorSpec(c)
    for db in (8.0, 9.5):
        det = detector_characteristic(spec, db, ia_grid=np.array([0.0]),
                                      n_samples=400_000, seed=7)
        bicm = bicm_information_rate(c, c.pmf, db_to_linear(db))
        assert det.ie[0] * c.m == pytest.approx(bicm, abs=0.01)


def test_detector_monotone_in_prior_quality():
    c = build_apsk(32, (2.64, 4.64))
    det = detector_characteristic(DetectorSpec(c), 8.8,
                                  ia_grid=np.linspace(0, 1, 6),
                                  n_samples=300_000, seed=8)
    assert np.all(np.diff(det.ie) > -2e-3)
    assert det.ie[-1] >= det.ie[0]


def test_detector_estimator_converges_with_samples():
    c = build_apsk(32, (2.64, 4.64))
    spec = DetectorSpec(c)
    grid = np.array([0.0, 0.5])
    a = detector_characteristic(spec, 8.8, grid, n_samples=150_000, seed=9)
    b = detector_characteristic(spec, 8.8, grid, n_samples=300_000, seed=10)
    assert np.max(np.abs(a.ie - b.ie)) < 0.005


def test_shaped_detector_above_uniform_at_low_prior():
    c = build_apsk(32, (2.64, 4.64))
    scode = build_shaping_code(4, 2)
    shaped = DetectorSpec(c, shaping_strategy(32, 1, scode.p0), scode)
    grid = np.array([0.0, 0.2])
    uni = detector_characteristic(DetectorSpec(c), 9.5, grid, n_samples=200_000, seed=11)
    sha = detector_characteristic(shaped, 9.5, grid, n_samples=200_000, seed=11)
    assert np.all(sha.ie > uni.ie)


def bpsk_proxy_provider(rate: float):
    def provider(esn0_db):
        ia = DEFAULT_IA_GRID
        sigma_ch = np.sqrt(8.0 * db_to_linear(esn0_db))
        ie = np.full_like(ia, j_function(sigma_ch))
        return ExitCurve(ia=ia, ie=ie, context="bpsk-proxy", esn0_db=esn0_db)
    return provider


def test_threshold_regular_3_6_binary_proxy():
    # soft sanity anchor from the EXIT literature: (3,6) at about 1.1 dB Eb/N0
    provider = bpsk_proxy_provider(0.5)
    dist = DegreeDistribution(dv=(3,), a=(1.0,), dc=6)
    thr = threshold_search(provider, dist, -3.0, 3.0, resolution_db=0.01)
    ebn0 = thr - 10 * np.log10(0.5)
    assert ebn0 == pytest.approx(1.1, abs=0.1)


def test_threshold_monotone_tunnel():
    provider = bpsk_proxy_provider(0.5)
    dist = DegreeDistribution(dv=(3,), a=(1.0,), dc=6)
    thr = threshold_search(provider, dist, -3.0, 3.0, resolution_db=0.02)
    assert tunnel_open(provider(thr + 0.2), dist)
    assert not tunnel_open(provider(thr - 0.2), dist)
    with pytest.raises(ValueError):
        threshold_search(provider, dist, -6.0, thr - 0.5)


def test_optimize_degrees_on_proxy():
    provider = bpsk_proxy_provider(0.5)
    best, thr, rows = optimize_degrees(provider, 1, 2, 6,
                                       DegreeSearchSpace(dv3_max=12),
                                       lo_db=-4.0, hi_db=4.0, resolution_db=0.02)
    assert best.dv[0] == 2 and len(rows) >= 5
    for row in rows:
        assert thr <= row["threshold_db"] + 1e-9
        dist = DegreeDistribution(dv=(2, row["dv2"], row["dv3"]),
                                  a=(0.5, row["a2"], row["a3"]), dc=6)
        b = dist.b
        assert abs(sum(b) - 1.0) < 1e-9


def test_caching_detector_reuses_curves():
    c = build_apsk(32, (2.64, 4.64))
    prov = CachingDetector(DetectorSpec(c), ia_grid=np.array([0.0, 1.0]),
                           n_samples=50_000, seed=12)
    a = prov(8.8)
    b = prov(8.8)
    assert a is b
