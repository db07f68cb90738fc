import numpy as np
import pytest

from apskshape.channel import db_to_linear
from apskshape.constellation import (
    Constellation,
    RingSpec,
    build_apsk,
    shaping_strategy,
    with_pmf,
)
from apskshape.infotheory import (
    RateCurves,
    bicm_information_rate,
    best_gain_record,
    information_rate,
    joint_optimize,
    p0_grid,
    required_ebn0,
    required_esn0_db,
)
from apskshape.shaping import p0_exact


def test_rate_vanishes_at_low_snr():
    c = build_apsk(16, 2.70)
    assert information_rate(c, c.pmf, db_to_linear(-30.0)) < 0.01


def test_rate_saturates_at_log2m():
    c = build_apsk(16, 2.57)
    assert abs(information_rate(c, c.pmf, db_to_linear(30.0)) - 4.0) < 1e-3
    c32 = build_apsk(32, (2.64, 4.64))
    assert information_rate(c32, c32.pmf, db_to_linear(40.0)) == pytest.approx(5.0, abs=1e-3)


def test_rate_monotone_in_snr():
    c = build_apsk(32, (2.72, 4.87))
    vals = [information_rate(c, c.pmf, db_to_linear(db)) for db in np.arange(-2, 16.1, 1.5)]
    assert np.all(np.diff(vals) > 0)


def test_quadrature_matches_monte_carlo():
    c = build_apsk(16, 2.60)
    s = shaping_strategy(16, 2, 0.75)
    shaped = with_pmf(c, s)
    for i, db in enumerate(np.linspace(-2, 14, 12)):
        lin = db_to_linear(db)
        gh = information_rate(shaped, shaped.pmf, lin)
        mc = information_rate(shaped, shaped.pmf, lin, method="monte-carlo",
                              n_samples=10**6, seed=i)
        assert abs(gh - mc) <= 0.01


def test_requires_normalized_constellation():
    c = build_apsk(16, 2.57)
    shaped = with_pmf(c, shaping_strategy(16, 2, 0.8))
    # shaped points were rescaled for the shaped pmf; a uniform pmf over them
    # no longer gives unit energy
    with pytest.raises(ValueError):
        information_rate(shaped, np.full(16, 1 / 16.0), 1.0)


def test_p0_grid_contents():
    grid = p0_grid()
    values = [p for p, _, _ in grid]
    assert len(grid) == 121
    assert len(set(values)) == 121
    assert 0.8125 in values and 0.75 in values and 0.6875 in values
    assert min(values) == pytest.approx(float(p0_exact(11, 10)))
    assert min(values) == pytest.approx(0.6230, abs=1e-4)
    assert all(0.5 < p < 1.0 for p in values)
    # every entry's source reproduces its p0
    for p, n, k in grid[:20]:
        assert float(p0_exact(n, k)) == pytest.approx(p)


def test_required_ebn0_anchor():
    c = build_apsk(32, (2.64, 4.64))
    s1 = with_pmf(c, shaping_strategy(32, 1, 0.8125))
    assert required_ebn0(s1, s1.pmf, 3.0) == pytest.approx(3.829, abs=0.05)


def test_required_esn0_bracketing_error():
    c = build_apsk(16, 2.57)
    with pytest.raises(ValueError):
        required_esn0_db(c, c.pmf, 3.9, lo_db=-5.0, hi_db=5.0)
    with pytest.raises(ValueError):
        required_ebn0(c, c.pmf, 4.5)   # above log2 M


def test_psk_single_ring_shape():
    # one-ring constellation behaves like PSK: capped at log2 M, monotone
    points = np.exp(2j * np.pi * np.arange(8) / 8)
    labels = ((np.arange(8)[:, None] >> np.arange(2, -1, -1)) & 1).astype(np.uint8)
    rings = RingSpec((8,), (1.0,), (0.0,))
    c = Constellation(points, labels, rings, np.zeros(8, dtype=int))
    vals = [information_rate(c, c.pmf, db_to_linear(db)) for db in (0, 5, 10, 15, 25)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == pytest.approx(3.0, abs=1e-3)
    assert all(v <= 3.0 + 1e-9 for v in vals)


def test_bicm_below_cm():
    c = build_apsk(32, (2.64, 4.64))
    for db in (5.0, 8.8, 12.0):
        lin = db_to_linear(db)
        assert bicm_information_rate(c, c.pmf, lin) <= information_rate(c, c.pmf, lin) + 1e-9


def test_grid_dominance_shaped_never_worse():
    grid = np.arange(6.0, 13.1, 0.5)
    entries = [rec for rec in p0_grid() if rec[0] in (0.8125, 0.75, 0.6875)]
    curves = RateCurves(16, 2, grid, p0_entries=entries)
    for rate in (2.4, 2.8, 3.2):
        uni = curves.best_at_rate(rate, shaped=False)
        sha = curves.best_at_rate(rate, shaped=True)
        assert sha[0] <= uni[0]  # the shaped search includes p0 = 0.5


def test_joint_optimize_gain_zero_with_unbiased_grid():
    recs = joint_optimize(16, 2, [2.8], esn0_grid_db=np.arange(6.0, 13.1, 0.5),
                          p0_entries=[])
    assert len(recs) == 1
    assert recs[0].gain_db == pytest.approx(0.0, abs=1e-12)
    assert recs[0].p0 == 0.5


def test_joint_optimize_small_grid_matches_paper_neighborhood():
    entries = [rec for rec in p0_grid() if abs(rec[0] - 0.6875) < 0.04]
    recs = joint_optimize(16, 2, np.arange(2.85, 3.06, 0.05),
                          esn0_grid_db=np.arange(6.0, 13.1, 0.5), p0_entries=entries)
    best = best_gain_record(recs)
    assert best.gain_db == pytest.approx(0.32, abs=0.05)
    assert best.gamma == 2.57


def test_optimal_p0_trend_nonincreasing():
    from apskshape.infotheory import optimal_p0_sweep
    entries = [rec for rec in p0_grid() if rec[0] in (0.8125, 0.75, 0.6875, 0.65625,
                                                      float(p0_exact(11, 10)))]
    out = optimal_p0_sweep(16, 2, np.arange(5.0, 12.1, 1.0), p0_entries=entries)
    p0s = [p for _, p, _ in out]
    values = sorted({p for p, _, _ in entries}, reverse=True)
    idx = [values.index(p) for p in p0s]
    # non-increasing p0 with one-grid-point slack
    assert all(idx[i + 1] >= idx[i] - 1 for i in range(len(idx) - 1))
