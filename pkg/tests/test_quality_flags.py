import numpy as np
import pytest

from apskshape.channel import db_to_linear
from apskshape.constellation import build_apsk
from apskshape.exitlab import DetectorSpec, detector_characteristic
from apskshape.infotheory import information_rate


def test_quadrature_mc_crosscheck_passes_at_default_order():
    c = build_apsk(16, 2.70)
    val = information_rate(c, c.pmf, db_to_linear(8.0), verify_with_mc=True,
                           n_samples=300_000, seed=1)
    assert 2.0 < val < 4.0


def test_quadrature_mc_crosscheck_flags_low_order():
    # a single quadrature node ignores the noise entirely and overshoots
    c = build_apsk(32, (2.64, 4.64))
    with pytest.raises(ValueError):
        information_rate(c, c.pmf, db_to_linear(9.0), order=1,
                         verify_with_mc=True, n_samples=300_000, seed=2)


def test_detector_convergence_flag():
    c = build_apsk(32, (2.64, 4.64))
    spec = DetectorSpec(c)
    # plenty of samples: no flag
    detector_characteristic(spec, 8.8, ia_grid=np.array([0.0]),
                            n_samples=200_000, seed=3, check_convergence=True)
    # starved sample count: flagged
    with pytest.raises(ValueError):
        detector_characteristic(spec, 8.8, ia_grid=np.array([0.0]),
                                n_samples=2_000, seed=3, check_convergence=True)
