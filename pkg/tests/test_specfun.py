import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glrchart.errors import DomainError
from glrchart.specfun import digamma, log_gamma

mp.mp.dps = 40

EULER = 0.5772156649015329


def test_digamma_known_values():
    assert digamma(1.0) == pytest.approx(-EULER, abs=1e-12)
    assert digamma(0.5) == pytest.approx(-EULER - 2 * math.log(2), abs=1e-12)
    assert digamma(0.5) == pytest.approx(-1.9635100260, abs=1e-9)


def test_digamma_against_high_precision_oracle():
    zs = np.concatenate([np.linspace(0.5, 20, 101), np.logspace(1.5, 6, 40)])
    for z in zs:
        assert digamma(float(z)) == pytest.approx(float(mp.digamma(mp.mpf(z))), abs=1e-10)


def test_digamma_at_ten_matches_oracle():
    assert digamma(10.0) == pytest.approx(float(mp.digamma(10)), abs=1e-12)


def test_log_gamma_known_values():
    assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-12)
    assert log_gamma(2.0) == pytest.approx(0.0, abs=1e-12)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-12)
    assert log_gamma(0.5) == pytest.approx(0.5723649429, abs=1e-9)


def test_log_gamma_against_high_precision_oracle():
    assert log_gamma(20.5) == pytest.approx(float(mp.loggamma(mp.mpf("20.5"))), abs=1e-11)
    for z in np.concatenate([np.linspace(0.5, 50, 97), np.logspace(2, 6, 40)]):
        want = float(mp.loggamma(mp.mpf(z)))
        # 1e-10 absolute until float64 resolution of the result dominates
        tol = max(1e-10, 4 * np.spacing(want))
        assert log_gamma(float(z)) == pytest.approx(want, abs=tol)


def test_domain_errors():
    for bad in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(DomainError):
            digamma(bad)
        with pytest.raises(DomainError):
            log_gamma(bad)


def test_array_input_matches_scalar():
    zs = np.array([0.5, 1.0, 3.25, 88.0])
    np.testing.assert_allclose(digamma(zs), [digamma(float(z)) for z in zs], rtol=0, atol=0)
    np.testing.assert_allclose(log_gamma(zs), [log_gamma(float(z)) for z in zs], rtol=0, atol=0)


@given(st.floats(min_value=1e-3, max_value=100.0))
@settings(max_examples=200, deadline=None)
def test_digamma_recurrence(z):
    assert abs(digamma(z + 1.0) - digamma(z) - 1.0 / z) <= 1e-10


@given(st.floats(min_value=0.5, max_value=1e4))
@settings(max_examples=200, deadline=None)
def test_log_gamma_recurrence(z):
    assert log_gamma(z + 1.0) - log_gamma(z) == pytest.approx(math.log(z), abs=1e-10)


def test_log_gamma_recurrence_large_arguments():
    # beyond ~1e4 the difference of two large results is ulp-limited
    for z in (1e5, 1e6):
        got = log_gamma(z + 1.0) - log_gamma(z)
        assert got == pytest.approx(math.log(z), abs=4 * np.spacing(log_gamma(z)))


def test_digamma_strictly_increasing():
    grid = np.unique(np.concatenate([np.linspace(0.05, 5, 300), np.linspace(5, 1000, 300)]))
    vals = digamma(grid)
    assert np.all(np.diff(vals) > 0)
