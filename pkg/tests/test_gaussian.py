import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glrchart import _engine
from glrchart.errors import DomainError
from glrchart.gaussian import (
    bartlett_factor,
    corrected_scores,
    d_stat,
    expected_d,
    max_score,
)
from glrchart.streamstats import CandidateSet, RunningSummary

EULER = 0.5772156649015329


def candidates(xs) -> CandidateSet:
    cs = CandidateSet()
    for x in xs:
        cs.push(float(x))
    return cs


def test_d_stat_equal_segment_variances_is_zero():
    cs = candidates([-1, 1, -1, 1])
    k2 = dict(cs.prefixes)[2]
    assert d_stat(k2, cs.global_summary) == pytest.approx(0.0, abs=1e-12)


def test_d_stat_hand_value():
    cs = candidates([0, 1, 2, 3])
    k2 = dict(cs.prefixes)[2]
    assert d_stat(k2, cs.global_summary) == pytest.approx(4 * math.log(5), rel=1e-12)


def test_d_stat_segment_size_errors():
    cs = candidates([0, 1, 2, 3])
    with pytest.raises(DomainError):
        d_stat(dict(cs.prefixes)[1], cs.global_summary)
    with pytest.raises(DomainError):
        d_stat(dict(cs.prefixes)[3], cs.global_summary)


def test_degenerate_rules():
    # constant sub-segment inside varying data signals immediately
    cs = candidates([5.0, 5.0, 1.0, 2.0, 3.0])
    assert d_stat(dict(cs.prefixes)[2], cs.global_summary) == math.inf
    # fully constant data scores zero
    cs = candidates([5.0, 5.0, 5.0, 5.0])
    assert d_stat(dict(cs.prefixes)[2], cs.global_summary) == 0.0


def test_bartlett_factor_values():
    assert bartlett_factor(2, 4) == pytest.approx(2.125, rel=1e-12)
    assert bartlett_factor(2, 10**8) == pytest.approx(1.0 + 11 / 24 + 0.25, rel=1e-6)
    for t in (10, 57):
        for k in range(2, t - 1):
            assert bartlett_factor(k, t) == pytest.approx(bartlett_factor(t - k, t), rel=1e-14)
            assert bartlett_factor(k, t) > 1.0


def test_expected_d_symmetry_and_boundary_value():
    for t in (8, 50, 313):
        for k in range(2, t - 1):
            assert expected_d(k, t) == expected_d(t - k, t)
    # large-t boundary: 2*euler + 4*ln 2, and the Bartlett-scaled spike 2.30
    e = expected_d(2, 10**6)
    assert e == pytest.approx(2 * EULER + 4 * math.log(2), abs=1e-4)
    assert e / bartlett_factor(2, 10**6) == pytest.approx(2.299, abs=0.005)


def test_expected_d_out_of_range():
    for k in (0, 1, 49, 50):
        with pytest.raises(DomainError):
            expected_d(k, 50)


def test_corrected_scores_fields_and_identity():
    cs = candidates(np.linspace(-1, 1, 12) ** 3)
    sc = corrected_scores(cs)
    assert sc.t == 12
    assert list(sc.k) == list(range(2, 11))
    np.testing.assert_allclose(sc.h, sc.d / bartlett_factor(sc.k.astype(float), 12))
    np.testing.assert_allclose(sc.dc, 2 * sc.d / expected_d(sc.k.astype(float), 12))
    assert np.all(sc.d >= 0)


def test_corrected_scores_needs_enough_data():
    with pytest.raises(DomainError):
        corrected_scores(candidates([1.0, 2.0, 3.0]))


def test_affine_invariance(rng):
    xs = rng.normal(size=40)
    a, b = -2.7, 11.0
    s1 = corrected_scores(candidates(xs))
    s2 = corrected_scores(candidates(a * xs + b))
    np.testing.assert_allclose(s1.d, s2.d, atol=1e-9)
    np.testing.assert_allclose(s1.dc, s2.dc, atol=1e-9)
    assert max_score(s1, "corrected") == pytest.approx(max_score(s2, "corrected"))


def test_max_score_single_and_ties():
    cs = candidates([0.0, 1.0, 2.0, 3.0])
    sc = corrected_scores(cs)
    value, k = max_score(sc, "corrected")
    assert k == 2 and value == pytest.approx(sc.dc[0])
    # exact ties resolve to the smallest k
    sc.dc = np.array([1.0, 3.0, 2.0, 3.0, 1.0])
    sc.k = np.array([2, 5, 7, 9, 11])
    assert max_score(sc, "corrected") == (3.0, 5)
    with pytest.raises(DomainError):
        max_score(sc, "nope")


def test_max_score_matches_linear_scan(rng):
    xs = rng.normal(size=30)
    sc = corrected_scores(candidates(xs))
    for which, vals in (("corrected", sc.dc), ("hz", sc.h), ("raw", sc.d)):
        v, k = max_score(sc, which)
        best = max(range(len(vals)), key=lambda i: vals[i])
        assert v == vals[best]
        assert k == sc.k[best]


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_nonnegative_on_random_streams(seed):
    xs = np.random.default_rng(seed).normal(size=25)
    sc = corrected_scores(candidates(xs))
    assert np.all(sc.d >= 0)  # clamped after the -1e-9 slack check inside


def test_null_mean_of_d_tracks_theorem(rng):
    # 20k replications at t=30, k=10: 3 sigma band around the exact mean
    reps = 20_000
    vals = _engine.raw_split_stats("gaussian", reps, 30, np.array([10]), seed=314)
    want = expected_d(10, 30)
    se = vals.std() / math.sqrt(reps)
    assert abs(vals.mean() - want) < 4 * se


def test_scores_on_summaries_match_engine(rng):
    xs = rng.normal(size=35)
    cs = candidates(xs)
    sc = corrected_scores(cs)
    state = _engine._StreamState("gaussian", "corrected", 1, 35)
    state.append_block(xs[None, :])
    v, _ = max_score(sc, "corrected")
    assert state.stat_at(35)[0] == pytest.approx(v, rel=1e-12)
