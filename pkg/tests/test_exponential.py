import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glrchart import _engine
from glrchart.errors import DomainError, InputError
from glrchart.exponential import corrected_scores, expected_m, m_stat, max_score
from glrchart.streamstats import CandidateSet

EULER = 0.5772156649015329


def candidates(xs) -> CandidateSet:
    cs = CandidateSet()
    for x in xs:
        cs.push(float(x))
    return cs


def test_m_stat_equal_rates_is_zero():
    assert m_stat(2.0, 2, 4.0, 4) == pytest.approx(0.0, abs=1e-12)


def test_m_stat_hand_value():
    want = -2 * (4 * math.log(4 / 6) - 2 * math.log(1.0) - 2 * math.log(2 / 4))
    assert m_stat(2.0, 2, 6.0, 4) == pytest.approx(want, rel=1e-12)
    assert m_stat(2.0, 2, 6.0, 4) == pytest.approx(0.471132, abs=1e-6)


def test_m_stat_domain_errors():
    with pytest.raises(DomainError):
        m_stat(1.0, 0, 2.0, 4)
    with pytest.raises(DomainError):
        m_stat(1.0, 4, 2.0, 4)
    with pytest.raises(DomainError):
        m_stat(-1.0, 2, 2.0, 4)
    with pytest.raises(DomainError):
        m_stat(3.0, 2, 3.0, 4)  # empty suffix sum


def test_expected_m_symmetry_and_limit():
    for t in (5, 50, 200):
        for k in range(1, t):
            assert expected_m(k, t) == expected_m(t - k, t)
    assert expected_m(1, 10**6) == pytest.approx(2 * EULER, abs=1e-4)
    assert expected_m(1, 10**6) == pytest.approx(1.154431, abs=1e-4)
    for k in (0, 50):
        with pytest.raises(DomainError):
            expected_m(k, 50)


def test_corrected_scores_fields():
    cs = candidates([1.0, 1.0, 2.0, 2.0])
    sc = corrected_scores(cs)
    assert sc.t == 4
    assert list(sc.k) == [1, 2, 3]
    assert sc.m[1] == pytest.approx(0.471132, abs=1e-6)
    np.testing.assert_allclose(sc.mc, sc.m / expected_m(sc.k.astype(float), 4))


def test_corrected_scores_rejects_nonpositive_data():
    # pushing directly bypasses the monitor's ingestion check; the scorer
    # still notices through the prefix-sum differences
    cs = candidates([1.0, 2.0, -0.5, 1.0])
    with pytest.raises(InputError):
        corrected_scores(cs)


def test_scale_invariance(rng):
    xs = rng.exponential(size=30)
    s1 = corrected_scores(candidates(xs))
    s2 = corrected_scores(candidates(7.25 * xs))
    np.testing.assert_allclose(s1.m, s2.m, atol=1e-9)
    np.testing.assert_allclose(s1.mc, s2.mc, atol=1e-9)
    assert max_score(s1, "corrected")[1] == max_score(s2, "corrected")[1]


def test_max_score_tie_and_scan(rng):
    xs = rng.exponential(size=25)
    sc = corrected_scores(candidates(xs))
    for which, vals in (("corrected", sc.mc), ("raw", sc.m)):
        v, k = max_score(sc, which)
        i = int(np.argmax(vals))
        assert (v, k) == (vals[i], sc.k[i])
    with pytest.raises(DomainError):
        max_score(sc, "hz")


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_nonnegative_on_random_streams(seed):
    xs = np.random.default_rng(seed).exponential(size=20) + 1e-12
    sc = corrected_scores(candidates(xs))
    assert np.all(sc.m >= 0)


def test_null_mean_of_m_tracks_theorem():
    reps = 20_000
    vals = _engine.raw_split_stats("exponential", reps, 30, np.array([15]), seed=2718)
    want = expected_m(15, 30)
    se = vals.std() / math.sqrt(reps)
    assert abs(vals.mean() - want) < 4 * se


def test_scores_match_engine(rng):
    xs = rng.exponential(size=28)
    sc = corrected_scores(candidates(xs))
    state = _engine._StreamState("exponential", "corrected", 1, 28)
    state.append_block(xs[None, :])
    v, _ = max_score(sc, "corrected")
    assert state.stat_at(28)[0] == pytest.approx(v, rel=1e-12)
