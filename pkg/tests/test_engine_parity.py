"""The vectorized engine must agree with the object-level chart exactly."""

import numpy as np
import pytest

from glrchart import _engine, exponential, gaussian
from glrchart.streamstats import CandidateSet


def object_trajectory(xs, family, statistic, t0=21):
    cs = CandidateSet()
    out = []
    for i, x in enumerate(xs, start=1):
        cs.push(float(x))
        if i >= t0:
            if family == "gaussian":
                sc = gaussian.corrected_scores(cs)
                out.append(gaussian.max_score(sc, statistic)[0])
            else:
                sc = exponential.corrected_scores(cs)
                out.append(exponential.max_score(sc, statistic)[0])
    return np.array(out)


@pytest.mark.parametrize(
    "family,statistic",
    [("gaussian", "corrected"), ("gaussian", "hz"), ("exponential", "corrected"), ("exponential", "raw")],
)
def test_engine_matches_object_chart(family, statistic, rng):
    T = 55
    for _ in range(8):
        xs = rng.standard_normal(T) if family == "gaussian" else rng.exponential(size=T)
        state = _engine._StreamState(family, statistic, 1, T)
        state.append_block(xs[None, :])
        engine = np.array([state.stat_at(t)[0] for t in range(21, T + 1)])
        np.testing.assert_allclose(engine, object_trajectory(xs, family, statistic), rtol=1e-9)


def test_incremental_blocks_match_single_block(rng):
    xs = rng.standard_normal((5, 64))
    whole = _engine._StreamState("gaussian", "corrected", 5, 64)
    whole.append_block(xs)
    parts = _engine._StreamState("gaussian", "corrected", 5, 16)
    for lo in range(0, 64, 16):
        parts.append_block(xs[:, lo : lo + 16])
    for t in (21, 40, 64):
        np.testing.assert_allclose(whole.stat_at(t), parts.stat_at(t), rtol=1e-12)


def test_substream_block_continuity():
    r1 = _engine.rep_rng(9, 4)
    r2 = _engine.rep_rng(9, 4)
    a = r1.standard_normal(100)
    b = np.concatenate([r2.standard_normal(60), r2.standard_normal(40)])
    np.testing.assert_array_equal(a, b)


def test_trajectories_independent_of_chunking():
    kw = dict(reps=64, t_max=40, t0=21, seed=123)
    a = _engine.null_stat_trajectories("gaussian", "corrected", chunk=64, **kw)
    b = _engine.null_stat_trajectories("gaussian", "corrected", chunk=7, **kw)
    np.testing.assert_array_equal(a, b)
    c = _engine.null_stat_trajectories("gaussian", "corrected", chunk=7, workers=2, **kw)
    np.testing.assert_array_equal(a, c)


def test_run_lengths_independent_of_chunking_and_workers():
    h = np.full(201, np.inf)
    h[21:] = 8.0
    kw = dict(reps=50, seed=31, t_cap=200, t0=21)
    model = _engine.null_model("gaussian")
    a = _engine.run_lengths("gaussian", "corrected", h, model, chunk=50, **kw)
    b = _engine.run_lengths("gaussian", "corrected", h, model, chunk=9, **kw)
    c = _engine.run_lengths("gaussian", "corrected", h, model, chunk=9, workers=2, **kw)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_run_lengths_match_object_detector(rng):
    from glrchart.monitor import Detector, DetectorConfig
    from glrchart.thresholds import FixedThreshold

    h_val = 9.0
    t_cap = 120
    h = np.full(t_cap + 1, np.inf)
    h[21:] = h_val
    model = _engine.StreamModel("gaussian", (0.0, 1.0), (2.0, 1.0), 40)
    T = _engine.run_lengths("gaussian", "corrected", h, model, 20, seed=77, t_cap=t_cap)
    config = DetectorConfig(
        "gaussian", FixedThreshold(h_val, min_t=21), statistic="corrected"
    )
    for rep in range(20):
        xs = model.draw(_engine.rep_rng(77, rep), 0, t_cap)
        det = Detector(config)
        t_obj = -1
        for i, x in enumerate(xs, start=1):
            if det.step(x) is not None:
                t_obj = i
                break
        assert t_obj == T[rep]


def test_stream_model_change_position():
    model = _engine.StreamModel("gaussian", (0.0, 1.0), (100.0, 1.0), 10)
    xs = model.draw(_engine.rep_rng(1, 0), 0, 20)
    assert np.all(xs[:10] < 50) and np.all(xs[10:] > 50)
    # drawing in two pieces hits the same change location
    r = _engine.rep_rng(1, 0)
    first = model.draw(r, 0, 7)
    second = model.draw(r, 7, 13)
    np.testing.assert_array_equal(np.concatenate([first, second]), xs)
