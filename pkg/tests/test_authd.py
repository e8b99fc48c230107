import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hrvauth.authd import (
    AuthConfig,
    Decision,
    Verdict,
    decision_log,
    enroll,
    poll,
    push_beat,
    read_decision_log,
    replay,
)
from hrvauth.errors import StreamError
from hrvauth.evaluation import EvalConfig, enroll_model
from hrvauth.ingest import RRSample
from hrvauth.synth import SubjectProfile, generate_rr, inject_artifacts, ArtifactSpec

FAST = EvalConfig(hyperparameters={"rf": {"n_trees": 20}})


@pytest.fixture(scope="module")
def model(small_features):
    return enroll_model(small_features, "P1", "lda", FAST)


@pytest.fixture(scope="module")
def genuine(small_corpus):
    return generate_rr(small_corpus[0].profile, 600, seed=99, subject_id="P1")


def test_enroll_then_poll_is_insufficient(model):
    d = poll(enroll(model))
    assert d.verdict is Verdict.INSUFFICIENT and d.score is None


def test_threshold_defaults_to_enrollment_eer_point(model):
    assert enroll(model).threshold == model.metadata["eer_threshold"]
    assert enroll(model, 0.25).threshold == 0.25


@pytest.mark.parametrize("bad", [1.5, -0.1])
def test_invalid_threshold(model, bad):
    with pytest.raises(ValueError):
        enroll(model, bad)


def test_short_series_single_insufficient(model):
    s = generate_rr(SubjectProfile(), 30, seed=1)
    log = replay(enroll(model), s)
    assert len(log) == 1 and log[0].verdict is Verdict.INSUFFICIENT


def test_ten_minute_decision_count(model, genuine):
    log = replay(enroll(model), genuine)
    assert len(log) == int(np.ceil((600 - 120) / 5)) + 1 == 97


def test_cadence_and_warmup(model, genuine):
    log = replay(enroll(model), genuine)
    t0 = genuine.t[0] - genuine.rr[0] / 1000.0
    ts = np.array([d.timestamp for d in log])
    assert ts[0] - t0 >= 120.0
    assert np.allclose(np.diff(ts), 5.0)


def test_no_decision_before_two_minutes(model, genuine):
    state = enroll(model)
    t0 = genuine.t[0] - genuine.rr[0] / 1000.0
    for t, rr in zip(genuine.t, genuine.rr):
        out = state.push(RRSample(t, rr))
        if t - t0 < 120.0:
            assert out == []
        for d in out:
            # every beat scored lies inside the window that ended before this beat
            assert d.timestamp <= t and d.timestamp - t0 >= 120.0


def test_replay_equals_streaming(model, genuine):
    a = replay(enroll(model), genuine)
    state = enroll(model)
    b = []
    for t, rr in zip(genuine.t, genuine.rr):
        b += state.push(RRSample(t, rr))
    assert decision_log(a) == decision_log(b)
    # push_beat reports the newest decision of each beat
    state = enroll(model)
    c = [d for d in (push_beat(state, RRSample(t, rr)) for t, rr in zip(genuine.t, genuine.rr)) if d]
    assert decision_log(c) == decision_log(a)


def test_smoothing_one_is_raw_thresholding(model, genuine):
    log = replay(enroll(model, 0.5, AuthConfig(smoothing=1)), genuine)
    for d in log:
        if d.verdict is not Verdict.INSUFFICIENT:
            assert (d.verdict is Verdict.ACCEPT) == (d.score >= 0.5)


def test_majority_smoothing(model, genuine):
    log = replay(enroll(model, 0.5, AuthConfig(smoothing=3)), genuine)
    raw = [d.score >= 0.5 for d in log if d.score is not None]
    verdicts = [d.verdict is Verdict.ACCEPT for d in log if d.score is not None]
    for i, v in enumerate(verdicts):
        recent = raw[max(0, i - 2): i + 1]
        assert v == (2 * sum(recent) > len(recent))


def test_memory_bound(model, genuine):
    cfg = AuthConfig()
    state = enroll(model, cfg=cfg)
    for t, rr in zip(genuine.t, genuine.rr):
        state.push(RRSample(t, rr))
        assert state.t[0] >= t - (cfg.window_s + cfg.stride_s)
        assert list(state.t) == sorted(state.t)


def test_non_monotone_beat_raises(model):
    state = enroll(model)
    state.push(RRSample(1.0, 800.0))
    with pytest.raises(StreamError):
        state.push(RRSample(0.5, 800.0))
    with pytest.raises(StreamError):
        state.push(RRSample(1.0, 800.0))
    with pytest.raises(StreamError):
        state.push(RRSample(2.0, float("nan")))


def test_quality_floor_gives_insufficient(model, small_corpus):
    clean = generate_rr(small_corpus[0].profile, 400, seed=3)
    dirty, _ = inject_artifacts(clean, ArtifactSpec(spike_rate=30, skip_head=20), seed=1)
    log = replay(enroll(model, cfg=AuthConfig(min_quality=0.99)), dirty)
    assert all(d.verdict is Verdict.INSUFFICIENT for d in log)
    assert all(d.quality is not None and d.quality < 0.99 for d in log)


def test_decision_requires_score():
    with pytest.raises(ValueError):
        Decision(1.0, Verdict.ACCEPT)
    Decision(1.0, Verdict.INSUFFICIENT)


def test_log_round_trip(model, genuine):
    log = replay(enroll(model), genuine)
    text = decision_log(log)
    assert text.count("\n") == len(log)
    assert read_decision_log(text) == log


def test_config_validation():
    with pytest.raises(ValueError):
        AuthConfig(stride_s=0)
    with pytest.raises(ValueError):
        AuthConfig(smoothing=0)
    with pytest.raises(ValueError):
        AuthConfig(stride_s=200)


@settings(max_examples=25)
@given(st.lists(st.floats(300, 1500), min_size=1, max_size=400), st.integers(1, 5))
def test_streaming_invariants_random_streams(model, rr, m):
    # hypothesis with a module fixture: the model is read-only so sharing is safe
    t = np.cumsum(rr) / 1000.0
    state = enroll(model, 0.5, AuthConfig(smoothing=m))
    log = []
    for ti, ri in zip(t, rr):
        log += state.push(RRSample(ti, ri))
    t0 = t[0] - rr[0] / 1000.0
    assert all(d.timestamp - t0 >= 120.0 for d in log)
    due = t0 + 120.0 + 5.0 * np.arange(len(log) + 1)
    # exactly the grid points already passed by the last beat were decided
    assert np.all(due[:-1] <= t[-1]) and due[-1] > t[-1]
