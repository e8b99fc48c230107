import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrvauth.features import SpectralConfig, band_powers, extract, periodogram, resample_4hz
from hrvauth.ingest import DeviceKind, parse_generic
from hrvauth.preprocess import detect_artifacts, preprocess_series, segment_windows
from hrvauth.synth import (
    DEFAULT_SESSION_PLAN,
    DEVICE_ARTIFACTS,
    ArtifactSpec,
    Session,
    SubjectProfile,
    device_assignment,
    generate_corpus,
    generate_rr,
    inject_artifacts,
    write_corpus,
)


def _windows(series):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return preprocess_series(series)


def test_profile_defaults_hit_sdnn_target():
    s = generate_rr(SubjectProfile(), 3600, seed=1)
    assert np.std(s.rr, ddof=1) == pytest.approx(40.0, rel=0.1)


def test_generate_rr_deterministic():
    a = generate_rr(SubjectProfile(), 600, seed=5)
    b = generate_rr(SubjectProfile(), 600, seed=5)
    c = generate_rr(SubjectProfile(), 600, seed=6)
    assert np.array_equal(a.t, b.t) and np.array_equal(a.rr, b.rr)
    assert not np.array_equal(a.rr, c.rr)


def test_beat_times_integrate_rr():
    s = generate_rr(SubjectProfile(), 300, seed=2)
    assert np.allclose(np.diff(s.t), s.rr[1:] / 1000.0, rtol=0, atol=1e-9)
    assert s.t[0] == pytest.approx(s.rr[0] / 1000.0)
    assert s.t[-1] >= 300 > s.t[-2]


def test_constant_profile_gives_zero_variability():
    flat = SubjectProfile(mean_rr=900, sdnn_target=0, lf_amp=0, hf_amp=0, noise_sd=0)
    s = generate_rr(flat, 300)
    assert np.all(s.rr == 900.0)
    f = extract(_windows(s)[0])
    assert f.std_rr == f.rmssd == f.pnn50 == f.sdsd == f.tinn == 0.0
    assert f.mean_rr == 900.0


def test_lf_only_profile():
    p = SubjectProfile(mean_rr=900, sdnn_target=30 / np.sqrt(2), lf_amp=30, lf_freq=0.1, hf_amp=0, noise_sd=0)
    assert p.vlf_amp == 0.0
    f = extract(_windows(generate_rr(p, 300))[0])
    assert f.lf_hf > 100
    assert f.lf == pytest.approx(30**2 / 2, rel=0.1)


@pytest.mark.parametrize("bad", [
    dict(mean_rr=100, lf_amp=60, hf_amp=50),
    dict(lf_freq=0.2),
    dict(hf_freq=0.1),
    dict(hf_freq=0.45),
    dict(noise_sd=-1),
])
def test_invalid_profile_raises(bad):
    with pytest.raises(ValueError):
        generate_rr(SubjectProfile(**bad), 300)


@pytest.mark.parametrize("mean_rr,lf_amp,lf_freq,hf_amp,hf_freq", [
    (850, 20, 0.1, 10, 0.25),
    (700, 15, 0.06, 12, 0.3),
    (1000, 25, 0.125, 8, 0.2),
])
def test_noise_free_feature_recovery(mean_rr, lf_amp, lf_freq, hf_amp, hf_freq):
    sdnn = np.sqrt(lf_amp**2 / 2 + hf_amp**2 / 2)
    p = SubjectProfile(mean_rr, sdnn, lf_amp, lf_freq, hf_amp, hf_freq, noise_sd=0)
    cfg = SpectralConfig()
    for w in _windows(generate_rr(p, 600))[:4]:
        assert extract(w).mean_rr == pytest.approx(mean_rr, abs=0.5)
        freqs, power = periodogram(resample_4hz(w, cfg), cfg)
        lf = (freqs >= 0.04) & (freqs < 0.15)
        peak = freqs[lf][np.argmax(power[lf])]
        assert abs(peak - lf_freq) <= 1.0 / w.duration


def test_spike_rate_zero_is_identity():
    s = generate_rr(SubjectProfile(), 300)
    out, mask = inject_artifacts(s, ArtifactSpec(), seed=3)
    assert np.array_equal(out.rr, s.rr) and not mask.any()


@given(st.floats(0, 20), st.floats(0.05, 0.95), st.integers(1, 4), st.floats(0, 2), st.integers(0, 2**31))
def test_mask_indexes_exactly_the_modified_beats(rate, amp, burst, disp, seed):
    s = generate_rr(SubjectProfile(), 240, seed=1)
    spec = ArtifactSpec(spike_rate=rate, spike_rel_amp=amp, burst_len=burst, rate_dispersion=disp)
    out, mask = inject_artifacts(s, spec, seed)
    assert np.array_equal(out.rr != s.rr, mask)
    ratio = out.rr[mask] / s.rr[mask]
    assert np.allclose(np.minimum(np.abs(ratio - 1 - amp), np.abs(ratio - 1 + amp)), 0, atol=1e-12)
    assert np.array_equal(out.t, s.t)


def test_inject_deterministic():
    s = generate_rr(SubjectProfile(), 600)
    spec = ArtifactSpec(spike_rate=5, burst_len=2)
    a, ma = inject_artifacts(s, spec, 9)
    b, mb = inject_artifacts(s, spec, 9)
    assert np.array_equal(a.rr, b.rr) and np.array_equal(ma, mb)


def _constant(n=600, rr=800.0):
    flat = SubjectProfile(mean_rr=rr, sdnn_target=0, lf_amp=0, hf_amp=0, noise_sd=0)
    return generate_rr(flat, n * rr / 1000.0)


@pytest.mark.parametrize("seed", range(10))
def test_isolated_spikes_full_recall(seed):
    s = _constant()
    out, truth = inject_artifacts(s, ArtifactSpec(count=10, min_gap=6, skip_head=5), seed)
    assert truth.sum() == 10
    flagged = detect_artifacts(out, 0.2, 5)
    assert flagged[truth].all()
    assert np.count_nonzero(flagged & ~truth) <= 0.05 * np.count_nonzero(~truth)


def test_burst_recall():
    recalls = []
    for seed in range(20):
        out, truth = inject_artifacts(_constant(), ArtifactSpec(count=8, burst_len=3, min_gap=8, skip_head=5), seed)
        flagged = detect_artifacts(out, 0.2, 5)
        recalls.append(np.count_nonzero(flagged & truth) / truth.sum())
    assert np.mean(recalls) >= 0.8


def test_count_placement_impossible():
    with pytest.raises(ValueError):
        inject_artifacts(_constant(50), ArtifactSpec(count=40, min_gap=3), 0)


def test_device_split():
    devs = device_assignment(28)
    assert devs.count(DeviceKind.EMPATICA_E4) == 8
    assert devs.count(DeviceKind.GEAR_S) == 3
    assert devs.count(DeviceKind.GEAR_S2) == 17
    assert len(device_assignment(5)) == 5


def test_device_artifact_ordering():
    # GearS2 is the noisiest device, the E4 the cleanest
    rate = {d: s.spike_rate * s.burst_len for d, s in DEVICE_ARTIFACTS.items()}
    assert rate[DeviceKind.EMPATICA_E4] < rate[DeviceKind.GEAR_S] < rate[DeviceKind.GEAR_S2]


def test_default_plan_is_100_minutes():
    assert sum(s.duration_s for s in DEFAULT_SESSION_PLAN) == 6000


def test_corpus_window_budget():
    corpus = generate_corpus(28, seed=3)
    assert [c.subject_id for c in corpus] == [f"P{i}" for i in range(1, 29)]
    for subj in corpus[::9]:
        n = len(segment_windows(subj.series, 120.0, 120.0))
        assert n <= 50


def test_corpus_deterministic_and_mask_exact():
    plan = (Session("baseline", 600.0),)
    a = generate_corpus(4, plan, seed=2)
    b = generate_corpus(4, plan, seed=2)
    for x, y in zip(a, b):
        assert np.array_equal(x.series.rr, y.series.rr) and np.array_equal(x.truth_mask, y.truth_mask)
        assert np.array_equal(x.series.rr != x.clean.rr, x.truth_mask)


def test_separation_zero_profiles_identical():
    plan = (Session("baseline", 300.0),)
    corpus = generate_corpus(5, plan, separation=0.0, seed=1)
    base = corpus[0].profile
    for c in corpus[1:]:
        assert c.profile.mean_rr == base.mean_rr and c.profile.lf_amp == base.lf_amp
        assert c.profile.hf_freq == base.hf_freq and c.profile.noise_sd == base.noise_sd


def test_corpus_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_corpus(1)
    with pytest.raises(ValueError):
        generate_corpus(3, separation=-1)


def test_write_corpus_round_trips(tmp_path):
    corpus = generate_corpus(2, (Session("baseline", 300.0),), seed=4)
    paths = write_corpus(corpus, tmp_path)
    for p, subj in zip(paths, corpus):
        back = parse_generic(p.read_text())
        assert back.subject_id == subj.subject_id and back.device == subj.device
        assert np.allclose(back.rr, subj.series.rr, rtol=1e-12)


def test_device_artifact_override():
    plan = (Session("baseline", 600.0),)
    quiet = {d: ArtifactSpec() for d in DeviceKind}
    corpus = generate_corpus(4, plan, seed=2, device_artifacts=quiet)
    assert not any(c.truth_mask.any() for c in corpus)
