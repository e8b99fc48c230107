"""Seeded synthetic RR corpora for pipeline testing.

Each subject's RR signal is a mean level plus VLF, LF and HF sinusoids and
white noise. Beat times integrate the instantaneous interval,
``t[i+1] = t[i] + rr(t[i]) / 1000``. Artifacts are multiplicative spikes whose
rate depends on the recording device.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import DeviceKind, RRSeries, write_generic

VLF_FREQ = 0.02


@dataclass(frozen=True)
class SubjectProfile:
    """Parameters of one synthetic subject.

    ``sdnn_target`` fixes the overall RR standard deviation: whatever variance
    the LF, HF and noise terms leave over is carried by a slow VLF sinusoid at
    0.02 Hz (none if they already exceed the target).
    """

    mean_rr: float = 850.0
    sdnn_target: float = 40.0
    lf_amp: float = 35.0
    lf_freq: float = 0.1
    hf_amp: float = 25.0
    hf_freq: float = 0.25
    noise_sd: float = 10.0
    seed: int = 0

    @property
    def vlf_amp(self) -> float:
        rest = self.sdnn_target**2 - self.lf_amp**2 / 2 - self.hf_amp**2 / 2 - self.noise_sd**2
        return math.sqrt(2 * rest) if rest > 0 else 0.0

    def validate(self) -> None:
        swing = self.vlf_amp + self.lf_amp + self.hf_amp + 4 * self.noise_sd
        if not self.mean_rr > swing:
            raise ValueError(f"mean_rr {self.mean_rr} must exceed the worst-case swing {swing:.1f} ms")
        if min(self.lf_amp, self.hf_amp, self.noise_sd, self.sdnn_target) < 0:
            raise ValueError("amplitudes must be non-negative")
        if not 0.04 <= self.lf_freq < 0.15:
            raise ValueError(f"lf_freq {self.lf_freq} outside [0.04, 0.15) Hz")
        if not 0.15 <= self.hf_freq < 0.4:
            raise ValueError(f"hf_freq {self.hf_freq} outside [0.15, 0.4) Hz")


@dataclass(frozen=True)
class ArtifactSpec:
    """Spike contamination.

    Events arrive as a Poisson process at ``spike_rate`` per minute; with
    ``rate_dispersion > 0`` each minute's rate is scaled by a Gamma variate of
    unit mean and that coefficient of variation, giving bursty quality. Every
    event multiplies ``burst_len`` consecutive beats by ``1 +/- spike_rel_amp``.
    ``count`` places exactly that many events instead (``min_gap`` clean beats
    between events, none in the first ``skip_head`` beats).
    """

    spike_rate: float = 0.0
    spike_rel_amp: float = 0.5
    burst_len: int = 1
    rate_dispersion: float = 0.0
    count: int | None = None
    min_gap: int = 0
    skip_head: int = 0

    def __post_init__(self):
        if self.spike_rate < 0:
            raise ValueError("spike_rate must be >= 0")
        if not 0 < self.spike_rel_amp < 1:
            raise ValueError("spike_rel_amp must be in (0, 1)")
        if self.burst_len < 1:
            raise ValueError("burst_len must be >= 1")
        if self.rate_dispersion < 0 or self.min_gap < 0 or self.skip_head < 0:
            raise ValueError("rate_dispersion, min_gap and skip_head must be >= 0")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be >= 0")


@dataclass(frozen=True)
class Session:
    name: str
    duration_s: float
    rr_shift_ms: float = 0.0


# baseline, lecture, examination, recovery; the free-time block is not used
DEFAULT_SESSION_PLAN = (
    Session("baseline", 1200.0, 0.0),
    Session("lecture", 2400.0, 0.0),
    Session("examination", 1200.0, -25.0),
    Session("recovery", 1200.0, -10.0),
)

DEVICE_SPLIT = ((DeviceKind.EMPATICA_E4, 8), (DeviceKind.GEAR_S, 3), (DeviceKind.GEAR_S2, 17))

# the head stays clean so the detector's seed average is not corrupted
DEVICE_ARTIFACTS = {
    DeviceKind.EMPATICA_E4: ArtifactSpec(spike_rate=2.0, burst_len=2, rate_dispersion=1.0, skip_head=20),
    DeviceKind.GEAR_S: ArtifactSpec(spike_rate=4.0, burst_len=2, rate_dispersion=1.0, skip_head=20),
    DeviceKind.GEAR_S2: ArtifactSpec(spike_rate=7.0, burst_len=3, rate_dispersion=1.0, skip_head=20),
    DeviceKind.GENERIC: ArtifactSpec(),
}


def _rr_at(profile: SubjectProfile, t):
    two_pi = 2.0 * np.pi
    return (
        profile.mean_rr
        + profile.vlf_amp * np.sin(two_pi * VLF_FREQ * t)
        + profile.lf_amp * np.sin(two_pi * profile.lf_freq * t)
        + profile.hf_amp * np.sin(two_pi * profile.hf_freq * t)
    )


def _beats(profile: SubjectProfile, t0: float, duration_s: float, rng, shift: float = 0.0):
    t_end = t0 + duration_s
    # upper bound on beats: the shortest possible interval
    n_max = int(duration_s * 1000.0 / max(profile.mean_rr + shift - profile.vlf_amp - profile.lf_amp
                                           - profile.hf_amp - 4 * profile.noise_sd, 50.0)) + 2
    noise = rng.normal(0.0, profile.noise_sd, n_max) if profile.noise_sd > 0 else np.zeros(n_max)
    ts, rrs = [], []
    t = t0
    for i in range(n_max):
        rr = float(_rr_at(profile, t)) + shift + noise[i]
        t = t + rr / 1000.0
        ts.append(t)
        rrs.append(rr)
        if t >= t_end:
            break
    return ts, rrs


def generate_rr(
    profile: SubjectProfile,
    duration_s: float,
    seed: int | None = None,
    *,
    subject_id: str = "S1",
    device: DeviceKind = DeviceKind.GENERIC,
) -> RRSeries:
    """Beats from t = 0 until the first beat at or after ``duration_s``."""
    profile.validate()
    if duration_s <= 0:
        raise ValueError("duration_s must be > 0")
    rng = np.random.default_rng(profile.seed if seed is None else seed)
    ts, rrs = _beats(profile, 0.0, duration_s, rng)
    return RRSeries(subject_id, device, 0.0, np.array(ts), np.array(rrs))


def _event_positions(n: int, spec: ArtifactSpec, t: np.ndarray, rng) -> list[int]:
    if spec.count is not None:
        span = spec.burst_len + spec.min_gap
        candidates = rng.permutation(np.arange(spec.skip_head, max(spec.skip_head, n - spec.burst_len + 1)))
        chosen: list[int] = []
        for c in candidates:
            if len(chosen) == spec.count:
                break
            if all(abs(int(c) - o) >= span for o in chosen):
                chosen.append(int(c))
        if len(chosen) < spec.count:
            raise ValueError(f"cannot place {spec.count} separated events in {n} beats")
        return sorted(chosen)
    if spec.spike_rate == 0 or n == 0:
        return []
    minutes = int(math.ceil(t[-1] / 60.0))
    # below ~1e-6 the Gamma shape overflows; the rate is constant for all purposes
    if spec.rate_dispersion > 1e-6:
        shape = 1.0 / spec.rate_dispersion**2
        rates = spec.spike_rate * rng.gamma(shape, 1.0 / shape, minutes)
    else:
        rates = np.full(minutes, spec.spike_rate)
    positions = []
    for m, lam in enumerate(rates):
        k = rng.poisson(lam)
        times = np.sort(rng.uniform(60.0 * m, 60.0 * (m + 1), k))
        idx = np.searchsorted(t, times)
        positions += [int(i) for i in idx if spec.skip_head <= i < n]
    return positions


def inject_artifacts(series: RRSeries, spec: ArtifactSpec, seed: int = 0) -> tuple[RRSeries, np.ndarray]:
    """Return the corrupted series and the exact mask of modified beats."""
    rng = np.random.default_rng(seed)
    n = len(series)
    rr = series.rr.copy()
    mask = np.zeros(n, dtype=bool)
    for pos in _event_positions(n, spec, series.t, rng):
        factor = 1.0 + spec.spike_rel_amp * (1.0 if rng.random() < 0.5 else -1.0)
        for i in range(pos, min(pos + spec.burst_len, n)):
            if not mask[i]:
                rr[i] *= factor
                mask[i] = True
    return series.with_rr(rr), mask


@dataclass(frozen=True, eq=False)
class SyntheticSubject:
    subject_id: str
    device: DeviceKind
    profile: SubjectProfile
    clean: RRSeries
    series: RRSeries
    truth_mask: np.ndarray


def device_assignment(n_subjects: int) -> list[DeviceKind]:
    total = sum(c for _, c in DEVICE_SPLIT)
    counts = [round(n_subjects * c / total) for _, c in DEVICE_SPLIT[:-1]]
    counts.append(n_subjects - sum(counts))
    out = []
    for (kind, _), c in zip(DEVICE_SPLIT, counts):
        out += [kind] * c
    return out


def draw_profile(rng, separation: float, seed: int) -> SubjectProfile:
    """Population around a common centre; ``separation`` scales the spread."""
    s = separation
    z = rng.normal(size=7)
    lf_amp = 35.0 * math.exp(s * 0.35 * z[1])
    hf_amp = 25.0 * math.exp(s * 0.35 * z[2])
    noise = 10.0 * math.exp(s * 0.3 * z[3])
    vlf_amp = 30.0 * math.exp(s * 0.35 * z[4])
    sdnn = math.sqrt(vlf_amp**2 / 2 + lf_amp**2 / 2 + hf_amp**2 / 2 + noise**2)
    return SubjectProfile(
        mean_rr=850.0 + s * 90.0 * z[0],
        sdnn_target=sdnn,
        lf_amp=lf_amp,
        lf_freq=float(np.clip(0.095 + s * 0.02 * z[5], 0.05, 0.14)),
        hf_amp=hf_amp,
        hf_freq=float(np.clip(0.25 + s * 0.05 * z[6], 0.17, 0.38)),
        noise_sd=noise,
        seed=seed,
    )


def generate_session_plan(profile: SubjectProfile, plan: Sequence[Session], rng,
                          subject_id: str, device: DeviceKind) -> RRSeries:
    """One continuous recording running through every session of ``plan``."""
    ts, rrs = [], []
    t0 = 0.0
    for sess in plan:
        seg_t, seg_rr = _beats(profile, t0, sess.duration_s, rng, sess.rr_shift_ms)
        ts += seg_t
        rrs += seg_rr
        t0 = seg_t[-1]
    return RRSeries(subject_id, device, 0.0, np.array(ts), np.array(rrs))


def generate_corpus(
    n_subjects: int = 28,
    session_plan: Sequence[Session] = DEFAULT_SESSION_PLAN,
    separation: float = 1.0,
    seed: int = 0,
    *,
    artifacts: bool = True,
    device_artifacts: dict | None = None,
) -> list[SyntheticSubject]:
    if n_subjects < 2:
        raise ValueError("a corpus needs at least 2 subjects")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    specs = {**DEVICE_ARTIFACTS, **(device_artifacts or {})}
    root = np.random.SeedSequence(seed)
    pop_rng = np.random.default_rng(root.spawn(1)[0])
    subject_seeds = root.spawn(n_subjects + 1)[1:]
    corpus = []
    for i, device in enumerate(device_assignment(n_subjects)):
        sid = f"P{i + 1}"
        rec_seed, art_seed = (int(s) for s in subject_seeds[i].generate_state(2))
        profile = draw_profile(pop_rng, separation, rec_seed)
        profile.validate()
        clean = generate_session_plan(profile, session_plan, np.random.default_rng(rec_seed), sid, device)
        if artifacts:
            series, mask = inject_artifacts(clean, specs[device], art_seed)
        else:
            series, mask = clean, np.zeros(len(clean), dtype=bool)
        corpus.append(SyntheticSubject(sid, device, profile, clean, series, mask))
    return corpus


def write_corpus(corpus: Sequence[SyntheticSubject], directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for subj in corpus:
        p = directory / f"{subj.subject_id}.csv"
        p.write_text(write_generic(subj.series))
        paths.append(p)
    return paths


def with_seed(profile: SubjectProfile, seed: int) -> SubjectProfile:
    return replace(profile, seed=seed)
