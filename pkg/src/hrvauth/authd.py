"""Online continuous authentication over a sliding window of beats.

Beats are screened by the causal artifact rule as they arrive. Decisions fall
on a fixed grid: the first one ``window_s`` after the start of the first
interval, then every ``stride_s``. Each decision scores the beats of
``[due - window_s, due)``, reconstructed and featurised exactly like an
offline window. The emitted verdict is the majority of the last ``smoothing``
raw verdicts (a tie rejects).
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import HRVAuthError, StreamError
from .features import SpectralConfig, extract
from .ingest import RRSample, RRSeries
from .modeling.model import TrainedModel
from .preprocess import (
    DEFAULT_LOCAL_WINDOW,
    DEFAULT_REL_THRESHOLD,
    DEFAULT_WINDOW_S,
    MIN_SPLINE_POINTS,
    CausalDetector,
    CleanWindow,
    reconstruct,
)


class Verdict(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    INSUFFICIENT = "InsufficientData"


@dataclass(frozen=True)
class Decision:
    timestamp: float
    verdict: Verdict
    score: float | None = None
    quality: float | None = None

    def __post_init__(self):
        if self.verdict is not Verdict.INSUFFICIENT and self.score is None:
            raise ValueError("Accept/Reject decisions carry a score")

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "verdict": self.verdict.value,
            "score": self.score,
            "quality": self.quality,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)


@dataclass(frozen=True)
class AuthConfig:
    window_s: float = DEFAULT_WINDOW_S
    stride_s: float = 5.0
    smoothing: int = 3
    min_quality: float = 0.0
    rel_threshold: float = DEFAULT_REL_THRESHOLD
    local_window: int = DEFAULT_LOCAL_WINDOW
    spectral: SpectralConfig = field(default_factory=SpectralConfig)

    def __post_init__(self):
        if not self.window_s > 0 or not 0 < self.stride_s <= self.window_s:
            raise ValueError("need window_s > 0 and 0 < stride_s <= window_s")
        if self.smoothing < 1:
            raise ValueError("smoothing depth must be >= 1")
        if not 0.0 <= self.min_quality <= 1.0:
            raise ValueError("min_quality must be in [0, 1]")


class SessionState:
    """One beat stream against one enrolled model. Not thread-safe; the model
    is only read."""

    def __init__(self, model: TrainedModel, threshold: float, cfg: AuthConfig = AuthConfig()):
        self.model = model
        self.threshold = threshold
        self.cfg = cfg
        self.detector = CausalDetector(cfg.rel_threshold, cfg.local_window)
        self.t: deque[float] = deque()
        self.rr: deque[float] = deque()
        self.flagged: deque[bool] = deque()
        self.raw: deque[bool] = deque(maxlen=cfg.smoothing)
        self.anchor: float | None = None
        self.next_due: float | None = None
        self.last_t: float | None = None
        self.log: list[Decision] = []

    def push(self, sample: RRSample) -> list[Decision]:
        """Buffer one beat; return the decisions that became due (usually 0 or 1)."""
        t, rr = float(sample[0]), float(sample[1])
        if not (math.isfinite(t) and math.isfinite(rr)) or rr <= 0:
            raise StreamError(f"invalid beat (t={t!r}, rr={rr!r})")
        if self.last_t is not None and t <= self.last_t:
            raise StreamError(f"beat at t={t!r} does not follow t={self.last_t!r}")
        if self.anchor is None:
            self.anchor = t - rr / 1000.0
            self.next_due = self.anchor + self.cfg.window_s
        self.last_t = t
        out = []
        # decisions due before this beat see only the beats already buffered
        while t >= self.next_due:
            out.append(self._decide(self.next_due))
            self.next_due = self.anchor + self.cfg.window_s + self.cfg.stride_s * (len(self.log) + len(out))
        self.t.append(t)
        self.rr.append(rr)
        self.flagged.append(self.detector.push(rr))
        horizon = t - (self.cfg.window_s + self.cfg.stride_s)
        while self.t and self.t[0] < horizon:
            self.t.popleft()
            self.rr.popleft()
            self.flagged.popleft()
        self.log += out
        return out

    def _decide(self, due: float) -> Decision:
        start = due - self.cfg.window_s
        t = np.fromiter(self.t, float, len(self.t))
        lo, hi = np.searchsorted(t, [start, due], side="left")
        t = t[lo:hi]
        rr = np.fromiter(self.rr, float, len(self.rr))[lo:hi]
        flagged = np.fromiter(self.flagged, bool, len(self.flagged))[lo:hi]
        if len(t) == 0:
            return Decision(due, Verdict.INSUFFICIENT, None, 0.0)
        quality = float(np.count_nonzero(~flagged)) / len(t)
        if quality < self.cfg.min_quality or np.count_nonzero(~flagged) < MIN_SPLINE_POINTS:
            return Decision(due, Verdict.INSUFFICIENT, None, quality)
        try:
            window = CleanWindow(start, self.cfg.window_s, t, reconstruct(t, rr, flagged), flagged, quality)
            feats = extract(window, self.cfg.spectral)
        except HRVAuthError:
            return Decision(due, Verdict.INSUFFICIENT, None, quality)
        if not feats.is_finite():
            return Decision(due, Verdict.INSUFFICIENT, None, quality)
        score = float(self.model.score(feats))
        self.raw.append(score >= self.threshold)
        accept = 2 * sum(self.raw) > len(self.raw)
        return Decision(due, Verdict.ACCEPT if accept else Verdict.REJECT, score, quality)

    @property
    def buffered(self) -> int:
        return len(self.t)


def enroll(model: TrainedModel, threshold: float | None = None, cfg: AuthConfig = AuthConfig()) -> SessionState:
    """Fresh session; ``threshold`` defaults to the model's enrollment EER threshold."""
    if threshold is None:
        if "eer_threshold" not in model.metadata:
            raise ValueError("model carries no enrollment threshold; pass one explicitly")
        threshold = model.metadata["eer_threshold"]
    threshold = float(threshold)
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"accept threshold {threshold!r} outside [0, 1]")
    return SessionState(model, threshold, cfg)


def push_beat(state: SessionState, sample: RRSample) -> Decision | None:
    """Streaming entry point; returns the newest decision emitted by this beat."""
    out = state.push(sample)
    return out[-1] if out else None


def poll(state: SessionState) -> Decision:
    """Latest decision, or InsufficientData while the first window fills."""
    if state.log:
        return state.log[-1]
    return Decision(state.last_t if state.last_t is not None else 0.0, Verdict.INSUFFICIENT)


def replay(state: SessionState, series: RRSeries) -> list[Decision]:
    """Feed ``series`` beat by beat; a stream too short for any decision yields
    a single InsufficientData record."""
    out: list[Decision] = []
    for sample in zip(series.t.tolist(), series.rr.tolist()):
        out += state.push(RRSample(*sample))
    if not out:
        out.append(poll(state))
    return out


def decision_log(decisions) -> str:
    """Newline-delimited JSON, one record per decision."""
    return "".join(d.to_json() + "\n" for d in decisions)


def read_decision_log(text: str) -> list[Decision]:
    out = []
    for line in text.splitlines():
        if line.strip():
            d = json.loads(line)
            out.append(Decision(d["timestamp"], Verdict(d["verdict"]), d["score"], d["quality"]))
    return out
