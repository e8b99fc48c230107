"""Artifact detection, gap reconstruction and 120 s windowing of RR series."""

from __future__ import annotations

import io
import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InsufficientDataError, ShortSeriesWarning
from .ingest import DeviceKind, RRSeries

DEFAULT_REL_THRESHOLD = 0.20
DEFAULT_LOCAL_WINDOW = 5
DEFAULT_WINDOW_S = 120.0
MIN_SPLINE_POINTS = 4

# not-a-knot reproduces cubics exactly; "natural" does not (see README)
SPLINE_BC = "not-a-knot"


@dataclass(frozen=True)
class ConstraintConfig:
    min_consecutive_samples: int = 5
    min_consecutive_seconds: float = 5.0

    def __post_init__(self):
        if self.min_consecutive_samples < 1:
            raise ValueError("min_consecutive_samples must be a positive integer")
        if not self.min_consecutive_seconds > 0:
            raise ValueError("min_consecutive_seconds must be > 0")


@dataclass(frozen=True, eq=False)
class CleanWindow:
    """A fixed-length time window of (reconstructed) beats.

    ``flagged`` marks beats whose value came from interpolation; ``quality`` is
    the fraction of beats in the window that were validated by the detector.
    """

    window_start: float
    duration: float
    t: np.ndarray
    rr: np.ndarray
    flagged: np.ndarray
    quality: float
    subject_id: str = "unknown"
    device: DeviceKind = DeviceKind.GENERIC

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("window duration must be > 0")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"quality {self.quality!r} outside [0, 1]")
        if len(self.t) and (
            self.t[0] < self.window_start or self.t[-1] >= self.window_start + self.duration
        ):
            raise ValueError("beat outside window bounds")

    @property
    def beats(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.t, self.rr)]

    def __len__(self) -> int:
        return len(self.t)


class CausalDetector:
    """Streaming form of the relative-deviation artifact rule.

    A beat is an artifact when it deviates from the mean of the most recent
    ``local_window`` accepted beats by more than ``rel_threshold`` of that mean.
    The first ``local_window`` beats seed the average and are always accepted.
    """

    def __init__(self, rel_threshold: float = DEFAULT_REL_THRESHOLD, local_window: int = DEFAULT_LOCAL_WINDOW):
        if not 0.0 < rel_threshold < 1.0:
            raise ValueError("rel_threshold must be in (0, 1)")
        if local_window < 1:
            raise ValueError("local_window must be >= 1")
        self.rel_threshold = rel_threshold
        self.local_window = local_window
        self._accepted: deque[float] = deque(maxlen=local_window)
        self._seen = 0

    def push(self, rr: float) -> bool:
        """Return True when ``rr`` is flagged as an artifact."""
        self._seen += 1
        if self._seen <= self.local_window:
            self._accepted.append(rr)
            return False
        avg = sum(self._accepted) / len(self._accepted)
        if abs(rr - avg) > self.rel_threshold * avg:
            return True
        self._accepted.append(rr)
        return False


def detect_artifacts(
    series: RRSeries,
    rel_threshold: float = DEFAULT_REL_THRESHOLD,
    local_window: int = DEFAULT_LOCAL_WINDOW,
) -> np.ndarray:
    """Boolean artifact mask aligned with ``series`` (True = artifact)."""
    detector = CausalDetector(rel_threshold, local_window)
    n = len(series)
    if n < local_window:
        warnings.warn(
            f"series has {n} beats, fewer than local_window={local_window}; nothing flagged",
            ShortSeriesWarning,
            stacklevel=2,
        )
    return np.fromiter((detector.push(float(v)) for v in series.rr), dtype=bool, count=n)


def _check_mask(series: RRSeries, mask) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != series.t.shape:
        raise ValueError(f"mask length {mask.shape} does not match series length {series.t.shape}")
    return mask


def reconstruct(t: np.ndarray, rr: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Array-level core of :func:`remove_and_interpolate`."""
    good = ~mask
    if good.sum() < MIN_SPLINE_POINTS:
        raise InsufficientDataError(
            f"{int(good.sum())} validated beats; cubic spline needs at least {MIN_SPLINE_POINTS}"
        )
    out = np.array(rr, dtype=np.float64, copy=True)
    if not mask.any():
        return out
    tg, rg = t[good], rr[good]
    spline = CubicSpline(tg, rg, bc_type=SPLINE_BC, extrapolate=False)
    bad = np.flatnonzero(mask)
    tb = t[bad]
    inside = (tb >= tg[0]) & (tb <= tg[-1])
    out[bad[inside]] = spline(tb[inside])
    # a spline across a long gap can swing below zero; fall back to linear there
    neg = out <= 0
    if neg.any():
        out[neg] = np.interp(t[neg], tg, rg)
    # edges: nearest validated value, no extrapolation
    out[bad[tb < tg[0]]] = rg[0]
    out[bad[tb > tg[-1]]] = rg[-1]
    return out


def remove_and_interpolate(series: RRSeries, mask) -> RRSeries:
    """Replace flagged beats by a cubic spline through the validated ones.

    Output has the same length and timestamps; validated beats are copied
    unchanged.
    """
    mask = _check_mask(series, mask)
    return series.with_rr(reconstruct(series.t, series.rr, mask))


def apply_constraints(series: RRSeries, mask, cfg: ConstraintConfig) -> list[RRSeries]:
    """Keep maximal runs of validated beats that satisfy both run-length minima.

    A run's duration is the time its beats cover, i.e. the sum of their
    intervals.
    """
    mask = _check_mask(series, mask)
    return [series.take(slice(lo, hi)) for lo, hi in _constrained_runs(series, mask, cfg)]


def _constrained_runs(series: RRSeries, mask: np.ndarray, cfg: ConstraintConfig):
    for lo, hi in _runs(~mask):
        covered_s = float(np.sum(series.rr[lo:hi])) / 1000.0
        if hi - lo >= cfg.min_consecutive_samples and covered_s >= cfg.min_consecutive_seconds:
            yield lo, hi


def _runs(flags: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate(([False], flags, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def window_starts(end_t: float, window_s: float, stride_s: float) -> np.ndarray:
    """Start times ``k * stride_s`` of every complete window ending by ``end_t``."""
    if end_t < window_s:
        return np.empty(0)
    # small slack so that e.g. (360 - 120) / 5 is not floored to 47.999...
    count = math.floor((end_t - window_s) / stride_s + 1e-9) + 1
    return np.arange(count) * stride_s


def segment_windows(
    series: RRSeries,
    window_s: float = DEFAULT_WINDOW_S,
    stride_s: float = DEFAULT_WINDOW_S,
    mask=None,
    keep=None,
) -> list[CleanWindow]:
    """Cut ``series`` into windows ``[k*stride_s, k*stride_s + window_s)``.

    The series spans ``[0, t_last]``; a trailing partial window is dropped.
    ``mask`` marks artifact beats (for quality); ``keep`` optionally restricts
    which beats are carried into each window (constraint-based path), while
    quality is still computed over all beats of the window.
    """
    if not window_s > 0:
        raise ValueError("window_s must be > 0")
    if not 0 < stride_s <= window_s:
        raise ValueError("stride_s must satisfy 0 < stride_s <= window_s")
    mask = np.zeros(len(series), bool) if mask is None else _check_mask(series, mask)
    keep = np.ones(len(series), bool) if keep is None else _check_mask(series, keep)
    starts = window_starts(series.duration, window_s, stride_s)
    if len(starts) == 0:
        warnings.warn(
            f"series spans {series.duration:.1f} s, shorter than one {window_s:g} s window",
            ShortSeriesWarning,
            stacklevel=2,
        )
        return []
    t = series.t
    lo = np.searchsorted(t, starts, side="left")
    hi = np.searchsorted(t, starts + window_s, side="left")
    windows = []
    for start, a, b in zip(starts, lo, hi):
        total = b - a
        quality = float(np.count_nonzero(~mask[a:b])) / total if total else 0.0
        sel = np.arange(a, b)[keep[a:b]]
        windows.append(
            CleanWindow(
                window_start=float(start),
                duration=float(window_s),
                t=t[sel],
                rr=series.rr[sel],
                flagged=mask[sel],
                quality=quality,
                subject_id=series.subject_id,
                device=series.device,
            )
        )
    return windows


def filter_by_quality(windows, min_quality: float) -> list[CleanWindow]:
    if not 0.0 <= min_quality <= 1.0:
        raise ValueError("min_quality must be in [0, 1]")
    return [w for w in windows if w.quality >= min_quality]


@dataclass(frozen=True)
class PreprocessConfig:
    rel_threshold: float = DEFAULT_REL_THRESHOLD
    local_window: int = DEFAULT_LOCAL_WINDOW
    window_s: float = DEFAULT_WINDOW_S
    stride_s: float = DEFAULT_WINDOW_S
    method: str = "interpolate"
    constraints: ConstraintConfig = ConstraintConfig()

    def __post_init__(self):
        if self.method not in ("interpolate", "constraints"):
            raise ValueError(f"unknown preprocessing method {self.method!r}")


def preprocess_series(series: RRSeries, cfg: PreprocessConfig = PreprocessConfig()) -> list[CleanWindow]:
    """Detector, then reconstruction (or run constraints), then windowing."""
    mask = detect_artifacts(series, cfg.rel_threshold, cfg.local_window)
    if cfg.method == "interpolate":
        clean = remove_and_interpolate(series, mask)
        return segment_windows(clean, cfg.window_s, cfg.stride_s, mask=mask)
    keep = np.zeros(len(series), bool)
    for lo, hi in _constrained_runs(series, mask, cfg.constraints):
        keep[lo:hi] = True
    return segment_windows(series, cfg.window_s, cfg.stride_s, mask=mask, keep=keep)


def debug_dump(series: RRSeries, mask, reconstructed: RRSeries) -> str:
    """CSV with columns ``t,rr_raw,artifact,rr_clean`` for visual inspection."""
    mask = _check_mask(series, mask)
    buf = io.StringIO()
    buf.write("t,rr_raw,artifact,rr_clean\n")
    for a, b, m, c in zip(series.t, series.rr, mask, reconstructed.rr):
        buf.write(f"{float(a)!r},{float(b)!r},{int(m)},{float(c)!r}\n")
    return buf.getvalue()
