"""The eleven short-term HRV features computed per window.

Time domain: mean RR, STD RR, RMSSD, pNN50, HRV triangular index, TINN, SDSD.
Frequency domain: VLF, LF, HF band powers and the LF/HF ratio, from an FFT
periodogram of the RR series resampled to a uniform 4 Hz grid.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import windows as sp_windows

from .errors import InsufficientDataError
from .preprocess import SPLINE_BC, CleanWindow

BIN_WIDTH_MS = 1000.0 / 128.0
PNN_THRESHOLD_MS = 50.0

FEATURE_NAMES = (
    "mean_rr",
    "std_rr",
    "rmssd",
    "pnn50",
    "tri_index",
    "tinn",
    "sdsd",
    "lf",
    "hf",
    "lf_hf",
    "vlf",
)
TIME_FEATURES = FEATURE_NAMES[:7]


@dataclass(frozen=True)
class HRVFeatures:
    mean_rr: float
    std_rr: float
    rmssd: float
    pnn50: float
    tri_index: float
    tinn: float
    sdsd: float
    lf: float
    hf: float
    lf_hf: float
    vlf: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "HRVFeatures":
        return cls(*(float(v) for v in values))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


@dataclass(frozen=True)
class SpectralConfig:
    resample_hz: float = 4.0
    vlf_band: tuple[float, float] = (0.0, 0.04)
    lf_band: tuple[float, float] = (0.04, 0.15)
    hf_band: tuple[float, float] = (0.15, 0.4)
    detrend: bool = True
    window: str = "hann"

    def __post_init__(self):
        if not self.resample_hz > 0:
            raise ValueError("resample_hz must be > 0")
        bands = [self.vlf_band, self.lf_band, self.hf_band]
        nyquist = self.resample_hz / 2
        for lo, hi in bands:
            if not 0 <= lo < hi <= nyquist:
                raise ValueError(f"band ({lo}, {hi}) must satisfy 0 <= lo < hi <= {nyquist}")
        for (_, hi), (lo, _) in zip(bands, bands[1:]):
            if lo < hi:
                raise ValueError("bands must be ordered and non-overlapping")
        if self.window not in ("hann", "boxcar"):
            raise ValueError(f"unsupported spectral window {self.window!r}")


# ---------------------------------------------------------------- time domain


def time_domain(window: CleanWindow) -> dict[str, float]:
    rr = np.asarray(window.rr, dtype=np.float64)
    n = len(rr)
    if n < 3:
        raise InsufficientDataError(f"time-domain features need >= 3 beats, window has {n}")
    diff = np.diff(rr)
    hist = tri_histogram(rr)
    return {
        "mean_rr": float(np.mean(rr)),
        "std_rr": float(np.std(rr, ddof=1)),
        "rmssd": float(np.sqrt(np.mean(diff * diff))),
        "pnn50": float(100.0 * np.count_nonzero(np.abs(diff) > PNN_THRESHOLD_MS) / (n - 1)),
        "tri_index": triangular_index(hist, n),
        "tinn": tinn(hist),
        "sdsd": float(np.std(diff, ddof=1)),
    }


@dataclass(frozen=True)
class Histogram:
    """RR histogram on 1/128 s bins; ``counts[i]`` is bin ``first_bin + i``.

    Bin ``j`` covers ``[j * BIN_WIDTH_MS, (j + 1) * BIN_WIDTH_MS)``.
    """

    first_bin: int
    counts: np.ndarray

    def count(self, j: int) -> int:
        i = j - self.first_bin
        return int(self.counts[i]) if 0 <= i < len(self.counts) else 0


def tri_histogram(rr) -> Histogram:
    rr = np.asarray(getattr(rr, "rr", rr), dtype=np.float64)
    if len(rr) == 0:
        raise InsufficientDataError("histogram of an empty window")
    idx = np.floor(rr / BIN_WIDTH_MS).astype(np.int64)
    lo = int(idx.min())
    return Histogram(lo, np.bincount(idx - lo))


def triangular_index(hist: Histogram, n_beats: int) -> float:
    return n_beats / float(hist.counts.max())


def _first_min(err: np.ndarray) -> int:
    # exact ties are common (integer counts); do not let rounding pick the winner
    best = err.min()
    return int(np.flatnonzero(err <= best + 1e-9 * max(1.0, best))[0])


def tinn(hist: Histogram) -> float:
    """Base width (ms) of the least-squares triangle fitted to the histogram.

    The apex sits at the centre of the (first) modal bin with the modal count
    as height; the feet ``N < apex < M`` range over bin edges, extended by one
    support width beyond the populated bins. The squared error separates into
    a left part depending only on ``N`` and a right part depending only on
    ``M``, so each side is minimised independently (ties: lowest edge index).
    """
    counts = hist.counts.astype(np.float64)
    if np.count_nonzero(counts) < 3:
        return 0.0
    support = len(counts)
    mode = int(np.argmax(counts))
    height = counts[mode]
    apex = mode + 0.5  # in bin units, relative to first_bin

    # bin indices relative to first_bin; bins outside the support count zero
    lo = -min(support, hist.first_bin)
    hi = 2 * support
    padded = np.zeros(hi - lo)
    padded[-lo:-lo + support] = counts

    feet_left = np.arange(lo, mode + 1, dtype=np.float64)
    left_c = np.arange(lo, mode) + 0.5
    left_h = padded[: mode - lo]
    q = height * (left_c[None, :] - feet_left[:, None]) / (apex - feet_left[:, None])
    q = np.where(left_c[None, :] > feet_left[:, None], q, 0.0)
    n_foot = feet_left[_first_min(((left_h[None, :] - q) ** 2).sum(axis=1))]

    feet_right = np.arange(mode + 1, hi + 1, dtype=np.float64)
    right_c = np.arange(mode + 1, hi) + 0.5
    right_h = padded[mode + 1 - lo:]
    q = height * (feet_right[:, None] - right_c[None, :]) / (feet_right[:, None] - apex)
    q = np.where(right_c[None, :] < feet_right[:, None], q, 0.0)
    m_foot = feet_right[_first_min(((right_h[None, :] - q) ** 2).sum(axis=1))]

    return float((m_foot - n_foot) * BIN_WIDTH_MS)


# ---------------------------------------------------------------- frequency domain


def resample_4hz(window: CleanWindow, cfg: SpectralConfig = SpectralConfig()) -> np.ndarray:
    """Cubic-spline resampling of (t, rr) onto a uniform grid over the window.

    Grid points are ``window_start + k / resample_hz``; points before the first
    or after the last beat take the nearest beat value.
    """
    t = np.asarray(window.t, dtype=np.float64)
    rr = np.asarray(window.rr, dtype=np.float64)
    if len(t) < 4:
        raise InsufficientDataError(f"resampling needs >= 4 beats, window has {len(t)}")
    n = int(round(window.duration * cfg.resample_hz))
    grid = window.window_start + np.arange(n) / cfg.resample_hz
    spline = CubicSpline(t, rr, bc_type=SPLINE_BC, extrapolate=False)
    out = spline(np.clip(grid, t[0], t[-1]))
    if cfg.detrend:
        out = out - out.mean()
    return out


def _taper(n: int, cfg: SpectralConfig) -> np.ndarray:
    if cfg.window == "hann":
        return sp_windows.hann(n, sym=False)
    return np.ones(n)


def periodogram(signal, cfg: SpectralConfig = SpectralConfig()) -> tuple[np.ndarray, np.ndarray]:
    """One-sided power per frequency bin (ms^2), normalised so that the bins
    sum to the taper-weighted mean power ``sum((w*x)^2) / sum(w^2)``."""
    x = np.asarray(signal, dtype=np.float64)
    n = len(x)
    w = _taper(n, cfg)
    spec = np.fft.rfft(w * x)
    power = (spec.real**2 + spec.imag**2) / (n * np.sum(w * w))
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0
    # k * fs / n rounds once, so a bin exactly on a band edge compares equal to it;
    # rfftfreq's k * (1 / (n d)) can land one ulp low (19 / 47.5 -> 0.39999999999999997)
    freqs = np.arange(len(power)) * cfg.resample_hz / n
    return freqs, power


def windowed_energy(signal, cfg: SpectralConfig = SpectralConfig()) -> float:
    """Time-domain counterpart of ``periodogram(...).sum()`` (Parseval)."""
    x = np.asarray(signal, dtype=np.float64)
    w = _taper(len(x), cfg)
    return float(np.sum((w * x) ** 2) / np.sum(w * w))


def _band(freqs, power, band, exclude_dc=False) -> float:
    lo, hi = band
    sel = (freqs >= lo) & (freqs < hi)
    if exclude_dc:
        sel &= freqs > 0
    return float(power[sel].sum())


def band_powers(signal, cfg: SpectralConfig = SpectralConfig()) -> tuple[float, float, float, float]:
    """Return ``(vlf, lf, hf, lf_hf)``; ``lf_hf`` is NaN when ``hf == 0``."""
    if len(signal) < 8:
        raise InsufficientDataError("band powers need a signal of >= 8 samples")
    freqs, power = periodogram(signal, cfg)
    vlf = _band(freqs, power, cfg.vlf_band, exclude_dc=True)
    lf = _band(freqs, power, cfg.lf_band)
    hf = _band(freqs, power, cfg.hf_band)
    lf_hf = lf / hf if hf > 0 else math.nan
    return vlf, lf, hf, lf_hf


def extract(window: CleanWindow, cfg: SpectralConfig = SpectralConfig()) -> HRVFeatures:
    td = time_domain(window)
    vlf, lf, hf, lf_hf = band_powers(resample_4hz(window, cfg), cfg)
    return HRVFeatures(lf=lf, hf=hf, lf_hf=lf_hf, vlf=vlf, **td)


# ---------------------------------------------------------------- feature matrix


@dataclass
class FeatureMatrix:
    """Feature rows for many windows plus per-row provenance."""

    X: np.ndarray
    subject_ids: np.ndarray
    devices: np.ndarray
    window_starts: np.ndarray
    qualities: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
        self.subject_ids = np.asarray(self.subject_ids, dtype=object)
        self.devices = np.asarray(self.devices, dtype=object)
        self.window_starts = np.asarray(self.window_starts, dtype=np.float64)
        self.qualities = np.asarray(self.qualities, dtype=np.float64)
        n = len(self.X)
        for name in ("subject_ids", "devices", "window_starts", "qualities"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} rows, X has {n}")

    def __len__(self) -> int:
        return len(self.X)

    def subset(self, index) -> "FeatureMatrix":
        return FeatureMatrix(
            self.X[index],
            self.subject_ids[index],
            self.devices[index],
            self.window_starts[index],
            self.qualities[index],
        )

    def subjects(self) -> list[str]:
        return sorted(set(self.subject_ids.tolist()))

    def device_of(self, subject: str) -> str:
        return str(self.devices[np.flatnonzero(self.subject_ids == subject)[0]])

    @classmethod
    def from_windows(cls, windows: Sequence[CleanWindow], cfg: SpectralConfig = SpectralConfig(), *, skipped=None):
        """Extract features for every window; windows whose features are
        undefined (too few beats, ``hf == 0``) are left out and, when given,
        appended to ``skipped`` as ``(window, reason)``."""
        rows, meta = [], []
        for w in windows:
            try:
                f = extract(w, cfg)
            except InsufficientDataError as exc:
                if skipped is not None:
                    skipped.append((w, str(exc)))
                continue
            if not f.is_finite():
                if skipped is not None:
                    skipped.append((w, "undefined feature (hf = 0)"))
                continue
            rows.append(f.as_array())
            meta.append((w.subject_id, w.device.value, w.window_start, w.quality))
        if not rows:
            return cls(np.empty((0, len(FEATURE_NAMES))), [], [], [], [])
        sid, dev, start, q = zip(*meta)
        return cls(np.vstack(rows), sid, dev, start, q)

    def to_csv(self, header_lines: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        buf.write(",".join(("subject_id", "device", "window_start", "quality") + FEATURE_NAMES) + "\n")
        for i in range(len(self)):
            vals = [repr(float(v)) for v in self.X[i]]
            buf.write(
                ",".join(
                    [str(self.subject_ids[i]), str(self.devices[i]),
                     repr(float(self.window_starts[i])), repr(float(self.qualities[i]))] + vals
                )
                + "\n"
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FeatureMatrix":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        header = lines[0].split(",")
        expected = ["subject_id", "device", "window_start", "quality", *FEATURE_NAMES]
        if header != expected:
            raise ValueError(f"unexpected feature CSV header {header}")
        sid, dev, start, q, X = [], [], [], [], []
        for ln in lines[1:]:
            parts = ln.split(",")
            sid.append(parts[0])
            dev.append(parts[1])
            start.append(float(parts[2]))
            q.append(float(parts[3]))
            X.append([float(v) for v in parts[4:]])
        return cls(np.array(X, dtype=np.float64).reshape(-1, len(FEATURE_NAMES)), sid, dev, start, q)

