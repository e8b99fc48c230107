"""Independent reference implementations used by the tests.

Everything here is written straight from the feature and metric definitions
with plain loops, and shares no code with the package under test.
"""

import math

import numpy as np

BIN_MS = 1000.0 / 128.0


def time_domain(rr):
    """The seven time-domain features, computed with Python floats and loops."""
    rr = [float(v) for v in rr]
    n = len(rr)
    mean = sum(rr) / n
    var = sum((v - mean) ** 2 for v in rr) / (n - 1)
    diffs = [rr[i + 1] - rr[i] for i in range(n - 1)]
    m = len(diffs)
    rmssd = math.sqrt(sum(d * d for d in diffs) / m)
    nn50 = sum(1 for d in diffs if abs(d) > 50.0)
    dmean = sum(diffs) / m
    sdsd = math.sqrt(sum((d - dmean) ** 2 for d in diffs) / (m - 1))
    counts = histogram(rr)
    return {
        "mean_rr": mean,
        "std_rr": math.sqrt(var),
        "rmssd": rmssd,
        "pnn50": 100.0 * nn50 / m,
        "tri_index": n / max(counts.values()),
        "tinn": tinn(counts),
        "sdsd": sdsd,
    }


def histogram(rr) -> dict:
    counts: dict[int, int] = {}
    for v in rr:
        j = int(math.floor(v / BIN_MS))
        counts[j] = counts.get(j, 0) + 1
    return counts


def tinn(counts: dict) -> float:
    """Exhaustive (N, M) search for the least-squares triangle.

    Apex at the centre of the lowest modal bin with the modal count as height.
    Feet run over bin edges; the search domain reaches one support width past
    the populated bins on each side (never below bin 0). The error is summed
    over bin centres of the whole domain.
    """
    if sum(1 for c in counts.values() if c > 0) < 3:
        return 0.0
    lo_bin, hi_bin = min(counts), max(counts)
    width = hi_bin - lo_bin + 1
    height = max(counts.values())
    mode = min(j for j, c in counts.items() if c == height)
    apex = mode + 0.5
    dom_lo = max(0, lo_bin - width)
    dom_hi = hi_bin + width + 1  # exclusive bin index; also the last edge
    n_edges = np.arange(dom_lo, mode + 1, dtype=float)[:, None, None]
    m_edges = np.arange(mode + 1, dom_hi + 1, dtype=float)[None, :, None]
    c = np.arange(dom_lo, dom_hi, dtype=float)[None, None, :] + 0.5
    h = np.array([counts.get(j, 0) for j in range(dom_lo, dom_hi)], dtype=float)
    rising = (c > n_edges) & (c <= apex)
    falling = (c > apex) & (c < m_edges)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(rising, height * (c - n_edges) / (apex - n_edges), 0.0)
        q = np.where(falling, height * (m_edges - c) / (m_edges - apex), q)
    err = ((h - q) ** 2).sum(axis=2)
    # first minimum in (N, M) lexicographic order, ties up to rounding
    low = err.min()
    i, j = np.unravel_index(int(np.flatnonzero(err.ravel() <= low + 1e-9 * max(1.0, low))[0]), err.shape)
    best = (err[i, j], dom_lo + i, mode + 1 + j)
    return (best[2] - best[1]) * BIN_MS


def dft_power(signal, fs=4.0, hann=True):
    """One-sided periodogram from an explicit O(n^2) DFT.

    Normalised so the bins sum to sum((w x)^2) / sum(w^2); every bin but DC
    and Nyquist is doubled.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = len(x)
    k = np.arange(n)
    w = 0.5 - 0.5 * np.cos(2 * np.pi * k / n) if hann else np.ones(n)
    wx = w * x
    bins = np.arange(n // 2 + 1)
    ang = 2 * np.pi * np.outer(bins, k) / n
    re = np.cos(ang) @ wx
    im = -np.sin(ang) @ wx
    p = (re * re + im * im) / (n * np.sum(w * w))
    for b in bins:
        if b != 0 and not (n % 2 == 0 and b == n // 2):
            p[b] *= 2.0
    return bins * fs / n, p


def dft_bands(signal, fs=4.0, hann=True):
    f, p = dft_power(signal, fs, hann)
    vlf = sum(p[i] for i in range(len(f)) if 0.0 < f[i] < 0.04)
    lf = sum(p[i] for i in range(len(f)) if 0.04 <= f[i] < 0.15)
    hf = sum(p[i] for i in range(len(f)) if 0.15 <= f[i] < 0.4)
    return vlf, lf, hf


def knn_scores(X, y, Q, k):
    """All-pairs distances; neighbours ordered by (distance, training index)."""
    out = []
    for q in Q:
        d = []
        for i, x in enumerate(X):
            d.append((sum((float(a) - float(b)) ** 2 for a, b in zip(q, x)), i))
        d.sort()
        out.append(sum(int(y[i]) for _, i in d[:k]) / min(k, len(X)))
    return np.array(out)


def eer_bruteforce(gen, imp):
    """Sweep every distinct score plus +inf; linear interpolation of the
    FAR/FRR crossing between neighbouring thresholds."""
    ts = sorted(set(list(gen) + list(imp))) + [math.inf]
    pts = []
    for t in ts:
        far = sum(1 for s in imp if s >= t) / len(imp)
        frr = sum(1 for s in gen if s < t) / len(gen)
        pts.append((far, frr))
    for i, (far, frr) in enumerate(pts):
        if far == frr:
            return 100.0 * far
        if far < frr:
            f0, r0 = pts[i - 1]
            a = (f0 - r0) / ((f0 - r0) - (far - frr))
            return 100.0 * (f0 + a * (far - f0))
    raise AssertionError("no crossing")


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""

    def ranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        r = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            for m in range(i, j + 1):
                r[order[m]] = (i + j) / 2.0 + 1
            i = j + 1
        return r

    rx, ry = ranks(list(x)), ranks(list(y))
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    return cov / math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
