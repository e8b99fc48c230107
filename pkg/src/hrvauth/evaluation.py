"""Cross-validated one-vs-all evaluation: FAR/FRR curves, EER, device tables
and the minimum-quality sweep.

Decision convention used everywhere: a probe is *accepted* iff
``score >= threshold`` (see :func:`accepts`).
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvariantViolation
from .features import FeatureMatrix
from .modeling.balance import subsample_per_subject
from .modeling.model import TrainedModel, check_kind, fit_model, resolve_hyperparameters

log = logging.getLogger(__name__)

ALL_DEVICES = "All Devices"


def accepts(scores, threshold):
    return np.asarray(scores) >= threshold


# ---------------------------------------------------------------- folds


def stratified_folds(labels, k: int = 10, seed: int = 0) -> np.ndarray:
    """Fold id per row: shuffle within each class, then deal round-robin.

    The dealing offset carries over between classes so fold sizes stay even.
    """
    labels = np.asarray(labels)
    folds = np.empty(len(labels), dtype=np.int64)
    rng = np.random.default_rng(seed)
    offset = 0
    for cls in np.unique(labels):
        rows = np.flatnonzero(labels == cls)
        if len(rows) < k:
            raise ValueError(f"class {int(cls)} has {len(rows)} rows, fewer than k={k} folds")
        rows = rng.permutation(rows)
        folds[rows] = (offset + np.arange(len(rows))) % k
        offset = (offset + len(rows)) % k
    return folds


def check_stratification(labels, folds, k: int) -> None:
    labels = np.asarray(labels)
    for cls in np.unique(labels):
        counts = np.bincount(folds[labels == cls], minlength=k)
        ideal = np.count_nonzero(labels == cls) / k
        if np.any(np.abs(counts - ideal) > 1):
            raise InvariantViolation(f"fold counts {counts.tolist()} for class {int(cls)} not stratified")


# ---------------------------------------------------------------- curves


@dataclass(frozen=True, eq=False)
class RocCurve:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def triples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.far.tolist(), self.frr.tolist()))


def far_frr_curve(scores, labels) -> RocCurve:
    """FAR/FRR at every distinct score, plus a ``+inf`` sentinel that rejects all."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    gen = np.sort(scores[labels == 1])
    imp = np.sort(scores[labels == 0])
    if len(gen) == 0 or len(imp) == 0:
        raise ValueError("FAR/FRR need both genuine and imposter scores")
    thresholds = np.append(np.unique(scores), np.inf)
    far = (len(imp) - np.searchsorted(imp, thresholds, side="left")) / len(imp)
    frr = np.searchsorted(gen, thresholds, side="left") / len(gen)
    return RocCurve(thresholds, far, frr)


def check_curve(curve: RocCurve) -> None:
    if np.any(np.diff(curve.far) > 0) or np.any(np.diff(curve.frr) < 0):
        raise InvariantViolation("FAR must be non-increasing and FRR non-decreasing in threshold")
    if not (curve.far[0] == 1 and curve.frr[0] == 0 and curve.far[-1] == 0 and curve.frr[-1] == 1):
        raise InvariantViolation("curve is missing its (1, 0) / (0, 1) endpoints")


def eer(curve: RocCurve) -> tuple[float, float]:
    """Return ``(eer_percent, threshold)``.

    An exact FAR == FRR point is returned as is; otherwise FAR and FRR are
    linearly interpolated between the two thresholds bracketing the sign
    change of FAR - FRR.
    """
    d = curve.far - curve.frr
    i = int(np.argmax(d <= 0))  # d goes from +1 to -1, so a crossing always exists
    if d[i] == 0:
        return 100.0 * float(curve.far[i]), float(curve.thresholds[i])
    a = d[i - 1] / (d[i - 1] - d[i])
    rate = curve.far[i - 1] + a * (curve.far[i] - curve.far[i - 1])
    t0, t1 = curve.thresholds[i - 1], curve.thresholds[i]
    thr = t0 + a * (t1 - t0) if np.isfinite(t1) else np.nextafter(t0, np.inf)
    return 100.0 * float(rate), float(thr)


def rates_at(scores, labels, threshold) -> tuple[float, float]:
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    acc = accepts(scores, threshold)
    far = float(np.mean(acc[labels == 0]))
    frr = float(np.mean(~acc[labels == 1]))
    return far, frr


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class EvalConfig:
    variance: float = 0.9
    cap: int = 35
    folds: int = 10
    seed: int = 0
    min_windows: int = 10
    hyperparameters: dict = field(default_factory=dict)
    n_jobs: int = 1
    check_invariants: bool = True

    def hyper(self, kind: str) -> dict:
        return resolve_hyperparameters(kind, self.hyperparameters.get(kind))


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from a tuple of ints/strings."""
    words = [p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def cross_validate(X, y, kind: str, cfg: EvalConfig, seed: int, *, return_models: bool = False):
    """Out-of-fold genuine scores. PCA and classifier see training folds only."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = stratified_folds(y, cfg.folds, derive_seed(seed, "folds"))
    if cfg.check_invariants:
        check_stratification(y, folds, cfg.folds)
    scores = np.empty(len(y))
    models = []
    hyper = cfg.hyper(kind)
    for f in range(cfg.folds):
        test = folds == f
        model = fit_model(
            kind, X[~test], y[~test], variance=cfg.variance,
            seed=derive_seed(seed, "fold", f), hyperparameters=hyper,
        )
        scores[test] = model.score(X[test])
        if return_models:
            models.append(model)
    if return_models:
        return scores, folds, models
    return scores, folds


@dataclass(frozen=True)
class SubjectResult:
    subject: str
    classifier: str
    eer_percent: float
    threshold: float
    far_percent: float
    frr_percent: float
    device: str
    avg_quality: float  # percent, over all of the subject's windows
    n_windows: int
    n_genuine: int
    n_imposter: int


def balance(corpus: FeatureMatrix, cfg: EvalConfig) -> FeatureMatrix:
    return corpus.subset(subsample_per_subject(corpus.subject_ids, cfg.cap, derive_seed(cfg.seed, "balance")))


def _one_vs_all_balanced(balanced: FeatureMatrix, subject: str, kind: str, cfg: EvalConfig, quality_of) -> SubjectResult:
    y = (balanced.subject_ids == subject).astype(np.int64)
    scores, _ = cross_validate(balanced.X, y, kind, cfg, derive_seed(cfg.seed, subject, kind))
    curve = far_frr_curve(scores, y)
    if cfg.check_invariants:
        check_curve(curve)
    e, thr = eer(curve)
    if cfg.check_invariants and not 0.0 <= e <= 100.0:
        raise InvariantViolation(f"EER {e:.3f}% outside [0, 100] for {subject}/{kind}")
    if e > 50.0:
        log.info("%s/%s: EER %.2f%% is worse than chance", subject, kind, e)
    far, frr = rates_at(scores, y, thr)
    q, n = quality_of(subject)
    return SubjectResult(
        subject, kind, e, thr, 100 * far, 100 * frr, balanced.device_of(subject),
        q, n, int(y.sum()), int(len(y) - y.sum()),
    )


def _quality_lookup(corpus: FeatureMatrix):
    def quality_of(subject):
        q = corpus.qualities[corpus.subject_ids == subject]
        return 100.0 * float(np.mean(q)), int(len(q))
    return quality_of


def one_vs_all(corpus: FeatureMatrix, subject: str, classifier_kind: str, cfg: EvalConfig = EvalConfig()) -> SubjectResult:
    """Balance, then 10-fold CV with ``subject`` as the genuine class; one EER
    over the pooled out-of-fold scores."""
    check_kind(classifier_kind)
    return _one_vs_all_balanced(balance(corpus, cfg), subject, classifier_kind, cfg, _quality_lookup(corpus))


def _run_cells(cells, fn, n_jobs: int):
    if n_jobs == 1:
        return [fn(*c) for c in cells]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=n_jobs)(delayed(fn)(*c) for c in cells)


@dataclass
class EvalReport:
    results: list[SubjectResult]
    classifiers: list[str]

    def result(self, subject: str, kind: str) -> SubjectResult:
        for r in self.results:
            if r.subject == subject and r.classifier == kind:
                return r
        raise KeyError((subject, kind))

    def subjects(self) -> list[str]:
        return sorted({r.subject for r in self.results}, key=_natural_key)

    def mean_eer(self, kind: str, device: str | None = None) -> float:
        vals = [r.eer_percent for r in self.results if r.classifier == kind and (device is None or r.device == device)]
        return float(np.mean(vals)) if vals else float("nan")

    def device_rows(self) -> list[dict]:
        """Per-device (and overall) mean EER per classifier.

        Quality is given subject-weighted (mean of subject averages) and
        window-weighted (mean over all windows)."""
        devices = sorted({r.device for r in self.results})
        rows = []
        for dev in devices + [ALL_DEVICES]:
            members = [r for r in self.results if r.classifier == self.classifiers[0]
                       and (dev == ALL_DEVICES or r.device == dev)]
            row = {"device": dev, "n_subjects": len(members)}
            for kind in self.classifiers:
                row[kind] = self.mean_eer(kind, None if dev == ALL_DEVICES else dev)
            row["quality_subject_weighted"] = float(np.mean([m.avg_quality for m in members]))
            row["quality_window_weighted"] = float(
                sum(m.avg_quality * m.n_windows for m in members) / sum(m.n_windows for m in members)
            )
            rows.append(row)
        return rows


def _natural_key(s: str):
    import re

    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", s)]


def evaluate(corpus: FeatureMatrix, kinds: Sequence[str], cfg: EvalConfig = EvalConfig(), subjects=None) -> EvalReport:
    """Every (subject, classifier) cell on one shared balanced corpus."""
    kinds = [check_kind(k) for k in kinds]
    balanced = balance(corpus, cfg)
    quality_of = _quality_lookup(corpus)
    subjects = sorted(subjects or balanced.subjects(), key=_natural_key)
    cells = [(balanced, s, k, cfg, quality_of) for s in subjects for k in kinds]
    results = _run_cells(cells, _one_vs_all_balanced, cfg.n_jobs)
    return EvalReport(results, kinds)


def enroll_model(corpus: FeatureMatrix, subject: str, kind: str, cfg: EvalConfig = EvalConfig()) -> TrainedModel:
    """Final model for ``subject`` on the whole balanced corpus, carrying the
    cross-validated EER threshold in its metadata."""
    res = one_vs_all(corpus, subject, kind, cfg)
    balanced = balance(corpus, cfg)
    y = (balanced.subject_ids == subject).astype(np.int64)
    return fit_model(
        kind, balanced.X, y, variance=cfg.variance,
        seed=derive_seed(cfg.seed, subject, kind, "final"), hyperparameters=cfg.hyper(kind),
        metadata={
            "genuine_subject": subject,
            "eer_percent": res.eer_percent,
            "eer_threshold": res.threshold,
        },
    )


# ---------------------------------------------------------------- quality sweep


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    scope: str
    mean_eer: float | None
    n_subjects: int
    windows_retained: int
    available: bool
    note: str = ""


def quality_sweep(
    corpus: FeatureMatrix,
    thresholds: Sequence[float],
    classifier_kind: str = "rf",
    cfg: EvalConfig = EvalConfig(),
) -> list[SweepRow]:
    """Re-run the evaluation on windows with quality >= each threshold.

    Subjects left with fewer than ``cfg.min_windows`` windows are dropped from
    that threshold (noted); fewer than two subjects marks the row unavailable.
    """
    check_kind(classifier_kind)
    thresholds = list(thresholds)
    if thresholds != sorted(thresholds):
        raise ValueError("quality thresholds must be sorted ascending")
    all_devices = sorted(set(corpus.devices.tolist()))
    rows: list[SweepRow] = []
    for thr in thresholds:
        kept = corpus.subset(corpus.qualities >= thr)
        counts = {s: int(np.count_nonzero(kept.subject_ids == s)) for s in corpus.subjects()}
        dropped = sorted((s for s, c in counts.items() if c < cfg.min_windows), key=_natural_key)
        keep_subjects = [s for s in corpus.subjects() if s not in dropped]
        kept = kept.subset(np.isin(kept.subject_ids, keep_subjects))
        note = f"dropped (<{cfg.min_windows} windows): {' '.join(dropped)}" if dropped else ""
        if len(keep_subjects) < 2:
            rows.append(SweepRow(thr, ALL_DEVICES, None, len(keep_subjects), len(kept), False,
                                 "fewer than 2 subjects remain" + (f"; {note}" if note else "")))
            rows += [SweepRow(thr, dev, None, 0, 0, False, "fewer than 2 subjects remain") for dev in all_devices]
            continue
        report = evaluate(kept, [classifier_kind], cfg)
        mean = report.mean_eer(classifier_kind)
        log.info("quality >= %.2f: %d subjects, mean EER %.2f%%", thr, len(keep_subjects), mean)
        rows.append(SweepRow(thr, ALL_DEVICES, mean, len(keep_subjects), len(kept), True, note))
        for dev in all_devices:
            members = [r for r in report.results if r.device == dev]
            n_win = int(np.count_nonzero(kept.devices == dev))
            if members:
                rows.append(SweepRow(thr, dev, report.mean_eer(classifier_kind, dev), len(members), n_win, True))
            else:
                rows.append(SweepRow(thr, dev, None, 0, n_win, False, "no subject of this device remains"))
    return rows


# ---------------------------------------------------------------- report emitters


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _header(meta: dict | None) -> list[str]:
    if not meta:
        return []
    return [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(meta.items())]


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _clean(v):
    if isinstance(v, float):
        return None if not np.isfinite(v) else round(v, 10)
    return v


def subject_table_csv(report: EvalReport, meta: dict | None = None) -> str:
    """Per-subject EER table: one row per subject, one column per classifier."""
    lines = _header(meta)
    lines.append(",".join(["subject", *report.classifiers, "device", "average_quality"]))
    for s in report.subjects():
        rs = [report.result(s, k) for k in report.classifiers]
        lines.append(",".join([s, *(_fmt(r.eer_percent) for r in rs), rs[0].device, _fmt(rs[0].avg_quality)]))
    return "\n".join(lines) + "\n"


def subject_table_json(report: EvalReport, meta: dict | None = None) -> str:
    rows = [{k: _clean(v) for k, v in asdict(r).items()} for r in report.results]
    return _json({"meta": meta or {}, "schema": "subject_eer/1", "rows": rows})


def device_table_csv(report: EvalReport, meta: dict | None = None) -> str:
    lines = _header(meta)
    cols = ["device", *report.classifiers, "quality_subject_weighted", "quality_window_weighted", "n_subjects"]
    lines.append(",".join(cols))
    for row in report.device_rows():
        lines.append(",".join(_fmt(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def device_table_json(report: EvalReport, meta: dict | None = None) -> str:
    rows = [{k: _clean(v) for k, v in r.items()} for r in report.device_rows()]
    return _json({"meta": meta or {}, "schema": "device_eer/1", "rows": rows})


def sweep_csv(rows: Sequence[SweepRow], meta: dict | None = None) -> str:
    lines = _header(meta)
    lines.append("threshold,scope,mean_eer,n_subjects,windows_retained,available,note")
    for r in rows:
        lines.append(",".join([
            _fmt(r.threshold), r.scope, _fmt(r.mean_eer), str(r.n_subjects),
            str(r.windows_retained), str(r.available).lower(), r.note.replace(",", ";"),
        ]))
    return "\n".join(lines) + "\n"


def sweep_json(rows: Sequence[SweepRow], meta: dict | None = None) -> str:
    return _json({"meta": meta or {}, "schema": "quality_sweep/1",
                  "rows": [{k: _clean(v) for k, v in asdict(r).items()} for r in rows]})


def sweep_plot_csv(rows: Sequence[SweepRow]) -> str:
    """Plot-ready series: one column of EER per scope, one row per threshold."""
    scopes = sorted({r.scope for r in rows}, key=lambda s: (s == ALL_DEVICES, s))
    thresholds = sorted({r.threshold for r in rows})
    lookup = {(r.threshold, r.scope): r.mean_eer for r in rows}
    lines = [",".join(["threshold", *scopes])]
    for t in thresholds:
        lines.append(",".join([_fmt(t), *(_fmt(lookup.get((t, s))) for s in scopes)]))
    return "\n".join(lines) + "\n"
