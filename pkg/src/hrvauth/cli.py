"""Command-line front end: ``hrvauth <command> [options]``.

Settings come from defaults, then ``--config FILE`` (``key = value`` lines),
then command-line flags. Exit status: 0 success, 2 a stage failed (bad input,
config or model), 3 an internal invariant check failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .authd import AuthConfig, decision_log, enroll, replay
from .config import RunConfig, load_config
from .errors import HRVAuthError, IngestError, InvariantViolation
from .evaluation import (
    EvalReport,
    enroll_model,
    evaluate,
    quality_sweep,
    device_table_csv,
    device_table_json,
    subject_table_csv,
    subject_table_json,
    sweep_csv,
    sweep_json,
    sweep_plot_csv,
)
from .features import FeatureMatrix
from .ingest import RRSeries, parse_file
from .modeling.model import TrainedModel
from .preprocess import preprocess_series

log = logging.getLogger("hrvauth")

REPORT_SCHEMA_VERSION = 1


class InputError(IngestError):
    """Input path missing or unreadable."""


# ---------------------------------------------------------------- data loading


def _input_files(paths) -> list[Path]:
    files = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files += sorted(q for q in p.iterdir() if q.is_file() and q.suffix.lower() in (".csv", ".txt"))
        elif p.is_file():
            files.append(p)
        else:
            err = InputError(f"input not found: {p}")
            err.input = str(p)
            raise err
    if not files:
        raise InputError("no input files (give paths, or use --synthetic)")
    return files


def load_series(cfg: RunConfig) -> list[RRSeries]:
    if cfg.synthetic:
        from .synth import generate_corpus

        return [s.series for s in generate_corpus(cfg.subjects, separation=cfg.separation, seed=cfg.seed)]
    out = []
    for path in _input_files(cfg.inputs):
        try:
            out.append(parse_file(path))
        except HRVAuthError as exc:
            exc.input = str(path)
            raise
    return out


def build_features(cfg: RunConfig) -> FeatureMatrix:
    pcfg, scfg = cfg.preprocess(), cfg.spectral()
    windows = []
    for series in load_series(cfg):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                windows += preprocess_series(series, pcfg)
        except HRVAuthError as exc:
            exc.input = series.subject_id
            raise
    skipped: list = []
    fm = FeatureMatrix.from_windows(windows, scfg, skipped=skipped)
    log.info("%d windows, %d feature rows, %d skipped", len(windows), len(fm), len(skipped))
    return fm


def load_features(cfg: RunConfig, path) -> FeatureMatrix:
    if path is None:
        return build_features(cfg)
    p = Path(path)
    if not p.is_file():
        err = InputError(f"feature file not found: {p}")
        err.input = str(p)
        raise err
    try:
        return FeatureMatrix.from_csv(p.read_text())
    except ValueError as exc:
        err = IngestError(f"bad feature file: {exc}")
        err.input = str(p)
        raise err from None


# ---------------------------------------------------------------- reports


def report_meta(cfg: RunConfig) -> dict:
    return {
        "config": cfg.to_dict(),
        "seeds": cfg.seeds(),
        "schema_version": REPORT_SCHEMA_VERSION,
        "generator": f"hrvauth {__version__}",
    }


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    p = out_dir / name
    p.write_text(text)
    log.info("wrote %s", p)
    return p


def _feature_header(cfg: RunConfig) -> list[str]:
    from .evaluation import _header

    return [line[2:] for line in _header(report_meta(cfg))]


def write_eval_reports(report: EvalReport, cfg: RunConfig, out_dir: Path) -> None:
    meta = report_meta(cfg)
    _write(out_dir, "subject_eer.csv", subject_table_csv(report, meta))
    _write(out_dir, "subject_eer.json", subject_table_json(report, meta))
    _write(out_dir, "device_eer.csv", device_table_csv(report, meta))
    _write(out_dir, "device_eer.json", device_table_json(report, meta))


def write_sweep_reports(rows, cfg: RunConfig, out_dir: Path) -> None:
    meta = report_meta(cfg)
    _write(out_dir, "quality_sweep.csv", sweep_csv(rows, meta))
    _write(out_dir, "quality_sweep.json", sweep_json(rows, meta))
    _write(out_dir, "quality_sweep_plot.csv", sweep_plot_csv(rows))


def summary_table(report: EvalReport) -> str:
    kinds = report.classifiers
    lines = ["subject  device      " + "".join(f"{k:>8}" for k in kinds)]
    for s in report.subjects():
        rs = [report.result(s, k) for k in kinds]
        lines.append(f"{s:<8} {rs[0].device:<11} " + "".join(f"{r.eer_percent:8.2f}" for r in rs))
    lines.append(f"{'mean':<8} {'':<11} " + "".join(f"{report.mean_eer(k):8.2f}" for k in kinds))
    return "\n".join(lines)


# ---------------------------------------------------------------- commands


def cmd_synth(cfg: RunConfig, args) -> int:
    from .synth import generate_corpus, write_corpus

    corpus = generate_corpus(cfg.subjects, separation=cfg.separation, seed=cfg.seed,
                             artifacts=not args.no_artifacts)
    paths = write_corpus(corpus, cfg.out_dir)
    print(f"wrote {len(paths)} series to {cfg.out_dir}")
    return 0


def cmd_features(cfg: RunConfig, args) -> int:
    fm = build_features(cfg)
    out = Path(args.out) if args.out else Path(cfg.out_dir) / "features.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(fm.to_csv(_feature_header(cfg)))
    print(f"{len(fm)} feature rows for {len(fm.subjects())} subjects -> {out}")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    fm = load_features(cfg, args.features)
    if args.subject not in fm.subjects():
        raise IngestError(f"subject {args.subject!r} not in the feature matrix")
    model = enroll_model(fm, args.subject, args.classifier, cfg.evaluation())
    model.metadata["config"] = cfg.to_dict()
    out = Path(args.out) if args.out else Path(cfg.out_dir) / f"model_{args.subject}_{args.classifier}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    print(f"{args.subject}/{args.classifier}: cross-validated EER {model.metadata['eer_percent']:.2f}% "
          f"(threshold {model.metadata['eer_threshold']:.4f}) -> {out}")
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    fm = load_features(cfg, args.features)
    report = evaluate(fm, list(cfg.classifiers), cfg.evaluation())
    write_eval_reports(report, cfg, Path(cfg.out_dir))
    print(summary_table(report))
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    fm = load_features(cfg, args.features)
    rows = quality_sweep(fm, cfg.quality_thresholds, cfg.sweep_classifier, cfg.evaluation())
    write_sweep_reports(rows, cfg, Path(cfg.out_dir))
    print(sweep_plot_csv(rows), end="")
    return 0


def cmd_pipeline(cfg: RunConfig, args) -> int:
    out_dir = Path(cfg.out_dir)
    fm = build_features(cfg)
    _write(out_dir, "features.csv", fm.to_csv(_feature_header(cfg)))
    ecfg = cfg.evaluation()
    report = evaluate(fm, list(cfg.classifiers), ecfg)
    write_eval_reports(report, cfg, out_dir)
    rows = quality_sweep(fm, cfg.quality_thresholds, cfg.sweep_classifier, ecfg)
    write_sweep_reports(rows, cfg, out_dir)
    print(summary_table(report))
    print()
    print(sweep_plot_csv(rows), end="")
    return 0


def cmd_replay(cfg: RunConfig, args) -> int:
    model_path = Path(args.model)
    if not model_path.is_file():
        err = InputError(f"model file not found: {model_path}")
        err.input = str(model_path)
        raise err
    try:
        model = TrainedModel.load(model_path)
    except HRVAuthError as exc:
        exc.input = str(model_path)
        raise
    series = load_series(RunConfig(inputs=(args.series,)))[0]
    auth = AuthConfig(
        window_s=cfg.window_s, stride_s=cfg.auth_stride_s, smoothing=cfg.smoothing,
        min_quality=cfg.min_quality, rel_threshold=cfg.rel_threshold,
        local_window=cfg.local_window, spectral=cfg.spectral(),
    )
    try:
        state = enroll(model, args.threshold, auth)
    except ValueError as exc:
        raise HRVAuthError(str(exc)) from None
    text = decision_log(replay(state, series))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- argument parsing

S = argparse.SUPPRESS


def _csv_list(cast):
    def parse(text):
        try:
            return tuple(cast(p.strip()) for p in text.split(",") if p.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file (flags override it)")
    p.add_argument("--seed", type=int, default=S, help="master seed (default 0)")
    p.add_argument("--out-dir", dest="out_dir", default=S, help="report directory (default ./reports)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _corpus(p: argparse.ArgumentParser) -> None:
    p.add_argument("inputs", nargs="*", default=S, help="RR files or directories (Empatica IBI or generic CSV)")
    p.add_argument("--synthetic", action="store_const", const=True, default=S,
                   help="use a generated corpus instead of input files")
    p.add_argument("--subjects", type=int, default=S, help="synthetic subject count (default 28)")
    p.add_argument("--separation", type=float, default=S, help="synthetic inter-subject spread (default 1.0)")
    p.add_argument("--window-s", dest="window_s", type=float, default=S, help="window length s (default 120)")
    p.add_argument("--stride-s", dest="stride_s", type=float, default=S,
                   help="offline window stride s (default 120, non-overlapping)")
    p.add_argument("--rel-threshold", dest="rel_threshold", type=float, default=S,
                   help="artifact threshold, fraction of local average (default 0.2)")
    p.add_argument("--local-window", dest="local_window", type=int, default=S,
                   help="beats in the local average (default 5)")
    p.add_argument("--method", choices=("interpolate", "constraints"), default=S,
                   help="artifact handling (default interpolate)")


def _eval(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", help="feature CSV from 'features' (default: compute from inputs)")
    p.add_argument("--classifiers", type=_csv_list(str), default=S, help="comma list (default knn,lda,rf,mlp)")
    p.add_argument("--variance", type=float, default=S, help="PCA retained variance (default 0.9)")
    p.add_argument("--cap", type=int, default=S, help="windows per subject after subsampling (default 35)")
    p.add_argument("--folds", type=int, default=S, help="cross-validation folds (default 10)")
    p.add_argument("--rf-trees", dest="rf_trees", type=int, default=S, help="random forest size (default 100)")
    p.add_argument("--n-jobs", dest="n_jobs", type=int, default=S, help="parallel evaluation cells (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrvauth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hrvauth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="features, evaluation and quality sweep in one run")
    _common(p), _corpus(p), _eval(p)
    p.add_argument("--quality-thresholds", dest="quality_thresholds", type=_csv_list(float), default=S,
                   help="sweep thresholds (default 0,0.5,0.8,0.9,0.95)")
    p.add_argument("--sweep-classifier", dest="sweep_classifier", default=S, help="default rf")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("features", help="preprocess and extract the feature matrix")
    _common(p), _corpus(p)
    p.add_argument("--out", help="output CSV (default <out-dir>/features.csv)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="enroll one subject: final model plus its EER threshold")
    _common(p), _corpus(p), _eval(p)
    p.add_argument("--subject", required=True)
    p.add_argument("--classifier", default="rf", choices=("knn", "lda", "rf", "mlp"))
    p.add_argument("--out", help="model JSON (default <out-dir>/model_<subject>_<classifier>.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="one-vs-all cross-validated EER per subject and device")
    _common(p), _corpus(p), _eval(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="mean EER against minimum window quality")
    _common(p), _corpus(p), _eval(p)
    p.add_argument("--quality-thresholds", dest="quality_thresholds", type=_csv_list(float), default=S)
    p.add_argument("--sweep-classifier", dest="sweep_classifier", default=S)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic corpus as generic CSV files")
    _common(p)
    p.add_argument("--subjects", type=int, default=S)
    p.add_argument("--separation", type=float, default=S)
    p.add_argument("--no-artifacts", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("replay", help="stream a series through an enrolled model (NDJSON decisions)")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--stride", dest="auth_stride_s", type=float, default=S, help="decision stride s (default 5)")
    p.add_argument("--smoothing", type=int, default=S, help="majority over the last m verdicts (default 3)")
    p.add_argument("--min-quality", dest="min_quality", type=float, default=S, help="quality floor (default 0)")
    p.add_argument("--threshold", type=float, default=None, help="accept threshold (default: model's EER threshold)")
    p.add_argument("--out", help="decision log file (default stdout)")
    p.set_defaults(func=cmd_replay)
    return parser


_NOT_SETTINGS = {"command", "func", "config", "verbose", "out", "features", "subject", "classifier",
                 "model", "series", "threshold", "no_artifacts"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_SETTINGS}
    if "inputs" in overrides:
        overrides["inputs"] = tuple(overrides["inputs"])
    try:
        cfg = load_config(args.config, overrides)
        return args.func(cfg, args)
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stderr.close()
        return 0
    except InvariantViolation as exc:
        print(f"error [{exc.stage}]: invariant violated: {exc}", file=sys.stderr)
        return 3
    except HRVAuthError as exc:
        where = getattr(exc, "input", None)
        print(f"error [{exc.stage}]{f' {where}' if where else ''}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
