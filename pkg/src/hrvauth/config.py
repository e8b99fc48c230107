"""Run configuration: a plain ``key = value`` file, overridable from the CLI.

Lists are comma-separated; ``#`` starts a comment. Every key maps to a field
of :class:`RunConfig`, and every value is validated when loaded, so a bad
config fails before any stage runs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .evaluation import EvalConfig
from .features import SpectralConfig
from .modeling.model import KINDS, resolve_hyperparameters
from .preprocess import ConstraintConfig, PreprocessConfig


@dataclass
class RunConfig:
    # preprocessing
    window_s: float = 120.0
    stride_s: float = 120.0
    rel_threshold: float = 0.20
    local_window: int = 5
    method: str = "interpolate"
    min_consecutive_samples: int = 5
    min_consecutive_seconds: float = 5.0
    # spectral
    resample_hz: float = 4.0
    spectral_window: str = "hann"
    # modeling / evaluation
    variance: float = 0.9
    cap: int = 35
    folds: int = 10
    seed: int = 0
    classifiers: tuple = KINDS
    knn_k: int = 3
    lda_priors: str = "empirical"
    rf_trees: int = 100
    mlp_hidden: int = 5
    mlp_learning_rate: float = 0.3
    mlp_momentum: float = 0.2
    mlp_epochs: int = 500
    mlp_batch_size: int = 1
    min_windows: int = 10
    n_jobs: int = 1
    # quality sweep
    quality_thresholds: tuple = (0.0, 0.5, 0.8, 0.9, 0.95)
    sweep_classifier: str = "rf"
    # streaming
    auth_stride_s: float = 5.0
    smoothing: int = 3
    min_quality: float = 0.0
    # synthetic corpus
    synthetic: bool = False
    subjects: int = 28
    separation: float = 1.0
    # paths
    inputs: tuple = ()
    out_dir: str = "reports"

    def validate(self) -> "RunConfig":
        try:
            self.preprocess()
            self.spectral()
            self.evaluation()
            for k in self.classifiers:
                if k not in KINDS:
                    raise ValueError(f"unknown classifier {k!r}")
            if self.sweep_classifier not in KINDS:
                raise ValueError(f"unknown sweep classifier {self.sweep_classifier!r}")
            if list(self.quality_thresholds) != sorted(self.quality_thresholds):
                raise ValueError("quality_thresholds must be ascending")
            if any(not 0.0 <= q <= 1.0 for q in self.quality_thresholds):
                raise ValueError("quality thresholds must lie in [0, 1]")
            if not 0.0 <= self.variance <= 1.0:
                raise ValueError("variance must be in [0, 1]")
            if self.cap < 1 or self.folds < 2 or self.subjects < 2:
                raise ValueError("need cap >= 1, folds >= 2, subjects >= 2")
            if self.separation < 0:
                raise ValueError("separation must be >= 0")
            if not 0 < self.auth_stride_s <= self.window_s or self.smoothing < 1:
                raise ValueError("need 0 < auth_stride_s <= window_s and smoothing >= 1")
            if not 0.0 <= self.min_quality <= 1.0:
                raise ValueError("min_quality must be in [0, 1]")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def preprocess(self) -> PreprocessConfig:
        return PreprocessConfig(
            self.rel_threshold, self.local_window, self.window_s, self.stride_s, self.method,
            ConstraintConfig(self.min_consecutive_samples, self.min_consecutive_seconds),
        )

    def spectral(self) -> SpectralConfig:
        return SpectralConfig(resample_hz=self.resample_hz, window=self.spectral_window)

    def hyperparameters(self) -> dict:
        hyper = {
            "knn": {"k": self.knn_k},
            "lda": {"priors": self.lda_priors},
            "rf": {"n_trees": self.rf_trees},
            "mlp": {
                "hidden": self.mlp_hidden,
                "learning_rate": self.mlp_learning_rate,
                "momentum": self.mlp_momentum,
                "epochs": self.mlp_epochs,
                "batch_size": self.mlp_batch_size,
            },
        }
        for kind, params in hyper.items():
            resolve_hyperparameters(kind, params)
        return hyper

    def evaluation(self) -> EvalConfig:
        return EvalConfig(
            variance=self.variance, cap=self.cap, folds=self.folds, seed=self.seed,
            min_windows=self.min_windows, hyperparameters=self.hyperparameters(), n_jobs=self.n_jobs,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        # where and how fast a run executes does not change its results
        d.pop("n_jobs")
        d.pop("out_dir")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def seeds(self) -> dict:
        return {"seed": self.seed, "synthetic_seed": self.seed if self.synthetic else None}


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    f = _FIELDS[key]
    default = f.default if f.default is not dataclasses.MISSING else None
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"expected a boolean, got {raw!r}")
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = [p.strip() for p in raw.split(",") if p.strip()]
            if key == "quality_thresholds":
                return tuple(float(p) for p in items)
            return tuple(items)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """File values over defaults, then ``overrides`` (CLI flags) over both."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        values.update(parse_config_text(p.read_text(), str(p)))
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown setting {key!r}")
        values[key] = _convert(key, value) if isinstance(value, str) and not isinstance(
            _FIELDS[key].default, str) else value
    return RunConfig(**values).validate()


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.to_dict().items():
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = str(v).lower()
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"

