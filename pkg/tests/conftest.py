import os
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hrvauth.features import FeatureMatrix
from hrvauth.preprocess import preprocess_series
from hrvauth.synth import generate_corpus

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def corpus_features(corpus, cfg=None):
    windows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for subj in corpus:
            windows += preprocess_series(subj.series) if cfg is None else preprocess_series(subj.series, cfg)
    return FeatureMatrix.from_windows(windows)


@pytest.fixture(scope="session")
def small_corpus():
    """Six subjects, 40 minutes each: enough windows for 10-fold CV."""
    from hrvauth.synth import Session

    return generate_corpus(6, session_plan=(Session("baseline", 2400.0),), separation=1.5, seed=11)


@pytest.fixture(scope="session")
def small_features(small_corpus):
    return corpus_features(small_corpus)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
