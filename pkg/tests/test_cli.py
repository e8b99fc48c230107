import json

import numpy as np
import pytest

from hrvauth.cli import main
from hrvauth.config import RunConfig, dump_config, load_config, parse_config_text
from hrvauth.errors import ConfigError
from hrvauth.ingest import write_generic
from hrvauth.synth import SubjectProfile, generate_rr

FAST = ["--classifiers", "lda,knn", "--rf-trees", "10", "--subjects", "4", "--seed", "7"]


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--subjects", "4", "--separation", "1.5", "--seed", "7", "--out-dir", str(d)]) == 0
    return d


@pytest.fixture(scope="module")
def features_csv(corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("feat") / "features.csv"
    assert main(["features", str(corpus_dir), "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def model_path(features_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "m.json"
    assert main(["train", "--features", str(features_csv), "--subject", "P1",
                 "--classifier", "lda", "--out", str(out)]) == 0
    return out


def test_missing_input_exits_2(tmp_path, capsys):
    code = main(["pipeline", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err
    assert "[ingest]" in err and "nope.csv" in err


def test_malformed_input_names_file(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("this is not an RR file\n1,2,3\n")
    assert main(["features", str(bad), "--out-dir", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "[ingest]" in err and "bad.csv" in err


def test_synth_writes_generic_files(corpus_dir):
    files = sorted(p.name for p in corpus_dir.iterdir())
    assert files == ["P1.csv", "P2.csv", "P3.csv", "P4.csv"]


def test_features_header_embeds_config(features_csv):
    head = features_csv.read_text().splitlines()[0]
    assert head.startswith("#") and "config" in head


def test_five_row_sweep(features_csv, tmp_path, capsys):
    code = main(["sweep", "--features", str(features_csv), "--quality-thresholds", "0,0.5,0.8,0.9,0.95",
                 "--sweep-classifier", "lda", "--out-dir", str(tmp_path)])
    assert code == 0
    plot = (tmp_path / "quality_sweep_plot.csv").read_text().splitlines()
    assert len(plot) == 1 + 5
    assert [float(r.split(",")[0]) for r in plot[1:]] == [0, 0.5, 0.8, 0.9, 0.95]
    doc = json.loads((tmp_path / "quality_sweep.json").read_text())
    assert sorted({r["threshold"] for r in doc["rows"]}) == [0, 0.5, 0.8, 0.9, 0.95]
    assert doc["meta"]["config"]["quality_thresholds"] == [0, 0.5, 0.8, 0.9, 0.95]


def test_evaluate_reports(features_csv, tmp_path, capsys):
    assert main(["evaluate", "--features", str(features_csv), "--classifiers", "lda",
                 "--out-dir", str(tmp_path)]) == 0
    for name in ("subject_eer.csv", "subject_eer.json", "device_eer.csv", "device_eer.json"):
        assert (tmp_path / name).is_file()
    doc = json.loads((tmp_path / "subject_eer.json").read_text())
    assert [r["subject"] for r in doc["rows"]] == ["P1", "P2", "P3", "P4"]
    assert "seeds" in doc["meta"] and doc["meta"]["config"]["classifiers"] == ["lda"]
    assert "mean" in capsys.readouterr().out


def test_config_file_and_flag_precedence(tmp_path, features_csv):
    conf = tmp_path / "run.conf"
    conf.write_text("# experiment\nseed = 3\nclassifiers = lda\nvariance = 0.8   # lower\n")
    out = tmp_path / "out"
    assert main(["evaluate", "--config", str(conf), "--features", str(features_csv), "--seed", "5",
                 "--out-dir", str(out)]) == 0
    cfg = json.loads((out / "subject_eer.json").read_text())["meta"]["config"]
    assert cfg["seed"] == 5          # flag wins
    assert cfg["variance"] == 0.8    # file beats default
    assert cfg["classifiers"] == ["lda"]


def test_bad_config_exits_2(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("bogus_key = 1\n")
    assert main(["synth", "--config", str(conf), "--out-dir", str(tmp_path)]) == 2
    assert "[config]" in capsys.readouterr().err


def test_config_helpers_round_trip():
    cfg = RunConfig(seed=9, classifiers=("rf",), quality_thresholds=(0.0, 0.7))
    back = RunConfig(**parse_config_text(dump_config(cfg)))
    assert back.to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError):
        load_config(overrides={"quality_thresholds": (0.9, 0.5)})
    with pytest.raises(ConfigError):
        load_config(overrides={"classifiers": ("svm",)})


def test_pipeline_deterministic(tmp_path):
    args = ["pipeline", "--synthetic", *FAST, "--quality-thresholds", "0,0.9", "--sweep-classifier", "lda"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out-dir", str(a)]) == 0
    assert main(args + ["--out-dir", str(b), "--n-jobs", "2"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    assert {"features.csv", "subject_eer.csv", "device_eer.json", "quality_sweep.csv"} <= set(names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_train_is_deterministic(features_csv, model_path, tmp_path):
    again = tmp_path / "m2.json"
    assert main(["train", "--features", str(features_csv), "--subject", "P1",
                 "--classifier", "lda", "--out", str(again)]) == 0
    assert again.read_bytes() == model_path.read_bytes()


def test_train_unknown_subject(features_csv, tmp_path):
    assert main(["train", "--features", str(features_csv), "--subject", "P99", "--out-dir", str(tmp_path)]) == 2


def _replay(model, series, capsys, *extra):
    assert main(["replay", "--model", str(model), "--series", str(series), *extra]) == 0
    return [json.loads(line) for line in capsys.readouterr().out.splitlines()]


def test_replay_genuine_and_imposter(model_path, corpus_dir, capsys):
    genuine = _replay(model_path, corpus_dir / "P1.csv", capsys)
    imposter = _replay(model_path, corpus_dir / "P3.csv", capsys)
    verdicts = lambda log: [d["verdict"] for d in log[3:] if d["verdict"] != "InsufficientData"]
    g, i = verdicts(genuine), verdicts(imposter)
    assert g.count("Accept") > len(g) / 2
    assert i.count("Reject") > len(i) / 2
    assert set(genuine[0]) == {"timestamp", "verdict", "score", "quality"}


def test_replay_short_series(model_path, tmp_path, capsys):
    p = tmp_path / "short.csv"
    p.write_text(write_generic(generate_rr(SubjectProfile(), 30, seed=1, subject_id="P1")))
    log = _replay(model_path, p, capsys)
    assert len(log) == 1 and log[0]["verdict"] == "InsufficientData"


def test_replay_to_file(model_path, corpus_dir, tmp_path, capsys):
    out = tmp_path / "log.ndjson"
    assert main(["replay", "--model", str(model_path), "--series", str(corpus_dir / "P1.csv"),
                 "--stride", "10", "--smoothing", "1", "--out", str(out)]) == 0
    ts = [json.loads(line)["timestamp"] for line in out.read_text().splitlines()]
    assert np.allclose(np.diff(ts), 10.0)


def test_replay_version_mismatch(model_path, corpus_dir, tmp_path, capsys):
    doc = json.loads(model_path.read_text())
    current = doc["version"]
    doc["version"] = 999
    bad = tmp_path / "old.json"
    bad.write_text(json.dumps(doc))
    assert main(["replay", "--model", str(bad), "--series", str(corpus_dir / "P1.csv")]) == 2
    err = capsys.readouterr().err
    assert "999" in err and str(current) in err and "[model]" in err


def test_replay_bad_threshold(model_path, corpus_dir, capsys):
    assert main(["replay", "--model", str(model_path), "--series", str(corpus_dir / "P1.csv"),
                 "--threshold", "1.5"]) == 2
