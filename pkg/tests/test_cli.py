import json

import numpy as np
import pytest

from ahcr.cli import main
from ahcr.container import load_recognizer

SMALL = ["--synth", "--per-class", "5", "--widths", "4,8,8", "--epochs", "2", "--batch-size", "16"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["train", *SMALL, "--out-dir", str(out)]) == 0
    return out


def test_train_outputs(trained):
    for name in ("model.ahcr", "history.csv", "report_softmax.txt", "confusion_softmax.csv", "summary.csv"):
        assert (trained / name).exists(), name
    history = (trained / "history.csv").read_text().splitlines()
    assert history[0] == "epoch,train_loss,train_acc,test_acc" and len(history) == 3
    summary = (trained / "summary.csv").read_text().splitlines()
    assert summary[0] == "head,crr,ecr" and summary[1].startswith("softmax,")


def test_train_is_reproducible(trained, tmp_path):
    assert main(["train", *SMALL, "--out-dir", str(tmp_path)]) == 0
    for name in ("model.ahcr", "history.csv", "confusion_softmax.csv"):
        assert (tmp_path / name).read_bytes() == (trained / name).read_bytes(), name


def test_zero_epochs(tmp_path, capsys):
    code, out, _ = run(capsys, "train", *SMALL, "--epochs", "0", "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "history.csv").read_text().strip() == "epoch,train_loss,train_acc,test_acc"


def test_feature_svm_eval_cluster_predict(trained, tmp_path, capsys):
    model = trained / "model.ahcr"
    feats = tmp_path / "f.csv"
    code, out, _ = run(capsys, "extract-features", "--model", str(model), *SMALL, "--output", str(feats))
    assert code == 0 and out.strip().endswith(",112,1024")
    assert np.loadtxt(feats, delimiter=",").shape == (112, 1025)

    both = tmp_path / "both.ahcr"
    code, out, _ = run(capsys, "svm-train", "--model", str(model), "--features", str(feats),
                       "--output", str(both), "--svm-epochs", "5")
    assert code == 0 and out.startswith("svm,train_crr,")
    assert load_recognizer(both)[1] is not None

    code, out, _ = run(capsys, "eval", "--model", str(both), "--head", "both", "--by-cluster",
                       *SMALL, "--out-dir", str(tmp_path))
    assert code == 0
    assert [line.split(",")[0] for line in out.split()] == ["softmax", "svm"]
    assert "95.07%" in (tmp_path / "comparison.txt").read_text()
    assert "by master-stroke group:" in (tmp_path / "report_svm.txt").read_text()

    clusters = tmp_path / "clusters.csv"
    code, out, _ = run(capsys, "cluster", "--model", str(model), *SMALL, "--output", str(clusters))
    assert code == 0
    info = json.loads(out)
    assert info["clusters"] == 13 and -1 <= info["ari_vs_reference"] <= 1
    rows = clusters.read_text().splitlines()
    assert rows[0] == "class_id,class_name,cluster_id" and len(rows) == 29
    assert {int(r.split(",")[2]) for r in rows[1:]} == set(range(1, 14))

    code, _, _ = run(capsys, "eval", "--model", str(model), "--clusters", str(clusters),
                     *SMALL, "--out-dir", str(tmp_path))
    assert code == 0 and "by learned cluster:" in (tmp_path / "report_softmax.txt").read_text()

    images = tmp_path / "x.csv"
    np.savetxt(images, np.zeros((3, 1024)), fmt="%d", delimiter=",")
    code, out, _ = run(capsys, "predict", "--model", str(both), "--images", str(images),
                       "--head", "svm", "--clusters", str(clusters))
    lines = out.splitlines()
    assert code == 0 and lines[0] == "row,class_id,class_name,cluster_id" and len(lines) == 4


def test_synth_data_command(tmp_path, capsys):
    code, out, _ = run(capsys, "synth-data", "--per-class", "2", "--out-dir", str(tmp_path))
    assert code == 0 and out.strip().endswith(",28,28")
    assert (tmp_path / "test_labels.csv").exists()


def test_exit_codes(trained, tmp_path, capsys):
    model = str(trained / "model.ahcr")
    assert run(capsys, "train", "--no-such-flag")[0] == 1
    assert run(capsys, "train", "--widths", "1,2", *SMALL[:4])[0] == 1
    assert run(capsys, "train", "--epochs", "1", "--out-dir", str(tmp_path))[0] == 1  # no data
    assert run(capsys, "eval", "--model", model, "--head", "svm", *SMALL)[0] == 2
    assert run(capsys, "eval", "--model", str(tmp_path / "missing.ahcr"), *SMALL)[0] == 2
    bad = tmp_path / "bad.ahcr"
    bad.write_bytes(b"junk" * 20)
    assert run(capsys, "eval", "--model", str(bad), *SMALL)[0] == 2
    (tmp_path / "x.csv").write_text("1,2,3\n")
    assert run(capsys, "predict", "--model", model, "--images", str(tmp_path / "x.csv"))[0] == 2
    code, _, err = run(capsys, "train", *SMALL, "--learning-rate", "1e12", "--out-dir", str(tmp_path))
    assert code == 3 and "diverged" in err


def test_config_file_and_preset(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nwidths = 4,4,4\nepochs = 0\nsynth = true\nper_class = 2\n")
    code, _, _ = run(capsys, "train", "--config", str(cfg), "--out-dir", str(tmp_path))
    assert code == 0
    model, _ = load_recognizer(tmp_path / "model.ahcr")
    assert model.widths == (4, 4, 4)
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "train", "--config", str(cfg))[0] == 1
