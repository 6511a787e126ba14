from __future__ import annotations

import logging

import numpy as np
import pytest
from PIL import Image as PILImage

from main import main

SMALL = ["--mtilde", "64", "--sample-frac", "0.05", "--epochs", "2"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_synth")
    assert main(["synth", "--out", str(out), "--images", "4", "--classes", "3", "--size", "32", "--seed", "1"]) == 0
    return out / "manifest.txt"


@pytest.fixture(scope="module")
def model(dataset, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_model") / "model.wsg"
    assert main(["train", "--manifest", str(dataset), "--out", str(path), *SMALL]) == 0
    return path


def test_synth_writes_manifest(dataset):
    lines = dataset.read_text().splitlines()
    assert lines[0].startswith("# classes:")
    assert len(lines) == 5


def test_train_prints_summary(dataset, tmp_path, capsys):
    out = tmp_path / "m.wsg"
    assert main(["train", "--manifest", str(dataset), "--out", str(out), *SMALL]) == 0
    summary = capsys.readouterr().out
    assert "feature_dim: 309" in summary
    assert f"samples: {round(0.05 * 4 * 32 * 32)}" in summary
    assert "objective:" in summary
    assert f"model_bytes: {out.stat().st_size}" in summary


def test_identical_runs_give_identical_model_files(dataset, model, tmp_path):
    again = tmp_path / "again.wsg"
    assert main(["train", "--manifest", str(dataset), "--out", str(again), *SMALL]) == 0
    assert again.read_bytes() == model.read_bytes()


def test_missing_label_file_is_reported(tmp_path, dataset, caplog):
    manifest = tmp_path / "broken.txt"
    image = dataset.parent / "images" / "img_0000.png"
    manifest.write_text(f"# classes: a, b, c\n{image}\t{tmp_path / 'nope.png'}\n")
    out = tmp_path / "m.wsg"
    with caplog.at_level(logging.ERROR):
        assert main(["train", "--manifest", str(manifest), "--out", str(out), *SMALL]) == 1
    assert "nope.png" in caplog.text
    assert not out.exists()
    assert list(tmp_path.glob("*.tmp")) == []


def test_invalid_configuration_exits_with_two(dataset, tmp_path):
    assert main(["train", "--manifest", str(dataset), "--out", str(tmp_path / "m.wsg"), "--scales", "3"]) == 2


def test_config_file_is_merged_with_flags(dataset, tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("mtilde = 64\nsample_frac = 0.05\nepochs = 1\nlevels = 2\n")
    assert main(["--config", str(config), "train", "--manifest", str(dataset), "--out", str(tmp_path / "m.wsg"), "--depth", "1"]) == 0
    assert "feature_dim: 21" in capsys.readouterr().out


def test_predict_writes_labels_and_scores(model, dataset, tmp_path):
    image = dataset.parent / "images" / "img_0000.png"
    out = tmp_path / "labels.png"
    scores = tmp_path / "scores"
    assert main(["predict", "--model", str(model), "--image", str(image), "--out", str(out), "--scores", str(scores)]) == 0
    labels = np.asarray(PILImage.open(out))
    assert labels.shape == (32, 32)
    assert labels.max() < 3
    assert sorted(p.name for p in scores.iterdir()) == ["scale.txt", "score_00.png", "score_01.png", "score_02.png"]


def test_predict_over_manifest_matches_worker_count(model, dataset, tmp_path):
    one, many = tmp_path / "one", tmp_path / "many"
    assert main(["predict", "--model", str(model), "--manifest", str(dataset), "--out", str(one)]) == 0
    assert main(["--workers", "3", "predict", "--model", str(model), "--manifest", str(dataset), "--out", str(many)]) == 0
    names = sorted(p.name for p in one.iterdir())
    assert len(names) == 4
    for name in names:
        assert (one / name).read_bytes() == (many / name).read_bytes()


def test_corrupted_model_is_rejected(model, dataset, tmp_path, caplog):
    broken = tmp_path / "broken.wsg"
    broken.write_bytes(b"WSG0" + model.read_bytes()[4:])
    out = tmp_path / "labels.png"
    image = dataset.parent / "images" / "img_0000.png"
    with caplog.at_level(logging.ERROR):
        assert main(["predict", "--model", str(broken), "--image", str(image), "--out", str(out)]) == 1
    assert "magic" in caplog.text
    assert not out.exists()


def test_eval_report(model, dataset, tmp_path, capsys):
    report = tmp_path / "report.txt"
    assert main(["eval", "--model", str(model), "--manifest", str(dataset), "--report", str(report)]) == 0
    printed = capsys.readouterr().out
    assert report.read_text() == printed
    fields = dict(line.split(": ", 1) for line in printed.splitlines()[:7])
    assert list(fields) == [
        "pixel_accuracy",
        "mean_precision",
        "mean_recall",
        "mean_f1",
        "evaluated_pixels",
        "boundary_radius",
        "images",
    ]
    assert fields["boundary_radius"] == "3"
    assert fields["images"] == "4"
    assert "confusion_matrix" in printed


def _evaluated_pixels(text: str) -> int:
    return int(next(line for line in text.splitlines() if line.startswith("evaluated_pixels")).split(": ")[1])


def test_eval_radius_and_workers(model, dataset, capsys):
    assert main(["eval", "--model", str(model), "--manifest", str(dataset), "--boundary-radius", "0"]) == 0
    radius_zero = capsys.readouterr().out
    assert main(["eval", "--model", str(model), "--manifest", str(dataset), "--boundary-radius", "3"]) == 0
    radius_three = capsys.readouterr().out
    assert main(["--workers", "2", "eval", "--model", str(model), "--manifest", str(dataset)]) == 0
    pooled = capsys.readouterr().out
    assert _evaluated_pixels(radius_zero) == 4 * 32 * 32
    assert _evaluated_pixels(radius_three) <= _evaluated_pixels(radius_zero)
    assert pooled == radius_three


def test_tune_single_point(dataset, capsys):
    args = ["tune", "--manifest", str(dataset), "--gammas", "0.5", "--lambdas", "1e-4", *SMALL]
    assert main(args) == 0
    assert "best: gamma=0.5 lambda=0.0001" in capsys.readouterr().out


def test_tune_with_too_many_folds_fails(dataset):
    args = ["tune", "--manifest", str(dataset), "--gammas", "0.5", "--lambdas", "1e-4", "--folds", "5", *SMALL]
    assert main(args) == 1


def test_bench_prints_both_counts(capsys):
    assert main(["bench", "--width", "32", "--height", "24", "--mtilde", "32"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed[0].startswith("paper_op_count: 3.871 MOp")
    assert printed[1].startswith("configured_op_count: ")
    assert "feature_dim: 309" in printed
    assert any(line.startswith("time_extract_s: ") for line in printed)


def test_crossval_and_curve(dataset, capsys):
    assert main(["crossval", "--manifest", str(dataset), "--folds", "2", *SMALL]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split()[:2] == ["fold", "train"]
    assert table[-1].startswith("mean")
    assert main(["curve", "--manifest", str(dataset), "--train-sizes", "1,2", "--test-fraction", "0.25", "--splits", "1", *SMALL]) == 0
    curve = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in curve] == ["train_images", "1", "2"]


def test_bench_lists_feature_names(capsys):
    assert main(["bench", "--width", "16", "--height", "16", "--mtilde", "8", "--list-features"]) == 0
    printed = capsys.readouterr().out.splitlines()
    names = [line.split(": ", 1)[1] for line in printed if line.startswith("feature_0")]
    assert len(names) == 309
    assert names[0] == "s1/c0/root"
