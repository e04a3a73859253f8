import json

import numpy as np
import pytest

from t3cen.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, degree_range, int_list, main, orders_arg
from t3cen.colorspace import RgbImage, read_ppm, write_ppm
from t3cen.config import read_config


def test_argument_parsers():
    assert int_list("2..5") == [2, 3, 4, 5]
    assert int_list("3,5") == [3, 5]
    assert orders_arg("4x1x2") == (4, 1, 2) == orders_arg("4,1,2")
    assert degree_range("120:360") == (120.0, 360.0)


@pytest.fixture(scope="module")
def shapes_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("shapes")
    assert main(["gen-data", "shapes", "--split", "hue-abc", "--count", "12", "--size", "16",
                 "--seed", "1999", "--out", str(out)]) == EXIT_OK
    return out


def test_gen_data_shapes(shapes_dir, tmp_path):
    for name in "ABC":
        man = json.loads((shapes_dir / name / "manifest.json").read_text())
        assert len(man["items"]) == 12 and man["split"] == name
    assert main(["gen-data", "shapes", "--split", "hue-abc", "--count", "12", "--size", "16",
                 "--seed", "1999", "--out", str(tmp_path)]) == EXIT_OK
    for name in "ABC":
        a = json.loads((shapes_dir / name / "manifest.json").read_text())["content_hash"]
        b = json.loads((tmp_path / name / "manifest.json").read_text())["content_hash"]
        assert a == b
    assert (shapes_dir / "resolved-config.txt").exists()


def test_gen_data_mnist_missing_input(tmp_path, capsys):
    code = main(["gen-data", "mnist-hue", "--images", str(tmp_path / "nope.gz"), "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "missing input" in capsys.readouterr().err


def test_gen_data_mnist_bundled(tmp_path):
    assert main(["gen-data", "mnist-hue", "--test-count", "20", "--train-range", "0:120",
                 "--test-range", "120:360", "--out", str(tmp_path)]) == EXIT_OK
    assert len(json.loads((tmp_path / "test-id" / "manifest.json").read_text())["items"]) == 20


def test_usage_errors():
    assert main([]) == EXIT_USAGE
    assert main(["lift"]) == EXIT_USAGE
    assert main(["analyze", "--cover", "hue"]) == EXIT_USAGE


def test_lift_white_background(tmp_path):
    img = np.ones((3, 6, 6))
    img[:, 2:4, 2:4] = np.array([0.9, 0.2, 0.1])[:, None, None]
    write_ppm(tmp_path / "in.ppm", RgbImage(img))
    out = tmp_path / "hue"
    assert main(["lift", "--image", str(tmp_path / "in.ppm"), "--orders", "4,1,1", "--out", str(out)]) == EXIT_OK
    files = sorted((out / "images").iterdir())
    assert len(files) == 4 and len((out / "index.csv").read_text().splitlines()) == 5
    for f in files:
        assert np.all(read_ppm(f).data[:, 0, 0] == 1.0)
    out = tmp_path / "lum"
    assert main(["lift", "--image", str(tmp_path / "in.ppm"), "--orders", "1,1,4", "--out", str(out)]) == EXIT_OK
    corners = [read_ppm(f).data[:, 0, 0].mean() for f in sorted((out / "images").iterdir())]
    assert min(corners) < 0.5


def test_lift_unreadable_image(tmp_path):
    assert main(["lift", "--image", str(tmp_path / "missing.ppm"), "--out", str(tmp_path)]) == 1


def test_analyze_single_value(tmp_path):
    assert main(["analyze", "--value", "0.5", "--order", "4", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["degenerate"] == 1 and rep["distinct_count"] == 3


def test_analyze_grid_and_single_candidate(tmp_path, shapes_dir):
    assert main(["analyze", "--orders", "2..6", "--grid", "21", "--out", str(tmp_path)]) == EXIT_OK
    rec = json.loads((tmp_path / "recommendation.json").read_text())
    assert set(rec["mean_entropy_density"]) == {"2", "3", "4", "5", "6"}
    assert len((tmp_path / "coverage.csv").read_text().splitlines()) == 1 + 21 * 5
    assert main(["analyze", "--orders", "7", "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "recommendation.json").read_text())["recommended_order"] == 7
    assert main(["analyze", "--dataset", str(shapes_dir / "A"), "--orders", "2,4", "--out", str(tmp_path)]) == EXIT_OK


def test_equiv_small(tmp_path):
    args = ["equiv", "--orders", "3,5", "--images", "4", "--size", "12", "--seeds", "1", "--depth", "2"]
    assert main(args + ["--out", str(tmp_path / "dc")]) == EXIT_OK
    summary = json.loads((tmp_path / "dc" / "summary.json").read_text())
    assert summary["mean"] <= 1e-5 and summary["restoration_error"] <= 1e-5
    assert main(args + ["--model", "lcer", "--out", str(tmp_path / "lc")]) == EXIT_OK
    summary = json.loads((tmp_path / "lc" / "summary.json").read_text())
    assert summary["mean"] > 0.05 and summary["restoration_error"] > 1.0
    assert main(args + ["--shift", "0", "--out", str(tmp_path / "z")]) == EXIT_OK
    assert json.loads((tmp_path / "z" / "summary.json").read_text())["restoration_error"] == 0.0


def _train(shapes_dir, out, *extra):
    return main(["train", "--train", str(shapes_dir / "A"), "--test", str(shapes_dir / "B"), "--orders", "3,1,1",
                 "--width", "6", "--depth", "2", "--epochs", "1", "--batch-size", "6", "--dtype", "float64",
                 "--no-budget-check", "--out", str(out), *extra])


def test_train_and_eval(shapes_dir, tmp_path):
    assert _train(shapes_dir, tmp_path) == EXIT_OK
    lines = (tmp_path / "metrics.jsonl").read_text().splitlines()
    assert len(lines) == 1 and "B_error" in json.loads(lines[0])
    ckpt = tmp_path / "checkpoints" / "model.t3cen"
    assert ckpt.read_bytes()[:6] == b"T3CEN\x00"
    assert main(["eval", "--checkpoint", str(ckpt), "--data", str(shapes_dir / "B"), "--out", str(tmp_path / "e")]) == 0
    base = json.loads((tmp_path / "e" / "eval.json").read_text())["error"]
    assert base == json.loads((tmp_path / "final.json").read_text())["B_error"]
    assert main(["eval", "--checkpoint", str(ckpt), "--data", str(shapes_dir / "B"), "--transform", "hue:1",
                 "--out", str(tmp_path / "t")]) == 0
    moved = json.loads((tmp_path / "t" / "eval.json").read_text())["error"]
    assert abs(moved - base) <= 0.1


def test_train_lr_zero_keeps_init(shapes_dir, tmp_path):
    from t3cen.gcnn.network import Network, load_checkpoint

    assert _train(shapes_dir, tmp_path, "--lr", "0") == EXIT_OK
    net = load_checkpoint(tmp_path / "checkpoints" / "model.t3cen")
    np.testing.assert_array_equal(net.get_flat(), Network(net.cfg).get_flat())


def test_train_exit_codes(shapes_dir, tmp_path):
    assert _train(shapes_dir, tmp_path / "nan", "--lr", "nan") == EXIT_NUMERIC
    code = main(["train", "--train", str(shapes_dir / "A"), "--orders", "4,1,1", "--width", "4",
                 "--out", str(tmp_path / "budget")])
    assert code == EXIT_CONFIG


def test_config_file_and_override(shapes_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"train = {shapes_dir / 'A'}\norders = 3,1,1\nwidth = 6\ndepth = 2\nepochs = 1\n"
                   "batch-size = 6\nno-budget-check = true\nlr = 0.5\n")
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfg), "--lr", "0.01", "--out", str(out)]) == EXIT_OK
    resolved = read_config(out / "resolved-config.txt")
    assert resolved["lr"] == "0.01" and resolved["orders"] == "3,1,1" and resolved["batch_size"] == "6"


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert main(["analyze", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    bad.write_text("grid = many\n")
    assert main(["analyze", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    bad.write_text("no equals sign\n")
    assert main(["analyze", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("T3CEN_THREADS", "1")
    assert main(["analyze", "--value", "0.3", "--order", "3", "--out", str(tmp_path)]) == EXIT_OK
