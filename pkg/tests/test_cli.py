import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from nrcdt.cli import RunConfig, main
from nrcdt.datasets import encode_atoms
from nrcdt.errors import InvalidConfig
from nrcdt.measures import make_measure_2d


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "ds"
    assert main(["gen-academic", "--classes", "3", "--per-class", "10", "--seed", "7", "--out", str(out)]) == 0
    return out


def _files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestGenAcademic:
    def test_counts(self, dataset, capsys):
        doc = json.loads((dataset / "manifest.json").read_text())
        assert len(doc["items"]) == 30 and doc["class_count"] == 3
        assert len(list((dataset / "items").glob("*.nrcdt"))) == 30

    def test_byte_identical(self, dataset, tmp_path):
        again = tmp_path / "again"
        assert main(["gen-academic", "--classes", "3", "--per-class", "10", "--seed", "7", "--out", str(again)]) == 0
        assert _files(again) == _files(dataset)

    def test_prints_class_counts(self, tmp_path, capsys):
        main(["gen-academic", "--classes", "2", "--per-class", "3", "--out", str(tmp_path / "d")])
        out = capsys.readouterr().out
        assert "class 0 (cross): 3 items" in out and "class 1 (shield): 3 items" in out

    @pytest.mark.parametrize(
        "argv",
        [
            ["--per-class", "0"],
            ["--classes", "4"],
            ["--per-class", "x"],
            ["--bogus"],
        ],
    )
    def test_usage_errors(self, argv, tmp_path):
        assert main(["gen-academic", "--out", str(tmp_path / "d")] + argv) == 2

    def test_missing_out(self):
        assert main(["gen-academic"]) == 2

    def test_sampler_from_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"sampler": {"rotation_range": [0, 0], "shear_range": [0, 0],
                                               "scale_range": [[1, 1], [1, 1]],
                                               "translation_range": [[0, 0], [0, 0]]}}))
        assert main(["gen-academic", "--classes", "1", "--per-class", "2", "--config", str(cfg),
                     "--out", str(tmp_path / "d")]) == 0
        prov = json.loads(json.loads((tmp_path / "d" / "manifest.json").read_text())["items"][0]["provenance"])
        assert prov["affine"] == {"a11": 1.0, "a12": 0.0, "a21": 0.0, "a22": 1.0, "y1": 0.0, "y2": 0.0}

    def test_invalid_sampler(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"sampler": {"scale_range": [[-1, 1], [1, 1]]}}))
        assert main(["gen-academic", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 2


class TestTransform:
    def test_rows(self, dataset, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["transform", str(dataset), "-M", "64", "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["item_id", "label", "level", "value"]
        assert len(rows) - 1 == 1920
        assert rows[1][:3] == ["0", "0", "0.0078125"]

    def test_class_bundles(self, dataset, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["transform", str(dataset), "--angles", "128", "--out", str(out)]) == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        curves = data[:, 3].reshape(30, 64)
        labels = data[::64, 1].astype(int)
        within = max(
            np.abs(curves[i] - curves[j]).max()
            for i in range(30) for j in range(30) if labels[i] == labels[j]
        )
        between = min(
            np.abs(curves[i] - curves[j]).max()
            for i in range(30) for j in range(30) if labels[i] != labels[j]
        )
        assert within < between / 3

    def test_missing_dataset(self, tmp_path):
        assert main(["transform", str(tmp_path / "nope"), "--out", str(tmp_path / "c.csv")]) == 2

    def test_collinear_item_named(self, tmp_path, capsys):
        (tmp_path / "a.nrcdt").write_bytes(encode_atoms(make_measure_2d([(0, 0), (1, 1)], [1, 1])))
        (tmp_path / "manifest.json").write_text(
            json.dumps({"class_count": 1, "items": [{"path": "a.nrcdt", "label": 0}]})
        )
        assert main(["transform", str(tmp_path)]) == 1
        assert "item 0" in capsys.readouterr().err

    def test_parse_error(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{")
        assert main(["transform", str(tmp_path)]) == 1


class TestClassifyNn:
    def test_templates_l8(self, dataset, tmp_path):
        out = tmp_path / "r.json"
        assert main(["classify-nn", str(dataset), "--angles", "8", "--norm", "inf", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["accuracy"] == 1.0

    def test_two_angles_report_only(self, dataset, tmp_path):
        out = tmp_path / "r.json"
        assert main(["classify-nn", str(dataset), "--angles", "2", "--out", str(out)]) == 0
        assert 0.0 <= json.loads(out.read_text())["accuracy"] <= 1.0

    def test_iterate(self, dataset, tmp_path):
        out = tmp_path / "r.json"
        assert main(["classify-nn", str(dataset), "--mode", "iterate", "-L", "8", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["folds"]) == 10
        assert doc["mean"] == pytest.approx(np.mean(doc["folds"]), abs=1e-12)

    def test_no_templates(self, tmp_path):
        (tmp_path / "a.csv").write_text("1,1\n0,1\n")
        (tmp_path / "manifest.json").write_text(
            json.dumps({"class_count": 1, "items": [{"path": "a.csv", "label": 0}]})
        )
        assert main(["classify-nn", str(tmp_path)]) == 2
        assert main(["classify-nn", str(tmp_path), "--mode", "iterate"]) == 0


class TestCrossValidate:
    def test_report(self, dataset, tmp_path):
        out = tmp_path / "cv.json"
        assert main(["cross-validate", str(dataset), "-L", "8", "--seed", "3", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        for key in ("representation", "angles", "class_size", "mean", "std", "folds"):
            assert key in doc
        assert doc["class_size"] == 10 and doc["seed"] == 3 and doc["mean"] >= 0.9
        assert doc["mean"] == pytest.approx(np.mean(doc["folds"]), abs=1e-12)
        assert doc["std"] == pytest.approx(np.std(doc["folds"]), abs=1e-12)

    def test_deterministic(self, dataset, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["cross-validate", str(dataset), "--rep", "rcdt", "-L", "4", "--out", str(a)])
        main(["cross-validate", str(dataset), "--rep", "rcdt", "-L", "4", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_too_few_items(self, dataset):
        assert main(["cross-validate", str(dataset), "--folds", "20"]) == 1

    def test_config_precedence(self, dataset, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"angles": 4, "folds": 5, "representation": "euclidean"}))
        out = tmp_path / "cv.json"
        assert main(["cross-validate", str(dataset), "--config", str(cfg), "--folds", "2", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert (doc["angles"], doc["k"], doc["representation"]) == (4, 2, "euclidean_pixels")
        assert len(doc["folds"]) == 2

    def test_defaults(self, dataset, tmp_path):
        out = tmp_path / "cv.json"
        assert main(["cross-validate", str(dataset), "--pipeline", "nn", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert (doc["angles"], doc["quantiles"], doc["k"], doc["seed"]) == (16, 64, 10, 0)

    def test_bad_config(self, dataset, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"angles": 0}))
        assert main(["cross-validate", str(dataset), "--config", str(cfg)]) == 2
        assert main(["cross-validate", str(dataset), "--config", str(tmp_path / "missing.json")]) == 2

    def test_conventional_split(self, dataset, tmp_path):
        out = tmp_path / "cv.json"
        assert main(["cross-validate", str(dataset), "-L", "8", "--conventional", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["inverted"] is False


class TestDistances:
    @pytest.mark.parametrize("metric", ["sw2", "mnrcdt"])
    def test_matrix(self, dataset, tmp_path, metric):
        out = tmp_path / "d.csv"
        assert main(["distances", str(dataset), "--metric", metric, "-L", "4", "--out", str(out)]) == 0
        d = np.loadtxt(out, delimiter=",", skiprows=1)[:, 1:]
        assert d.shape == (30, 30)
        np.testing.assert_allclose(d, d.T, atol=1e-12)
        assert np.abs(np.diag(d)).max() == 0.0

    def test_sw2_matches_library(self, dataset, tmp_path):
        from nrcdt.cdt import QuantileGrid, rcdt, sliced_wasserstein2
        from nrcdt.datasets import load_manifest
        from nrcdt.radon import AngleGrid

        out = tmp_path / "d.csv"
        main(["distances", str(dataset), "--metric", "sw2", "-L", "4", "--out", str(out)])
        d = np.loadtxt(out, delimiter=",", skiprows=1)[:, 1:]
        ds = load_manifest(dataset)
        f = [rcdt(it.measure, AngleGrid(4), QuantileGrid(64)) for it in ds.items[:3]]
        assert d[0, 2] == pytest.approx(sliced_wasserstein2(f[0], f[2]), abs=1e-12)


class TestRunConfig:
    @pytest.mark.parametrize(
        "kw", [{"angles": 0}, {"quantiles": 1}, {"folds": 1}, {"eps_std": 0.0}, {"norm": "l1"},
               {"representation": "pixels"}]
    )
    def test_invalid(self, kw):
        with pytest.raises(InvalidConfig):
            RunConfig(**kw)

    def test_no_antipodes_flag(self, dataset, tmp_path):
        out = tmp_path / "cv.json"
        assert main(["cross-validate", str(dataset), "-L", "4", "--no-antipodes", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["antipodes"] is False


def test_no_command():
    assert main([]) == 2


@pytest.mark.skipif(shutil.which("nrcdt") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["nrcdt", "gen-academic", "--per-class", "0", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 2 and "per-class" in r.stderr
