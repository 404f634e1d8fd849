import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fracnb import synthetic
from fracnb.cli import main, resolve_settings, build_parser
from fracnb.criterion import RegularizerSpec
from fracnb.data import load_csv, prepare
from fracnb.model import Model
from fracnb.pipeline import TrainParams, fit
from fracnb.search import fnb_train

from conftest import DATA_DIR

IRIS = str(DATA_DIR / "iris.csv")


@pytest.fixture
def toy_csv(tmp_path):
    raw = synthetic.toy(N=60, K=3, J=2, seed=5)
    path = tmp_path / "toy.csv"
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(raw.names + ["class"])
        for n in range(raw.N):
            out.writerow([raw.columns[k][n] for k in range(raw.K)] + [raw.target[n]])
    return str(path)


def read_criterion(out_dir):
    return json.loads((out_dir / "model.json").read_text())["metadata"]["train_criterion"]


class TestTrain:
    def test_fnb_dyadic_weights(self, toy_csv, tmp_path):
        out = tmp_path / "m"
        assert main(["train", "--data", toy_csv, "--target", "class", "--method", "fnb", "--out", str(out)]) == 0
        model = Model.load(out / "model.json")
        scaled = model.weights * 2**10
        np.testing.assert_array_equal(scaled, np.round(scaled))
        assert (out / "trace.csv").read_text().startswith("iteration,stage,objective")

    def test_chained_no_worse_than_fnb(self, toy_csv, tmp_path):
        assert main(["train", "--data", toy_csv, "--target", "class", "--method", "sg.cf", "--init", "fnb",
                     "--out", str(tmp_path / "a")]) == 0
        model = Model.load(tmp_path / "a" / "model.json")
        assert model.metadata["params"]["init"] == "fnb"
        data, _ = prepare(load_csv(toy_csv, "class"))
        fnb = fnb_train(data, RegularizerSpec.for_data(data, variant="fractional"))
        assert read_criterion(tmp_path / "a") <= fnb.criterion + 1e-9

    def test_missing_target(self, toy_csv, tmp_path, capsys):
        assert main(["train", "--data", toy_csv, "--target", "label", "--out", str(tmp_path)]) == 2
        assert "'label'" in capsys.readouterr().err

    def test_missing_data_flag(self, capsys):
        assert main(["train", "--target", "class"]) == 2
        assert "--data" in capsys.readouterr().err

    def test_bad_choice_is_usage_error(self):
        assert main(["train", "--method", "lasso"]) == 2

    def test_invalid_hyperparameter(self, toy_csv, tmp_path):
        assert main(["train", "--data", toy_csv, "--target", "class", "--p", "1.5", "--method", "sg.cf",
                     "--out", str(tmp_path)]) == 2

    def test_every_gradient_method(self, toy_csv, tmp_path):
        for m in ("sg", "am", "sg.ue", "ug.cf", "ug.ue", "cg.cf", "cg.ue", "snb", "fnb+sg.cf"):
            assert main(["train", "--data", toy_csv, "--target", "class", "--method", m,
                         "--out", str(tmp_path / m)]) == 0, m


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"lambda": 0.5, "p": 0.75, "method": "snb"}))
        args = build_parser().parse_args(["train", "--config", str(cfg), "--lambda", "0.1"])
        s = resolve_settings(args)
        assert s["lambda"] == 0.1 and s["p"] == 0.75 and s["method"] == "snb"

    def test_unknown_key(self, tmp_path, toy_csv):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"lamda": 0.5}))
        assert main(["train", "--config", str(cfg), "--data", toy_csv, "--target", "class"]) == 2


class TestPredict:
    def test_round_trip_matches_in_process(self, tmp_path):
        assert main(["train", "--data", IRIS, "--target", "species", "--method", "fnb", "--out", str(tmp_path)]) == 0
        assert main(["predict", "--model", str(tmp_path / "model.json"), "--data", IRIS, "--out", str(tmp_path)]) == 0
        rows = list(csv.reader(open(tmp_path / "predictions.csv")))
        assert rows[0] == ["id", "p_setosa", "p_versicolor", "p_virginica", "label"]
        expected = fit(load_csv(IRIS, "species"), TrainParams(method="fnb")).model.predict_proba(load_csv(IRIS, "species"))
        got = np.array([[float(v) for v in r[1:4]] for r in rows[1:]])
        np.testing.assert_array_equal(got, expected)
        labels = [r[4] for r in rows[1:]]
        assert labels[0] == "setosa"

    def test_empty_file(self, tmp_path, capsys):
        main(["train", "--data", IRIS, "--target", "species", "--method", "nb", "--out", str(tmp_path)])
        capsys.readouterr()
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert main(["predict", "--model", str(tmp_path / "model.json"), "--data", str(empty)]) == 0
        assert capsys.readouterr().out.splitlines()[1:] == []

    def test_missing_column(self, tmp_path):
        main(["train", "--data", IRIS, "--target", "species", "--method", "nb", "--out", str(tmp_path)])
        part = tmp_path / "part.csv"
        lines = open(IRIS).read().splitlines()
        part.write_text("\n".join(",".join(l.split(",")[:2]) for l in lines) + "\n")
        assert main(["predict", "--model", str(tmp_path / "model.json"), "--data", str(part)]) == 2

    def test_missing_model_file(self, tmp_path):
        assert main(["predict", "--model", str(tmp_path / "nope.json"), "--data", IRIS]) == 2


class TestEvaluateAndBenchmark:
    def test_evaluate(self, tmp_path, capsys):
        main(["train", "--data", IRIS, "--target", "species", "--method", "fnb", "--out", str(tmp_path)])
        capsys.readouterr()
        assert main(["evaluate", "--model", str(tmp_path / "model.json"), "--data", IRIS]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["n"] == 150 and doc["acc"] > 0.9

    def test_benchmark_sweep(self, tmp_path, toy_csv):
        assert main(["benchmark", "--data", toy_csv, "--target", "class", "--method", "fnb", "--sweep", "p",
                     "--folds", "3", "--out", str(tmp_path), "--no-timing"]) == 0
        rows = list(csv.DictReader(open(tmp_path / "report.csv")))
        methods = sorted({r["method"] for r in rows})
        assert len(methods) == 5  # null + four exponents
        assert all(r["selected_vars"] != "" for r in rows)
        assert json.loads((tmp_path / "report.json").read_text())["summary"]

    def test_benchmark_unknown_method(self, tmp_path, toy_csv):
        assert main(["benchmark", "--data", toy_csv, "--target", "class", "--methods", "nb,xgb",
                     "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "fracnb", "train", "--data", IRIS, "--target", "nope"],
                         capture_output=True, text=True)
    assert out.returncode == 2
    assert "nope" in out.stderr
