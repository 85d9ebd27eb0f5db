import json

import numpy as np
import pytest

from gemsel import Dataset, save_csv
from gemsel.bounds import optimal_k
from gemsel.cli import run


@pytest.fixture
def data_csv(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((50, 4))
    y = x @ [2.0, -1.0, 0.0, 0.0] + 0.5 * rng.standard_normal(50)
    path = tmp_path / "data.csv"
    save_csv(Dataset.from_arrays(y, x), str(path))
    return str(path)


class TestSelect:
    def test_happy_path_cv(self, data_csv, tmp_path):
        out = str(tmp_path / "run")
        code = run(["select", "--input", data_csv, "--penalty", "lasso",
                    "--cv", "10", "--seed", "42", "--output", out])
        assert code == 0
        report = json.loads((tmp_path / "run.selection.json").read_text())
        assert report["mode"]["kind"] == "cv"
        assert report["mode"]["K"] == 10
        assert report["best_lambda"] >= 0.0
        path_csv = (tmp_path / "run.path.csv").read_text().strip().split("\n")
        assert path_csv[0] == "lambda,ete,ege,l1_norm,nnz"
        assert len(path_csv) == 1 + len(report["path"])
        manifest = json.loads((tmp_path / "run.manifest.json").read_text())
        assert manifest["command"] == "select"
        assert manifest["options"]["seed"] == 42

    def test_byte_identical_reruns(self, data_csv, tmp_path):
        out = str(tmp_path / "rep")
        args = ["select", "--input", data_csv, "--penalty", "lasso",
                "--ratio", "0.8", "--seed", "7", "--grid-points", "20",
                "--output", out]
        assert run(args) == 0
        first = {f: (tmp_path / f).read_bytes()
                 for f in ("rep.selection.json", "rep.path.csv", "rep.manifest.json")}
        assert run(args) == 0
        for f, blob in first.items():
            assert (tmp_path / f).read_bytes() == blob

    def test_json_csv_numbers_round_trip(self, data_csv, tmp_path):
        out = str(tmp_path / "rt")
        run(["select", "--input", data_csv, "--penalty", "ridge",
             "--seed", "3", "--grid-points", "12", "--output", out])
        report = json.loads((tmp_path / "rt.selection.json").read_text())
        rows = (tmp_path / "rt.path.csv").read_text().strip().split("\n")[1:]
        for row, entry in zip(rows, report["path"]):
            lam, ete, ege, _, _ = row.split(",")
            assert float(lam) == entry["lambda"]
            assert float(ege) == entry["ege"] or (ege == "nan" and entry["failed"])


class TestBound:
    def test_worked_example(self, tmp_path):
        out = str(tmp_path / "b")
        code = run(["bound", "--thm", "2.1", "--nt", "200", "--ns", "50",
                    "--h", "6", "--varpi", "0.5", "--tail", "light",
                    "--varq", "2", "--ete", "1.0", "--output", out])
        assert code == 0
        rep = json.loads((tmp_path / "b.bound.json").read_text())
        np.testing.assert_allclose(rep["bound_value"], 1.7525341019786667, atol=1e-9)
        np.testing.assert_allclose(rep["probability_floor"], 0.5 * (1 - 1 / 200))

    def test_vc_and_ols_and_cv(self, tmp_path):
        for i, args in enumerate((
            ["bound", "--thm", "vc", "--nt", "100", "--h", "5", "--eta", "0.05",
             "--ete", "1.0"],
            ["bound", "--thm", "ols", "--nt", "200", "--ns", "50", "--h", "6",
             "--varpi", "0.5", "--sigma2", "1.0", "--ete", "0.9"],
            ["bound", "--thm", "2.2", "--n", "100", "--k", "5", "--h", "4",
             "--varpi", "0.5", "--tail", "light", "--varq", "1.0", "--ete", "1.0",
             "--tq-mean", "0.01", "--tq-var", "0.001", "--bernstein-b", "0.05"],
        )):
            out = str(tmp_path / f"m{i}")
            assert run(args + ["--output", out]) == 0
            rep = json.loads((tmp_path / f"m{i}.bound.json").read_text())
            assert rep["bound_value"] > 0


class TestFit:
    @pytest.mark.parametrize("estimator,extra", [
        ("ols", []),
        ("ridge", ["--lam", "0.1"]),
        ("lasso", ["--lam", "0.1"]),
        ("bridge", ["--lam", "0.1", "--gamma", "3.0"]),
        ("fsr", ["--fsr-step", "0.01"]),
    ])
    def test_each_estimator(self, data_csv, tmp_path, estimator, extra):
        out = str(tmp_path / estimator)
        code = run(["fit", "--input", data_csv, "--estimator", estimator,
                    "--output", out] + extra)
        assert code == 0
        payload = json.loads((tmp_path / f"{estimator}.fit.json").read_text())
        assert len(payload["coefficients_standardized"]) == 4
        assert np.isfinite(payload["intercept_original"])


class TestOptimalK:
    def test_matches_library(self, tmp_path):
        out = str(tmp_path / "ok")
        code = run(["optimal-k", "--n", "250", "--h", "6", "--sigma2", "1.0",
                    "--varpi", "0.5", "--kmin", "2", "--kmax", "25",
                    "--output", out])
        assert code == 0
        payload = json.loads((tmp_path / "ok.optimal_k.json").read_text())
        k_star, _ = optimal_k(250, 6, 1.0, 0.5, (2, 25))
        assert payload["k_star"] == k_star
        rows = (tmp_path / "ok.optimal_k.csv").read_text().strip().split("\n")
        assert rows[0] == "K,bias_term,variance_term,total"
        assert len(rows) == 1 + 24


class TestSimulate:
    def test_preset_table2_shape(self, tmp_path):
        out = str(tmp_path / "sim")
        code = run(["simulate", "--preset", "table2", "--p", "200",
                    "--sigma2", "1", "--reps", "2", "--output", out])
        assert code == 0
        agg = (tmp_path / "sim.aggregates.csv").read_text().strip().split("\n")
        assert agg[0] == "measure,lasso,ols"
        assert [r.split(",")[0] for r in agg[1:]] == [
            "Bias_L2", "Bias_L1", "eTE", "eGE", "R2_t", "R2_s", "GR2"]
        assert (tmp_path / "sim.boxplot.csv").exists()
        assert (tmp_path / "sim.gr2.csv").exists()
        study = json.loads((tmp_path / "sim.study.json").read_text())
        assert study["config"]["sigma2"] == 1.0

    def test_custom_run(self, tmp_path):
        out = str(tmp_path / "c")
        code = run(["simulate", "--n", "60", "--p", "6", "--sigma2", "1.0",
                    "--reps", "2", "--estimators", "lasso,ols", "--cv", "4",
                    "--seed", "5", "--output", out])
        assert code == 0


class TestErrors:
    def test_unknown_flag_exits_2(self, data_csv):
        with pytest.raises(SystemExit) as err:
            run(["select", "--input", data_csv, "--penalty", "lasso",
                 "--no-such-flag", "1"])
        assert err.value.code == 2

    def test_bad_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run(["frobnicate"])
        assert err.value.code == 2

    def test_computation_error_exit_1_with_json(self, tmp_path, capsys):
        code = run(["fit", "--input", str(tmp_path / "missing.csv"),
                    "--estimator", "ols", "--output", str(tmp_path / "x")])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert "error" in err and "message" in err

    def test_underdetermined_fit_exit_1(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        ds = Dataset.from_arrays(rng.standard_normal(5), rng.standard_normal((5, 9)))
        path = tmp_path / "wide.csv"
        save_csv(ds, str(path))
        code = run(["fit", "--input", str(path), "--estimator", "ols",
                    "--output", str(tmp_path / "w")])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "Underdetermined"
