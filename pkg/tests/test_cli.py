import json

import pytest

from minifair.cli import main
from minifair.synthdata import generate_law_csv


@pytest.fixture(scope="module")
def law_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "law.csv"
    generate_law_csv(path, n=200, seed=2)
    return str(path)


def write_config(tmp_path, law_csv, extra=""):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        f"dataset = law\n"
        f"data.path = {law_csv}\n"
        f"methods = unaware-lr, invfair\n"
        f"repeats = 2\n"
        f"seed = 0\n"
        f"train.epochs = 2\n"
        f"train.z_dim = 4\n"
        f"train.encoder_hidden = 8\n"
        f"train.predictor_hidden = 8\n"
        f"ae.epochs = 10\n"
        + extra
    )
    return str(cfg)


class TestRun:
    def test_run_writes_csv(self, tmp_path, law_csv, capsys):
        out = tmp_path / "report.csv"
        cfg = write_config(tmp_path, law_csv)
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "method,metric,mean,variance,n"
        assert any(line.startswith("invfair,rmse,") for line in lines)

    def test_run_json_format(self, tmp_path, law_csv):
        out = tmp_path / "report.json"
        cfg = write_config(tmp_path, law_csv)
        assert main(["run", "--config", cfg, "--out", str(out), "--format", "json"]) == 0
        payload = json.loads(out.read_text())
        assert payload["reference"] == "invfair"
        assert "unaware-lr" in payload["t_tests"]

    def test_method_and_repeats_overrides(self, tmp_path, law_csv):
        out = tmp_path / "r.csv"
        cfg = write_config(tmp_path, law_csv)
        assert (
            main(
                [
                    "run", "--config", cfg, "--out", str(out),
                    "--method", "full-lr", "--repeats", "1",
                ]
            )
            == 0
        )
        body = out.read_text()
        assert "full-lr" in body and "invfair" not in body

    def test_missing_out_path_errors(self, tmp_path, law_csv, capsys):
        cfg = write_config(tmp_path, law_csv)
        assert main(["run", "--config", cfg]) == 1
        assert "out" in capsys.readouterr().err

    def test_bad_config_key_errors(self, tmp_path, law_csv, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dataset = law\nmystery = 1\n")
        assert main(["run", "--config", str(cfg), "--out", "x.csv"]) == 1

    def test_missing_data_file_errors(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.cfg"
        cfg.write_text("dataset = law\ndata.path = /does/not/exist.csv\nrepeats = 1\n")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 1


class TestSweep:
    def test_sweep_flag(self, tmp_path, law_csv):
        out = tmp_path / "sweep.csv"
        cfg = write_config(tmp_path, law_csv)
        code = main(
            ["sweep", "--config", cfg, "--out", str(out), "--lambda", "0.5,2",
             "--repeats", "1"]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "lambda,metric,mean,variance,n"
        assert len(lines) == 1 + 2 * 5

    def test_sweep_from_config_key(self, tmp_path, law_csv):
        out = tmp_path / "sweep.csv"
        cfg = write_config(tmp_path, law_csv, extra="sweep.lambdas = 1\n")
        assert main(["sweep", "--config", cfg, "--out", str(out), "--repeats", "1"]) == 0

    def test_sweep_without_lambdas_errors(self, tmp_path, law_csv):
        cfg = write_config(tmp_path, law_csv)
        assert main(["sweep", "--config", cfg, "--out", "s.csv"]) == 1


class TestScore:
    def test_score_predictions(self, tmp_path):
        preds = tmp_path / "preds.csv"
        preds.write_text("prediction,target\n0.9,1\n0.1,0\n")
        out = tmp_path / "scored.csv"
        assert main(["score", "--predictions", str(preds), "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == "method,metric,mean,variance,n"

    def test_score_missing_file(self, tmp_path):
        assert (
            main(["score", "--predictions", str(tmp_path / "x.csv"), "--out", "o.csv"])
            == 1
        )
