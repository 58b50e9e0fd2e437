import hashlib
import json
from pathlib import Path

import pytest

from pressmap.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cliflow")
    sim = root / "sim"
    code = run("simulate", "--seed", 7, "--press-choices", "0.2,0.8",
               "--duration", 150, "--matches", 2, "--out", sim)
    assert code == 0
    ds = root / "ds"
    code = run("dataset", "--data", sim, "--variant", "ppm2d",
               "--test-match", "match_01", "--out", ds)
    assert code == 0
    model = root / "model"
    code = run("train", "--data", ds, "--epochs", 4, "--hidden", 8,
               "--lr", "0.003", "--seed", 1, "--out", model)
    assert code == 0
    return root


class TestSimulate:
    def test_outputs_and_run_log(self, tmp_path):
        out = tmp_path / "sim"
        assert run("simulate", "--seed", 3, "--press", 0.8, "--duration", 20, "--out", out) == 0
        for name in ("tracking.csv", "events.csv", "orientations.csv", "manifest.json", "run.json"):
            assert (out / name).exists(), name
        log = json.loads((out / "run.json").read_text())
        assert log["subcommand"] == "simulate"
        assert log["status"] == "ok"
        assert log["seed"] == 3

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run("simulate", "--seed", 5, "--press", 0.5, "--duration", 15, "--out", a)
        run("simulate", "--seed", 5, "--press", 0.5, "--duration", 15, "--out", b)
        for name in ("tracking.csv", "events.csv", "orientations.csv", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_multi_match_layout(self, workspace):
        sim = workspace / "sim"
        assert (sim / "match_00" / "tracking.csv").exists()
        assert (sim / "match_01" / "tracking.csv").exists()


class TestIngest:
    def test_ok(self, workspace, tmp_path):
        out = tmp_path / "ing"
        assert run("ingest", "--data", workspace / "sim" / "match_00", "--out", out) == 0
        summary = json.loads((out / "ingest_summary.json").read_text())
        assert summary["frame_rate_hz"] == 25.0
        assert summary["paper_rate"] is True

    def test_validation_failure_exits_3(self, tmp_path, capsys):
        bad = tmp_path / "bad"
        bad.mkdir()
        (bad / "tracking.csv").write_text(
            "frame,timestamp,team,player_id,x,y,vx,vy\n0,0.0,home,7,999.0,0.0,,\n"
        )
        (bad / "events.csv").write_text(
            "event_id,kind,team,player_id,start_frame,end_frame,outcome,"
            "start_x,start_y,end_x,end_y\n"
        )
        assert run("ingest", "--data", bad, "--out", tmp_path / "o") == 3
        err = capsys.readouterr().err
        assert err.startswith("error:") and "\n" not in err.strip()


class TestPressureAndAmplifier:
    def test_pressure_dump(self, workspace, tmp_path):
        out = tmp_path / "press"
        assert run("pressure", "--data", workspace / "sim" / "match_00",
                   "--variant", "amplified", "--out", out) == 0
        text = (out / "pressure.csv").read_text()
        assert text.startswith("frame,player_id,k0")
        assert ",amplified" in text

    def test_amplifier_estimation(self, tmp_path):
        sim = tmp_path / "hp"
        run("simulate", "--seed", 11, "--press", 0.9, "--duration", 420, "--out", sim)
        out = tmp_path / "amp"
        assert run("amplifier", "--data", sim, "--out", out) == 0
        text = (out / "amplifier.csv").read_text()
        assert text.startswith("relative_direction,weight")
        assert len(text.strip().splitlines()) == 9

    def test_amplifier_insufficient_data_exits_3(self, tmp_path):
        sim = tmp_path / "tiny"
        run("simulate", "--seed", 11, "--press", 0.5, "--duration", 10, "--out", sim)
        assert run("amplifier", "--data", sim, "--out", tmp_path / "amp") == 3


class TestDatasetAndTrain:
    def test_dataset_layout(self, workspace):
        ds = workspace / "ds"
        assert (ds / "train" / "manifest.csv").exists()
        assert (ds / "test" / "manifest.csv").exists()
        summary = json.loads((ds / "dataset_summary.json").read_text())
        assert summary["variant"] == "ppm2d"
        assert summary["windows"] > 50
        assert summary["test_matches"] == ["match_01"]

    def test_train_artifacts(self, workspace):
        model = workspace / "model"
        assert (model / "pop.ckpt").read_bytes().startswith(b"POPM1\n")
        metrics = (model / "metrics.csv").read_text()
        assert metrics.startswith("epoch,split,loss,accuracy")
        eval_summary = json.loads((model / "eval.json").read_text())
        assert "test_accuracy" in eval_summary
        assert eval_summary["variant"] == "ppm2d"

    def test_train_is_deterministic(self, workspace, tmp_path):
        out = tmp_path / "model2"
        assert run("train", "--data", workspace / "ds", "--epochs", 4, "--hidden", 8,
                   "--lr", "0.003", "--seed", 1, "--out", out) == 0
        h1 = hashlib.sha256((workspace / "model" / "pop.ckpt").read_bytes()).hexdigest()
        h2 = hashlib.sha256((out / "pop.ckpt").read_bytes()).hexdigest()
        assert h1 == h2


class TestPredictAndReport:
    def test_missing_checkpoint_exits_3(self, workspace, tmp_path, capsys):
        code = run("report", "--model", tmp_path / "nope.ckpt",
                   "--data", workspace / "sim" / "match_00", "--out", tmp_path / "r")
        assert code == 3
        assert "checkpoint not found" in capsys.readouterr().err

    def test_predict_series(self, workspace, tmp_path):
        out = tmp_path / "pred"
        code = run("predict", "--model", workspace / "model" / "pop.ckpt",
                   "--data", workspace / "sim" / "match_00", "--possession", 0, "--out", out)
        assert code == 0
        series = [p for p in out.iterdir() if p.name.startswith("pressure_series_")]
        assert len(series) == 1
        assert series[0].read_text().startswith("timestamp,team_pressure")

    def test_predict_single_window(self, workspace, tmp_path):
        out = tmp_path / "pred1"
        manifest = json.loads(
            (workspace / "sim" / "match_00" / "manifest.json").read_text()
        )
        start = manifest["possessions"][0]["start_frame"]
        code = run("predict", "--model", workspace / "model" / "pop.ckpt",
                   "--data", workspace / "sim" / "match_00",
                   "--possession", 0, "--window-start", start, "--out", out)
        assert code == 0
        payload = json.loads((out / "prediction.json").read_text())
        assert payload["p_keep"] + payload["p_lose"] == pytest.approx(1.0, abs=1e-9)
        assert payload["team_pressure"] == payload["p_lose"]

    def test_report_outputs(self, workspace, tmp_path):
        out = tmp_path / "rep"
        code = run("report", "--model", workspace / "model" / "pop.ckpt",
                   "--data", workspace / "sim" / "match_00", "--out", out)
        assert code == 0
        assert (out / "pass_accuracy.csv").exists()
        assert (out / "event_deltas.csv").exists()
        assert (out / "summary.json").exists()
        assert any(p.name.startswith("pressure_series_") for p in out.iterdir())


class TestGradcheckAndUsage:
    def test_gradcheck_passes(self, capsys):
        assert run("gradcheck") == 0
        out = capsys.readouterr().out
        assert "gradient check passed" in out

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run("simulate", "--nope", 1, "--out", "x")
        assert exc.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            run("frobnicate")
        assert exc.value.code == 2

    def test_config_file_defaults_and_flag_override(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("duration = 15\npress = 0.4\nseed = 9\n")
        out = tmp_path / "sim"
        assert run("--config", config, "simulate", "--press", "0.6", "--out", out) == 0
        log = json.loads((out / "run.json").read_text())
        assert log["config"]["duration"] == 15.0
        assert log["config"]["press"] == 0.6  # flag beats config
        assert log["seed"] == 9

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("nonsense = 1\n")
        with pytest.raises(SystemExit) as exc:
            run("--config", config, "simulate", "--out", tmp_path / "x")
        assert exc.value.code == 2
