"""
Integration tests for the command-line interface
"""

import pandas as pd
import pytest
import yaml

from src.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, build_parser, main
from src.components.checkpoint import load_checkpoint
from src.components.detector import score_series


@pytest.fixture
def tiny_config(tmp_path):
    """Small simple-model experiment that trains in well under a second"""
    path = tmp_path / "tiny.cfg"
    path.write_text(yaml.safe_dump({
        "schema_version": 1,
        "name": "tiny",
        "model": {
            "on": {"weights": [0.5, 0.5], "shapes": [1, 1], "scales": [0.5, 1.5]},
            "off": {"weights": [0.5, 0.5], "shapes": [2, 4], "scales": [2.0, 1.0]},
        },
        "sensing": {"t_ob": 0.01, "t_re": 0.24},
        "attack": {"impulse_probability": 0.3},
        "detector": {"arch": "rnn", "hidden_size": 4},
        "training": {"epochs": 2, "bptt_length": 10, "batch_size": 4},
        "evaluation": {"train_slots": 400, "eval_slots": 300},
        "seeds": 1,
    }))
    return path


class TestParser:
    """Test argument parsing"""

    def test_requires_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_rejects_unknown_arch(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--arch", "gru"])

    def test_rejects_negative_seed(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["simulate", "--seed", "-3"])

    def test_reproduce_repeatable_flags(self):
        args = build_parser().parse_args(
            ["reproduce", "--config", "a.cfg", "--config", "b.cfg", "--arch", "rnn", "--arch", "lstm3"]
        )
        assert [str(p) for p in args.config] == ["a.cfg", "b.cfg"]
        assert args.detectors == ["rnn", "lstm3"]
        assert args.jobs == 1


@pytest.mark.integration
class TestCommands:
    """Test each subcommand end to end"""

    def test_simulate_without_attacks(self, tiny_config, tmp_path):
        out = tmp_path / "sim"
        code = main(["simulate", "--config", str(tiny_config), "--attack-prob", "0", "--slots", "200", "--out", str(out)])
        assert code == EXIT_OK
        series = pd.read_csv(out / "series.csv")
        assert len(series) == 200
        assert (series["attack_mask"] == 0).all()
        assert (out / "trace.csv").is_file()

    def test_simulate_deterministic(self, tiny_config, tmp_path):
        for name in ("a", "b"):
            main(["simulate", "--config", str(tiny_config), "--seed", "11", "--out", str(tmp_path / name)])
        assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()

    def test_train_score_roc(self, tiny_config, tmp_path, capsys):
        sim, train, score, roc = (tmp_path / d for d in ("sim", "train", "score", "roc"))
        assert main(["simulate", "--config", str(tiny_config), "--seed", "3", "--out", str(sim)]) == EXIT_OK
        assert main(["train", "--config", str(tiny_config), "--out", str(train)]) == EXIT_OK

        checkpoint = train / "checkpoint_rnn.yaml"
        assert load_checkpoint(checkpoint).params.meta["detector"] == "rnn"

        code = main([
            "score", "--checkpoint", str(checkpoint), "--input", str(sim / "series.csv"), "--out", str(score),
        ])
        assert code == EXIT_OK
        scores = pd.read_csv(score / "scores.csv")
        assert list(scores.columns) == ["step", "slot_index", "loss", "contaminated"]
        assert len(scores) == (300 - 4 - 2) // 2 + 1

        assert main(["roc", "--scores", str(score / "scores.csv"), "--out", str(roc)]) == EXIT_OK
        assert "AUC:" in capsys.readouterr().out
        frame = pd.read_csv(roc / "roc.csv")
        assert frame["fpr"].iloc[-1] == 1.0

    def test_train_explicit_checkpoint(self, tiny_config, tmp_path):
        path = tmp_path / "models" / "lstm.yaml"
        code = main(["train", "--config", str(tiny_config), "--arch", "lstm1", "--checkpoint", str(path)])
        assert code == EXIT_OK
        assert load_checkpoint(path).params.meta["depth"] == 1

    def test_score_simulated_series(self, tiny_config, tmp_path):
        checkpoint = tmp_path / "rnn.yaml"
        main(["train", "--config", str(tiny_config), "--checkpoint", str(checkpoint)])
        code = main(["score", "--checkpoint", str(checkpoint), "--config", str(tiny_config), "--out", str(tmp_path)])
        assert code == EXIT_OK
        assert pd.read_csv(tmp_path / "scores.csv")["contaminated"].any()

    def test_score_input_uses_config_slot_period(self, tiny_config, tmp_path, monkeypatch):
        sim = tmp_path / "sim"
        main(["simulate", "--config", str(tiny_config), "--slots", "100", "--out", str(sim)])
        checkpoint = tmp_path / "rnn.yaml"
        main(["train", "--config", str(tiny_config), "--checkpoint", str(checkpoint)])

        periods = []

        def recording_score_series(network, series, window):
            periods.append(series.slot_period)
            return score_series(network, series, window)

        monkeypatch.setattr("src.cli.score_series", recording_score_series)
        code = main([
            "score", "--checkpoint", str(checkpoint), "--config", str(tiny_config),
            "--input", str(sim / "series.csv"), "--out", str(tmp_path / "score"),
        ])
        assert code == EXIT_OK
        assert periods == [pytest.approx(0.25)]

    def test_reproduce(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "results"
        code = main([
            "reproduce", "--config", str(tiny_config), "--seed", "5", "--seeds", "1",
            "--arch", "rnn", "--arch", "lstm1", "--out", str(out),
        ])
        assert code == EXIT_OK
        model_dir = out / "tiny"
        for name in ("report.yaml", "comparison.csv", "scores_rnn.csv", "roc_lstm1.csv"):
            assert (model_dir / name).is_file()
        report = yaml.safe_load((model_dir / "report.yaml").read_text())
        assert sorted(report["ranking"]) == ["lstm1", "rnn"]
        assert len(pd.read_csv(out / "summary.csv")) == 2
        assert "auc" in capsys.readouterr().out

    def test_reproduce_byte_identical(self, tiny_config, tmp_path):
        for name in ("first", "second"):
            main(["reproduce", "--config", str(tiny_config), "--arch", "rnn", "--out", str(tmp_path / name)])
        first = (tmp_path / "first" / "tiny" / "report.yaml").read_bytes()
        assert first == (tmp_path / "second" / "tiny" / "report.yaml").read_bytes()


class TestExitCodes:
    """Test exit status on failures"""

    def test_validation_error(self, tiny_config, tmp_path):
        code = main(["simulate", "--config", str(tiny_config), "--attack-prob", "1.5", "--out", str(tmp_path)])
        assert code == EXIT_VALIDATION

    def test_invalid_config_file(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("schema_version: 3\n")
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_missing_checkpoint(self, tmp_path):
        code = main(["score", "--checkpoint", str(tmp_path / "absent.yaml"), "--out", str(tmp_path)])
        assert code == EXIT_RUNTIME

    def test_missing_scores(self, tmp_path):
        assert main(["roc", "--scores", str(tmp_path / "absent.csv")]) == EXIT_RUNTIME

    @pytest.mark.parametrize("argv", [
        ["simulate", "--seed", "-3"],
        ["train", "--arch", "gru"],
        ["reproduce", "--seeds", "many"],
        [],
    ])
    def test_bad_arguments(self, argv):
        assert main(argv) == EXIT_VALIDATION

    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK
        assert "reproduce" in capsys.readouterr().out
