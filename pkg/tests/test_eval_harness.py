"""
Unit tests for ROC/AUC evaluation and the experiment harness
"""

from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import mannwhitneyu

from src.components.detector import DetectionScore
from src.components.eval_harness import (
    COMPARISON_COLUMNS,
    ExperimentReport,
    SeedResult,
    compare_detectors,
    comparison_table,
    pair_counting_auc,
    roc_curve,
    roc_to_frame,
    run_detector_suite,
    run_experiment,
)
from src.utils.config_loader import CONFIG_DIR, config_from_dict, load_default_settings, parse_config


def make_scores(clean, contaminated):
    losses = [(loss, False) for loss in clean] + [(loss, True) for loss in contaminated]
    return [
        DetectionScore(step=n, slot_index=4 + 2 * n, loss=float(loss), contaminated=flag)
        for n, (loss, flag) in enumerate(losses)
    ]


def make_report(detector, auc, normal=0.01, contaminated=0.05):
    result = SeedResult(
        seed=1,
        normal_loss=normal,
        contaminated_loss=contaminated,
        auc=auc,
        initial_train_loss=0.2,
        final_train_loss=0.02,
        contaminated_steps=10,
    )
    return ExperimentReport(model="simple", detector=detector, label=detector, config_digest="abc", seed_results=[result])


@pytest.fixture
def tiny_config():
    raw = {
        "schema_version": 1,
        "name": "tiny",
        "model": {
            "on": {"weights": [0.5, 0.5], "shapes": [1, 1], "scales": [0.5, 1.5]},
            "off": {"weights": [0.5, 0.5], "shapes": [2, 4], "scales": [2.0, 1.0]},
        },
        "sensing": {"t_ob": 0.01, "t_re": 0.24},
        "detector": {"arch": "rnn", "hidden_size": 4},
        "training": {"epochs": 2, "bptt_length": 10, "batch_size": 4},
        "evaluation": {"train_slots": 600, "eval_slots": 400},
        "seed": 7,
        "seeds": 2,
    }
    return config_from_dict(raw, load_default_settings())


class TestRocCurve:
    """Test ROC construction and AUC"""

    def test_perfect_separation(self):
        points, auc = roc_curve(make_scores([0.01, 0.02, 0.03], [0.1, 0.2]))
        assert auc == pytest.approx(1.0)
        assert (points[0].false_positive_rate, points[0].true_positive_rate) == (0.0, 0.0)
        assert points[0].threshold == float("inf")

    def test_reversed_separation(self):
        _, auc = roc_curve(make_scores([0.5, 0.6], [0.1, 0.2]))
        assert auc == pytest.approx(0.0)

    def test_small_fixture(self):
        points, auc = roc_curve(make_scores([0.1, 0.2], [0.15, 0.3]))
        assert auc == pytest.approx(0.75)
        assert [p.threshold for p in points[1:]] == [0.3, 0.2, 0.15, 0.1]
        assert [p.false_positive_rate for p in points] == [0.0, 0.0, 0.5, 0.5, 1.0]
        assert [p.true_positive_rate for p in points] == [0.0, 0.5, 0.5, 1.0, 1.0]

    def test_ends_at_one_one(self):
        rng = np.random.default_rng(0)
        points, _ = roc_curve(make_scores(rng.random(30), rng.random(20)))
        assert (points[-1].false_positive_rate, points[-1].true_positive_rate) == (1.0, 1.0)

    def test_monotone(self):
        rng = np.random.default_rng(1)
        points, _ = roc_curve(make_scores(rng.random(100), rng.random(50) + 0.2))
        fpr = [p.false_positive_rate for p in points]
        tpr = [p.true_positive_rate for p in points]
        assert fpr == sorted(fpr)
        assert tpr == sorted(tpr)

    def test_all_equal_losses(self):
        _, auc = roc_curve(make_scores([0.1, 0.1], [0.1, 0.1, 0.1]))
        assert auc == pytest.approx(0.5)

    def test_ties_match_pair_counting(self):
        """Test the trapezoid area against pair counting and the Mann-Whitney U statistic"""
        rng = np.random.default_rng(2)
        clean = np.round(rng.gamma(2.0, 0.02, size=1200), 2)
        contaminated = np.round(rng.gamma(2.0, 0.03, size=800), 2)
        _, auc = roc_curve(make_scores(clean, contaminated))

        assert auc == pytest.approx(pair_counting_auc(clean, contaminated), abs=1e-9)
        u = mannwhitneyu(contaminated, clean, alternative="two-sided").statistic
        assert auc == pytest.approx(u / (clean.size * contaminated.size), abs=1e-9)

    def test_identical_distributions(self):
        rng = np.random.default_rng(3)
        _, auc = roc_curve(make_scores(rng.random(5000), rng.random(5000)))
        assert abs(auc - 0.5) < 0.02

    def test_missing_contaminated(self):
        with pytest.raises(ValueError, match="contaminated"):
            roc_curve(make_scores([0.1, 0.2], []))

    def test_missing_clean(self):
        with pytest.raises(ValueError, match="clean"):
            roc_curve(make_scores([], [0.1]))

    def test_frame(self):
        points, _ = roc_curve(make_scores([0.1], [0.2]))
        frame = roc_to_frame(points)
        assert list(frame.columns) == ["threshold", "fpr", "tpr"]
        assert len(frame) == 3


class TestComparison:
    """Test ranking of detector reports"""

    def test_sorted_by_auc(self):
        ranked = compare_detectors([make_report("rnn", 0.7), make_report("lstm3", 0.9), make_report("lstm1", 0.6)])
        assert [r.detector for r in ranked] == ["lstm3", "rnn", "lstm1"]

    def test_tie_broken_by_name(self):
        ranked = compare_detectors([make_report("rnn", 0.8), make_report("lstm1", 0.8)])
        assert [r.detector for r in ranked] == ["lstm1", "rnn"]

    def test_table(self):
        table = comparison_table([make_report("rnn", 0.7), make_report("lstm3", 0.9, normal=0.02, contaminated=0.06)])
        assert list(table.columns) == COMPARISON_COLUMNS
        assert table["rank"].tolist() == [1, 2]
        assert table["detector"].tolist() == ["lstm3", "rnn"]
        assert table["loss_ratio"].iloc[0] == pytest.approx(3.0)

    def test_report_averages(self):
        report = make_report("rnn", 0.8)
        report.seed_results.append(
            SeedResult(seed=2, normal_loss=0.03, contaminated_loss=0.07, auc=0.6,
                       initial_train_loss=0.2, final_train_loss=0.03, contaminated_steps=5)
        )
        assert report.seeds == [1, 2]
        assert report.normal_loss == pytest.approx(0.02)
        assert report.auc == pytest.approx(0.7)

    def test_report_without_runtime(self):
        report = make_report("rnn", 0.8)
        report.runtime_seconds = 12.5
        document = report.to_dict()
        assert "runtime_seconds" not in document
        assert document["format_version"] == 1
        assert len(document["per_seed"]) == 1

    def test_empty_report_rejected(self):
        with pytest.raises(ValueError, match="at least one seed"):
            ExperimentReport(model="m", detector="rnn", label="RNN", config_digest="x", seed_results=[])


@pytest.mark.integration
class TestRunExperiment:
    """Test end-to-end runs on a tiny configuration"""

    def test_report_contents(self, tiny_config):
        report = run_experiment(tiny_config)
        assert report.detector == "rnn"
        assert report.seeds == [7, 8]
        assert report.config_digest == tiny_config.digest()
        assert 0.0 <= report.auc <= 1.0
        assert report.normal_loss > 0
        # scores hold the normal and attacked series of the first seed
        steps = tiny_config.window.num_steps(tiny_config.evaluation.eval_slots)
        assert len(report.scores) == 2 * steps
        assert not any(s.contaminated for s in report.scores[:steps])
        assert any(s.contaminated for s in report.scores[steps:])
        assert all(len(r.to_dict()) == 7 for r in report.seed_results)

    def test_deterministic(self, tiny_config):
        a = run_experiment(tiny_config)
        b = run_experiment(tiny_config)
        assert a.to_dict() == b.to_dict()
        assert a.scores == b.scores

    def test_detectors_share_data(self, tiny_config):
        rnn = run_experiment(tiny_config, "rnn")
        lstm = run_experiment(tiny_config.with_overrides(seeds=1), "lstm1")
        assert [s.contaminated for s in rnn.scores] == [s.contaminated for s in lstm.scores]

    def test_detector_schedule_used(self, tiny_config):
        config = tiny_config.with_overrides(seeds=1)
        shorter = replace(config, schedules={"rnn": replace(config.training, epochs=1)})
        assert shorter.training_for("rnn").epochs == 1
        baseline = run_experiment(config).seed_results[0]
        assert run_experiment(shorter).seed_results[0].final_train_loss != baseline.final_train_loss

    def test_unknown_detector(self, tiny_config):
        with pytest.raises(ValueError, match="Unknown detector"):
            run_experiment(tiny_config, "gru")

    def test_suite_rejects_bad_jobs(self, tiny_config):
        with pytest.raises(ValueError, match="jobs"):
            run_detector_suite(tiny_config, ["rnn"], jobs=0)

    @pytest.mark.slow
    def test_parallel_matches_sequential(self, tiny_config):
        config = tiny_config.with_overrides(seeds=1)
        sequential = run_detector_suite(config, ["rnn", "lstm1"], jobs=1)
        parallel = run_detector_suite(config, ["rnn", "lstm1"], jobs=2)
        assert [r.to_dict() for r in sequential] == [r.to_dict() for r in parallel]


@pytest.mark.slow
@pytest.mark.integration
class TestBundledModels:
    """Test detection quality on the shipped PU models with the default schedules"""

    @pytest.fixture(scope="class", params=["simple.cfg", "complex.cfg"])
    def reports(self, request):
        config = parse_config(CONFIG_DIR / request.param).with_overrides(seeds=3)
        return {report.detector: report for report in run_detector_suite(config, jobs=3)}

    def test_attacks_raise_average_loss(self, reports):
        for report in reports.values():
            assert report.contaminated_loss > report.normal_loss

    def test_deep_stack_loss_gap(self, reports):
        assert reports["lstm3"].loss_ratio >= 2.0

    def test_clean_and_contaminated_separate(self, reports):
        assert all(report.auc > 0.55 for report in reports.values())
        assert reports["lstm3"].auc >= 0.85

    def test_deep_stack_ranked_first(self, reports):
        ranking = [report.detector for report in compare_detectors(list(reports.values()))]
        assert ranking[0] == "lstm3"
