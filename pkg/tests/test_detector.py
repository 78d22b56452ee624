"""
Unit tests for the PUE attack detector
"""

import numpy as np
import pandas as pd
import pytest

from src.components.detector import (
    SCORE_COLUMNS,
    DetectionScore,
    Threshold,
    classify,
    contamination_flags,
    frame_to_scores,
    mean_loss,
    score_series,
    scores_to_frame,
)
from src.models.channel_sim import SensedSeries
from src.models.label_domain import WindowConfig, build_windows, step_losses
from src.models.lstm import LstmNetwork, init_lstm_params
from src.models.rnn_basic import RnnNetwork, init_rnn_params


@pytest.fixture
def series():
    rng = np.random.default_rng(21)
    pu_bits = rng.integers(0, 2, size=80).astype(np.int8)
    attack_mask = (rng.random(80) < 0.2).astype(np.int8)
    return SensedSeries(bits=pu_bits | attack_mask, attack_mask=attack_mask, slot_period=1.0, pu_bits=pu_bits)


@pytest.fixture
def rnn():
    return RnnNetwork(init_rnn_params(4, 2, 6, np.random.default_rng(0)))


def make_scores(losses, flags):
    return [
        DetectionScore(step=n, slot_index=4 + 2 * n, loss=loss, contaminated=flag)
        for n, (loss, flag) in enumerate(zip(losses, flags))
    ]


class TestScoreSeries:
    """Test scoring of a sensed series"""

    def test_one_score_per_step(self, rnn, series):
        scores = score_series(rnn, series, WindowConfig())
        assert len(scores) == (80 - 4 - 2) // 2 + 1
        assert [s.step for s in scores] == list(range(len(scores)))
        assert [s.slot_index for s in scores[:3]] == [4, 6, 8]
        assert all(s.loss >= 0 for s in scores)

    def test_state_carried_across_series(self, rnn, series):
        """Test that scoring equals one uninterrupted forward pass"""
        inputs, labels, _ = build_windows(series.bits, WindowConfig())
        _, Y = rnn.forward(inputs)
        expected = step_losses(Y, labels)
        losses = [s.loss for s in score_series(rnn, series, WindowConfig())]
        np.testing.assert_allclose(losses, expected, rtol=1e-12)

    def test_state_matters(self, rnn, series):
        inputs, labels, _ = build_windows(series.bits, WindowConfig())
        memoryless = [rnn.sequence_loss(inputs[n:n + 1], labels[n:n + 1]) for n in range(len(labels))]
        losses = [s.loss for s in score_series(rnn, series, WindowConfig())]
        assert losses[0] == pytest.approx(memoryless[0])
        assert not np.allclose(losses[1:], memoryless[1:])

    def test_lstm_network(self, series):
        network = LstmNetwork(init_lstm_params(4, 2, 5, 3, np.random.default_rng(1)))
        scores = score_series(network, series, WindowConfig())
        assert len(scores) == 38
        flags = contamination_flags(series, WindowConfig())
        assert [s.contaminated for s in scores] == flags.tolist()

    def test_too_short(self, rnn):
        short = SensedSeries(bits=np.zeros(5), attack_mask=np.zeros(5), slot_period=1.0)
        with pytest.raises(ValueError, match="too short"):
            score_series(rnn, short, WindowConfig())

    def test_deterministic(self, rnn, series):
        a = score_series(rnn, series, WindowConfig())
        b = score_series(rnn, series, WindowConfig())
        assert a == b


class TestContaminationFlags:
    """Test ground truth per detector step"""

    def test_hand_built_series(self):
        pu_bits = np.array([0, 0, 1, 0, 0, 0, 1, 1, 0, 0], dtype=np.int8)
        attack_mask = np.array([0, 0, 1, 0, 0, 1, 0, 0, 0, 0], dtype=np.int8)
        series = SensedSeries(
            bits=pu_bits | attack_mask, attack_mask=attack_mask, slot_period=1.0, pu_bits=pu_bits
        )
        flags = contamination_flags(series, WindowConfig(l_I=2, l_C=2, stride=2))
        # slot 2 coincides with PU activity; slot 5 is an observable impulse
        assert flags.tolist() == [False, True, False, False]

    def test_attack_in_input_window_only(self):
        attack_mask = np.array([1, 0, 0, 0, 0, 0], dtype=np.int8)
        series = SensedSeries(bits=attack_mask.copy(), attack_mask=attack_mask, slot_period=1.0)
        assert contamination_flags(series, WindowConfig()).tolist() == [False]

    def test_attack_free(self, series):
        clean = SensedSeries(bits=series.pu_bits, attack_mask=np.zeros(80), slot_period=1.0)
        assert not contamination_flags(clean, WindowConfig()).any()


class TestClassify:
    """Test threshold decisions"""

    def test_zero_threshold_flags_positive_losses(self):
        scores = make_scores([0.0, 0.01, 0.2], [False, False, True])
        assert classify(scores, Threshold(0.0)) == [False, True, True]

    def test_threshold_above_max_loss_flags_nothing(self):
        scores = make_scores([0.1, 0.5, 0.75], [False, True, True])
        assert classify(scores, Threshold(1.0)) == [False, False, False]

    def test_strictly_above(self):
        scores = make_scores([0.1, 0.3, 0.5], [False, True, True])
        assert classify(scores, Threshold(0.3)) == [False, False, True]

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            Threshold(-0.1)


class TestDetectionScore:
    """Test score records"""

    def test_negative_loss_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            DetectionScore(step=0, slot_index=4, loss=-1e-3, contaminated=False)

    def test_nan_loss_rejected(self):
        with pytest.raises(ValueError):
            DetectionScore(step=0, slot_index=4, loss=float("nan"), contaminated=False)

    def test_mean_loss(self):
        assert mean_loss(make_scores([0.1, 0.3], [False, False])) == pytest.approx(0.2)
        with pytest.raises(ValueError, match="no scores"):
            mean_loss([])

    def test_frame_columns_and_types(self):
        frame = scores_to_frame(make_scores([0.1, 0.2], [False, True]))
        assert list(frame.columns) == SCORE_COLUMNS
        assert frame["contaminated"].dtype == bool
        assert frame["step"].tolist() == [0, 1]

    def test_frame_back_to_scores(self):
        scores = make_scores([0.125, 0.5], [True, False])
        assert frame_to_scores(scores_to_frame(scores)) == scores

    def test_frame_missing_column(self):
        with pytest.raises(ValueError, match="missing columns"):
            frame_to_scores(pd.DataFrame({"step": [0], "loss": [0.1]}))
