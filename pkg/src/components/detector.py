"""
PUE attack detector built on a trained recurrent network.

The sensed series is windowed into detector steps; at each step the network
predicts a likelihood over the next l_C bits and the prediction loss of the
bits actually received is the anomaly score.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence

import numpy as np
import pandas as pd

from src.models.channel_sim import SensedSeries
from src.models.label_domain import (  # noqa: F401  re-exported detector vocabulary
    WindowConfig,
    build_windows,
    decode_label,
    encode_label,
    step_loss,
    step_losses,
)
from src.models.training import RecurrentNetwork

logger = logging.getLogger(__name__)

SCORE_COLUMNS = ["step", "slot_index", "loss", "contaminated"]


@dataclass(frozen=True)
class DetectionScore:
    """Prediction loss of one detector step and its ground truth."""
    step: int
    slot_index: int
    loss: float
    contaminated: bool

    def __post_init__(self):
        if not self.loss >= 0:
            raise ValueError(f"loss must be non-negative, got {self.loss}")


@dataclass(frozen=True)
class Threshold:
    """Loss cutoff above which a step is flagged as an attack."""
    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"threshold must be non-negative, got {self.value}")


def contamination_flags(series: SensedSeries, config: WindowConfig) -> np.ndarray:
    """
    Ground truth per detector step.

    A step is contaminated when any slot of its comparison window carries an
    attacker impulse while the PU was idle.

    Returns:
        bool array, one entry per step
    """
    n_steps = config.num_steps(len(series))
    if n_steps < 1:
        raise ValueError(
            f"series of length {len(series)} is too short for l_I={config.l_I}, l_C={config.l_C}"
        )
    observable = series.observable_attacks.astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(observable)])
    starts = np.arange(n_steps) * config.stride + config.l_I
    return (csum[starts + config.l_C] - csum[starts]) > 0


def score_series(network: RecurrentNetwork, series: SensedSeries, config: WindowConfig) -> List[DetectionScore]:
    """
    Score every detector step of a series.

    The recurrent state starts at zero and is carried across the whole
    series. Step n feeds bits[n·stride : n·stride + l_I] and compares the
    prediction with the l_C bits that follow.

    Args:
        network: Trained RnnNetwork or LstmNetwork
        series: Sensed series to score
        config: Window configuration the network was trained with

    Returns:
        List of DetectionScore in step order

    Raises:
        ValueError: If the series is shorter than l_I + l_C
    """
    inputs, labels, target_starts = build_windows(series.bits, config)
    flags = contamination_flags(series, config)

    state = network.initial_state()
    losses = np.empty(labels.size)
    for n in range(labels.size):
        state, y = network.step(state, inputs[n])
        losses[n] = step_loss(y, int(labels[n]))

    scores = [
        DetectionScore(step=n, slot_index=int(target_starts[n]), loss=float(losses[n]), contaminated=bool(flags[n]))
        for n in range(labels.size)
    ]
    logger.debug(
        f"Scored {len(scores)} steps: mean loss {losses.mean():.5f}, {int(flags.sum())} contaminated"
    )
    return scores


def classify(scores: Iterable[DetectionScore], threshold: Threshold) -> List[bool]:
    """Attack decision per step: loss strictly above the threshold."""
    return [score.loss > threshold.value for score in scores]


def mean_loss(scores: Sequence[DetectionScore]) -> float:
    if not scores:
        raise ValueError("no scores to average")
    return float(np.mean([score.loss for score in scores]))


def scores_to_frame(scores: Sequence[DetectionScore]) -> pd.DataFrame:
    """Scores as a DataFrame with columns step, slot_index, loss, contaminated."""
    frame = pd.DataFrame([asdict(score) for score in scores], columns=SCORE_COLUMNS)
    return frame.astype({"step": "int64", "slot_index": "int64", "loss": "float64", "contaminated": "bool"})


def frame_to_scores(frame: pd.DataFrame) -> List[DetectionScore]:
    missing = [column for column in SCORE_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"score table missing columns: {missing}")
    return [
        DetectionScore(
            step=int(row.step),
            slot_index=int(row.slot_index),
            loss=float(row.loss),
            contaminated=bool(row.contaminated),
        )
        for row in frame.itertuples(index=False)
    ]
