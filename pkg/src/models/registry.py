"""
Detector architectures by name: basic RNN, single-layer and three-layer LSTM.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from src.models.channel_sim import SensedSeries
from src.models.label_domain import WindowConfig
from src.models.lstm import LstmNetwork, lstm_train
from src.models.nn_core import ParamStore
from src.models.rnn_basic import RnnNetwork, rnn_train
from src.models.training import TrainingConfig, TrainingResult
from src.utils.constants import DETECTOR_ARCHS, DETECTOR_LABELS

Network = Union[RnnNetwork, LstmNetwork]


@dataclass(frozen=True)
class DetectorSpec:
    """Named detector: recurrent cell type and stack depth."""
    name: str
    cell: str
    depth: int
    label: str

    def to_dict(self) -> dict:
        return {"name": self.name, "cell": self.cell, "depth": int(self.depth)}


DETECTOR_SPECS: Dict[str, DetectorSpec] = {
    name: DetectorSpec(name=name, cell=cell, depth=depth, label=DETECTOR_LABELS[name])
    for name, (cell, depth) in DETECTOR_ARCHS.items()
}


def get_detector_spec(name: str) -> DetectorSpec:
    if name not in DETECTOR_SPECS:
        raise ValueError(f"Unknown detector '{name}'; choose from {sorted(DETECTOR_SPECS)}")
    return DETECTOR_SPECS[name]


def train_detector(
    spec: DetectorSpec,
    series: SensedSeries,
    window: WindowConfig,
    training: TrainingConfig,
    init_rng: np.random.Generator,
    shuffle_rng: Optional[np.random.Generator] = None,
) -> TrainingResult:
    """Train the network named by spec on a sensed series."""
    if spec.cell == "rnn":
        result = rnn_train(series, window, training, init_rng, shuffle_rng)
    else:
        result = lstm_train(series, window, spec.depth, training, init_rng, shuffle_rng)
    result.network.params.meta["detector"] = spec.name
    result.network.params.meta["stride"] = int(window.stride)
    return result


def network_from_params(params: ParamStore) -> Network:
    """Rebuild a network object from restored parameters using their arch header."""
    arch = params.meta.get("arch")
    if arch == "rnn":
        return RnnNetwork(params)
    if arch == "lstm":
        return LstmNetwork(params)
    raise ValueError(f"Unknown network architecture '{arch}'")
