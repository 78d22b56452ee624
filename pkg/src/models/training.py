"""
Truncated BPTT training loop shared by the recurrent detectors.

The windowed training series is cut into sequences of bptt_length steps;
each sequence starts from a zero state, and batch_size sequences are
processed side by side per optimizer update.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Protocol, Tuple

import numpy as np

from src.models.nn_core import AdamState, ParamStore, adam_step
from src.utils.constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_BPTT_LENGTH,
    DEFAULT_EPOCHS,
    DEFAULT_EPSILON,
    DEFAULT_GRAD_CLIP,
    DEFAULT_HIDDEN_SIZE,
    DEFAULT_LEARNING_RATE,
)
from src.utils.validators import validate_positive, validate_positive_int

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    """Network size and optimizer schedule."""
    hidden_size: int = DEFAULT_HIDDEN_SIZE
    epochs: int = DEFAULT_EPOCHS
    bptt_length: int = DEFAULT_BPTT_LENGTH
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    grad_clip: float = DEFAULT_GRAD_CLIP

    def validate(self) -> "TrainingConfig":
        for name in ("hidden_size", "epochs", "bptt_length", "batch_size"):
            is_valid, message = validate_positive_int(getattr(self, name), name)
            if not is_valid:
                raise ValueError(f"Invalid training configuration: {message}")
        for name in ("learning_rate", "epsilon", "grad_clip"):
            is_valid, message = validate_positive(getattr(self, name), name)
            if not is_valid:
                raise ValueError(f"Invalid training configuration: {message}")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"Invalid training configuration: {name} must be in [0, 1), got {value}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


class RecurrentNetwork(Protocol):
    """Interface the trainer and the detector rely on."""
    params: ParamStore

    def initial_state(self, batch=None): ...

    def step(self, state, window: np.ndarray): ...

    def sequence_loss(self, inputs: np.ndarray, labels: np.ndarray) -> float: ...

    def sequence_loss_and_grads(self, inputs: np.ndarray, labels: np.ndarray, scale: float = 1.0) -> float: ...


@dataclass
class TrainingResult:
    """Trained network and its loss history (entry 0 = untrained loss)."""
    network: RecurrentNetwork
    loss_history: List[float] = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]


def make_sequences(inputs: np.ndarray, labels: np.ndarray, bptt_length: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split consecutive windows into equal-length BPTT sequences.

    Trailing windows that do not fill a whole sequence are dropped; a series
    shorter than one sequence becomes a single shorter sequence.

    Returns:
        Tuple of (X (S, L, l_I), Y (S, L))
    """
    n = inputs.shape[0]
    if n < 1:
        raise ValueError("no training windows available")
    length = min(bptt_length, n)
    count = n // length
    used = count * length
    X = inputs[:used].reshape(count, length, inputs.shape[1])
    Y = labels[:used].reshape(count, length)
    return X, Y


def evaluate_sequences(network: RecurrentNetwork, X: np.ndarray, Y: np.ndarray) -> float:
    """Mean step loss over all sequences, each from a zero state."""
    total = network.sequence_loss(X.transpose(1, 0, 2), Y.T)
    return total / Y.size


def fit_network(
    network: RecurrentNetwork,
    inputs: np.ndarray,
    labels: np.ndarray,
    config: TrainingConfig,
    rng: np.random.Generator,
) -> List[float]:
    """
    Train a network in place with truncated BPTT and Adam.

    Args:
        network: Network to train
        inputs: (N, l_I) input windows in series order
        labels: (N,) label indices
        config: Training schedule
        rng: Generator used to shuffle sequence order each epoch

    Returns:
        Loss history: untrained mean loss followed by one mean loss per epoch
    """
    config.validate()
    X, Y = make_sequences(inputs, labels, config.bptt_length)
    n_seq, length = Y.shape
    adam = AdamState.for_params(
        network.params,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
    )

    history = [evaluate_sequences(network, X, Y)]
    logger.info(
        f"Training {network.params.meta.get('arch')} on {n_seq} sequences x {length} steps, "
        f"initial loss {history[0]:.5f}"
    )

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_seq)
        epoch_loss = 0.0
        for start in range(0, n_seq, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = X[idx].transpose(1, 0, 2)
            yb = Y[idx].T
            batch_loss = network.sequence_loss_and_grads(xb, yb, scale=1.0 / yb.size)
            norm = network.params.clip_grad_norm(config.grad_clip)
            adam_step(network.params, adam)
            epoch_loss += batch_loss
            logger.debug(f"epoch {epoch} batch {start // config.batch_size}: loss {batch_loss / yb.size:.5f}, grad norm {norm:.3f}")
        history.append(epoch_loss / Y.size)
        logger.info(f"Epoch {epoch}/{config.epochs}: mean loss {history[-1]:.5f}")

    if history[-1] > history[0]:
        logger.warning(f"Final training loss {history[-1]:.5f} exceeds initial loss {history[0]:.5f}")
    return history
