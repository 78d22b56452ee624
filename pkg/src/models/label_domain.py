"""
Label domain mapping and prediction loss for recurrent PUE detectors.

A comparison window of l_C sensed bits maps to one of 2^l_C labels
(big-endian: the first bit is the most significant). Networks predict a
likelihood per label and are scored by the mean squared error between that
likelihood vector and the one-hot vector of the label actually received.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.utils.constants import DEFAULT_COMPARISON_WINDOW, DEFAULT_INPUT_WINDOW
from src.utils.validators import validate_window


@dataclass(frozen=True)
class WindowConfig:
    """Input window l_I, comparison window l_C and prediction stride (default l_C)."""
    l_I: int = DEFAULT_INPUT_WINDOW
    l_C: int = DEFAULT_COMPARISON_WINDOW
    stride: Optional[int] = None

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", self.l_C)
        self.validate()

    @property
    def l_O(self) -> int:
        """Size of the label domain."""
        return 2 ** self.l_C

    def validate(self) -> "WindowConfig":
        is_valid, message = validate_window(self.l_I, self.l_C, self.stride)
        if not is_valid:
            raise ValueError(f"Invalid window configuration: {message}")
        return self

    def num_steps(self, length: int) -> int:
        """Number of prediction steps for a series of the given length."""
        if length < self.l_I + self.l_C:
            return 0
        return (length - self.l_I - self.l_C) // self.stride + 1

    def to_dict(self) -> dict:
        return {"l_I": int(self.l_I), "l_C": int(self.l_C), "stride": int(self.stride)}


def encode_label(bits: Sequence[int]) -> int:
    """
    Map a binary comparison window to its label index.

    [0,0] -> 0, [0,1] -> 1, [1,0] -> 2, [1,1] -> 3

    Raises:
        ValueError: If any entry is not 0 or 1
    """
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("label window must be a non-empty 1-D sequence")
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError(f"label window must be binary, got {list(arr)}")
    index = 0
    for b in arr:
        index = (index << 1) | int(b)
    return index


def decode_label(index: int, l_C: int) -> np.ndarray:
    """Inverse of encode_label: the l_C-bit window of a label index."""
    if not 0 <= index < 2 ** l_C:
        raise ValueError(f"label {index} out of range for l_C={l_C}")
    return np.array([(index >> (l_C - 1 - i)) & 1 for i in range(l_C)], dtype=np.int8)


def encode_labels(windows: np.ndarray) -> np.ndarray:
    """Vectorized encode_label over rows of an (N, l_C) array."""
    windows = np.asarray(windows, dtype=np.int64)
    l_C = windows.shape[1]
    weights = 1 << np.arange(l_C - 1, -1, -1, dtype=np.int64)
    return windows @ weights


def step_loss(y: np.ndarray, true_label: int) -> float:
    """
    Prediction loss of one step.

    Loss = (1/2^l_C) [ Σ_{i≠j} y_i² + (1 − y_j)² ] with j the true label.

    Raises:
        ValueError: If true_label is outside the label domain
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    if not 0 <= int(true_label) < n:
        raise ValueError(f"label {true_label} out of range for {n} outputs")
    target = np.zeros(n)
    target[int(true_label)] = 1.0
    return float(np.sum((y - target) ** 2) / n)


def step_losses(Y: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Vectorized step_loss over rows of Y (N, 2^l_C)."""
    Y = np.asarray(Y, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    n = Y.shape[-1]
    if np.any(labels < 0) or np.any(labels >= n):
        raise ValueError(f"labels out of range for {n} outputs")
    diff = Y.copy()
    diff[np.arange(Y.shape[0]), labels] -= 1.0
    return np.sum(diff * diff, axis=-1) / n


def step_loss_grad(Y: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of step_losses w.r.t. Y: (2 / 2^l_C) (y − e_j), row-wise."""
    Y = np.asarray(Y, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    n = Y.shape[-1]
    grad = Y.copy()
    grad[np.arange(Y.shape[0]), labels] -= 1.0
    return grad * (2.0 / n)


def build_windows(bits: np.ndarray, config: WindowConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Cut a bit series into detector steps.

    Step n uses the input window bits[n·stride : n·stride + l_I] and the
    comparison window of the l_C slots immediately following it.

    Args:
        bits: 0/1 series
        config: Window configuration

    Returns:
        Tuple of (inputs (N, l_I) float64, labels (N,) int64, target_starts (N,) int64)

    Raises:
        ValueError: If the series is shorter than l_I + l_C
    """
    bits = np.asarray(bits, dtype=np.int8)
    n_steps = config.num_steps(bits.size)
    if n_steps < 1:
        raise ValueError(
            f"series of length {bits.size} is too short for l_I={config.l_I}, l_C={config.l_C}"
        )
    offsets = np.arange(n_steps) * config.stride
    input_idx = offsets[:, None] + np.arange(config.l_I)[None, :]
    target_starts = offsets + config.l_I
    target_idx = target_starts[:, None] + np.arange(config.l_C)[None, :]

    inputs = bits[input_idx].astype(np.float64)
    labels = encode_labels(bits[target_idx])
    return inputs, labels, target_starts.astype(np.int64)
