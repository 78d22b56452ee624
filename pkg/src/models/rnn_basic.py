"""
Basic recurrent detector network.

h_i = tanh(W_hx s_i + W_hh h_{i-1} + b_h)
y_i = softmax(W_yh h_i + b_y)

Inputs may be a single window (l_I,) or a batch (B, l_I); sequences are
(T, l_I) or (T, B, l_I).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.models.channel_sim import SensedSeries
from src.models.label_domain import WindowConfig, build_windows, step_loss_grad, step_losses
from src.models.nn_core import ParamStore, glorot_uniform, softmax, tanh_act
from src.models.training import TrainingConfig, TrainingResult, fit_network

logger = logging.getLogger(__name__)

ARCH = "rnn"
PARAM_NAMES = ("W_hx", "W_hh", "W_yh", "b_h", "b_y")

# RnnParams is a ParamStore holding PARAM_NAMES with meta arch/hidden_size/l_I/l_C
RnnParams = ParamStore


@dataclass
class RnnState:
    """Hidden state h of shape (m,) or (B, m)."""
    h: np.ndarray


def init_rnn_params(l_I: int, l_C: int, hidden_size: int, rng: np.random.Generator) -> RnnParams:
    """
    Glorot-initialized weights, zero biases.

    Returns:
        ParamStore with W_hx (m, l_I), W_hh (m, m), W_yh (2^l_C, m), b_h (m), b_y (2^l_C)
    """
    l_O = 2 ** l_C
    params = ParamStore(meta={"arch": ARCH, "hidden_size": int(hidden_size), "l_I": int(l_I), "l_C": int(l_C)})
    params.add("W_hx", glorot_uniform(hidden_size, l_I, rng))
    params.add("W_hh", glorot_uniform(hidden_size, hidden_size, rng))
    params.add("W_yh", glorot_uniform(l_O, hidden_size, rng))
    params.add("b_h", np.zeros(hidden_size))
    params.add("b_y", np.zeros(l_O))
    return params


def check_rnn_params(params: RnnParams) -> Tuple[int, int, int]:
    """
    Verify that the parameter shapes are mutually consistent.

    Returns:
        Tuple of (l_I, m, l_O)
    """
    missing = [name for name in PARAM_NAMES if name not in params]
    if missing:
        raise ValueError(f"RNN parameters missing: {missing}")
    m, l_I = params["W_hx"].shape
    l_O = params["W_yh"].shape[0]
    expected = {
        "W_hh": (m, m),
        "W_yh": (l_O, m),
        "b_h": (m,),
        "b_y": (l_O,),
    }
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ValueError(f"{name} has shape {params[name].shape}, expected {shape}")
    if l_O & (l_O - 1):
        raise ValueError(f"output size {l_O} is not a power of two")
    return l_I, m, l_O


def rnn_step(params: RnnParams, state: RnnState, window: np.ndarray) -> Tuple[RnnState, np.ndarray]:
    """
    One recurrent step.

    Args:
        params: RNN parameters
        state: Previous hidden state
        window: Input bit window (l_I,) or (B, l_I)

    Returns:
        Tuple of (new state, likelihood vector y over the 2^l_C labels)
    """
    W_hx, W_hh = params["W_hx"], params["W_hh"]
    x = np.asarray(window, dtype=float)
    if x.shape[-1] != W_hx.shape[1]:
        raise ValueError(f"input window has length {x.shape[-1]}, expected {W_hx.shape[1]}")
    if state.h.shape[-1] != W_hh.shape[0]:
        raise ValueError(f"hidden state has size {state.h.shape[-1]}, expected {W_hh.shape[0]}")

    h = tanh_act(x @ W_hx.T + state.h @ W_hh.T + params["b_h"])
    y = softmax(h @ params["W_yh"].T + params["b_y"])
    return RnnState(h=h), y


def rnn_forward(
    params: RnnParams, initial_state: Optional[RnnState], inputs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run the network over a sequence of windows.

    Args:
        params: RNN parameters
        initial_state: Starting state (zero when None)
        inputs: (T, l_I) or (T, B, l_I) windows

    Returns:
        Tuple of (hidden states H, outputs Y), each with leading dimension T
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim < 2 or inputs.shape[0] == 0:
        raise ValueError("rnn_forward requires a non-empty sequence of windows")
    _, m, l_O = check_rnn_params(params)
    state = initial_state or RnnState(h=np.zeros(inputs.shape[1:-1] + (m,)))

    T = inputs.shape[0]
    H = np.empty(inputs.shape[:-1] + (m,))
    Y = np.empty(inputs.shape[:-1] + (l_O,))
    for t in range(T):
        state, Y[t] = rnn_step(params, state, inputs[t])
        H[t] = state.h
    return H, Y


def rnn_sequence_grads(
    params: RnnParams,
    inputs: np.ndarray,
    labels: np.ndarray,
    initial_state: Optional[RnnState] = None,
    scale: float = 1.0,
) -> float:
    """
    Summed step loss of a sequence and its BPTT gradients.

    Gradients of scale × (summed loss) are accumulated into params' buffers.

    Args:
        params: RNN parameters
        inputs: (T, l_I) or (T, B, l_I) windows
        labels: (T,) or (T, B) label indices
        initial_state: Starting state (zero when None)
        scale: Multiplier applied to the gradient

    Returns:
        Summed step loss (unscaled)
    """
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    if inputs.ndim == 2:
        inputs = inputs[:, None, :]
        labels = labels[:, None]
    T, B, _ = inputs.shape
    if T == 0:
        raise ValueError("empty sequence")
    _, m, l_O = check_rnn_params(params)

    W_hh, W_yh = params["W_hh"], params["W_yh"]
    h0 = np.zeros((B, m)) if initial_state is None else np.broadcast_to(initial_state.h, (B, m))
    H, Y = rnn_forward(params, RnnState(h=h0), inputs)

    flat_Y = Y.reshape(T * B, l_O)
    flat_labels = labels.reshape(T * B)
    loss = float(step_losses(flat_Y, flat_labels).sum())

    dY = (step_loss_grad(flat_Y, flat_labels) * scale).reshape(T, B, l_O)
    dZ = Y * (dY - np.sum(dY * Y, axis=-1, keepdims=True))

    g_W_hx, g_W_hh, g_W_yh = params.grad("W_hx"), params.grad("W_hh"), params.grad("W_yh")
    g_b_h, g_b_y = params.grad("b_h"), params.grad("b_y")

    g_W_yh += np.einsum("tbk,tbm->km", dZ, H)
    g_b_y += dZ.sum(axis=(0, 1))
    dH_out = dZ @ W_yh

    dh_next = np.zeros((B, m))
    for t in reversed(range(T)):
        h_prev = H[t - 1] if t > 0 else h0
        da = (dH_out[t] + dh_next) * (1.0 - H[t] ** 2)
        g_W_hx += da.T @ inputs[t]
        g_W_hh += da.T @ h_prev
        g_b_h += da.sum(axis=0)
        dh_next = da @ W_hh
    return loss


class RnnNetwork:
    """Basic RNN detector network."""
    arch = ARCH

    def __init__(self, params: RnnParams):
        check_rnn_params(params)
        self.params = params

    @classmethod
    def initialize(cls, window: WindowConfig, hidden_size: int, rng: np.random.Generator) -> "RnnNetwork":
        return cls(init_rnn_params(window.l_I, window.l_C, hidden_size, rng))

    @property
    def hidden_size(self) -> int:
        return self.params["W_hh"].shape[0]

    def initial_state(self, batch: Optional[int] = None) -> RnnState:
        shape = (self.hidden_size,) if batch is None else (batch, self.hidden_size)
        return RnnState(h=np.zeros(shape))

    def step(self, state: RnnState, window: np.ndarray) -> Tuple[RnnState, np.ndarray]:
        return rnn_step(self.params, state, window)

    def forward(self, inputs: np.ndarray, state: Optional[RnnState] = None):
        return rnn_forward(self.params, state, inputs)

    def sequence_loss(self, inputs: np.ndarray, labels: np.ndarray) -> float:
        labels = np.asarray(labels, dtype=np.int64)
        _, Y = rnn_forward(self.params, None, inputs)
        return float(step_losses(Y.reshape(-1, Y.shape[-1]), labels.reshape(-1)).sum())

    def sequence_loss_and_grads(self, inputs: np.ndarray, labels: np.ndarray, scale: float = 1.0) -> float:
        return rnn_sequence_grads(self.params, inputs, labels, scale=scale)


def rnn_train(
    data: SensedSeries,
    window: WindowConfig,
    hyperparams: TrainingConfig,
    rng: np.random.Generator,
    shuffle_rng: Optional[np.random.Generator] = None,
) -> TrainingResult:
    """
    Train a basic RNN detector on a sensed series.

    Args:
        data: Training series (normally attack-free)
        window: Window configuration
        hyperparams: Training schedule and hidden size
        rng: Generator for weight initialization
        shuffle_rng: Generator for sequence shuffling (defaults to rng)

    Returns:
        TrainingResult with the trained RnnNetwork and loss history

    Raises:
        ValueError: If the series yields no training window
    """
    hyperparams.validate()
    inputs, labels, _ = build_windows(data.bits, window)
    network = RnnNetwork.initialize(window, hyperparams.hidden_size, rng)
    history = fit_network(network, inputs, labels, hyperparams, shuffle_rng or rng)
    return TrainingResult(network=network, loss_history=history)
