"""
LSTM detector network, single or multi-layer.

Per layer, with input s and previous state (h, c):
    f = σ(W_fs s + W_fh h + b_f)
    i = σ(W_is s + W_ih h + b_i)
    g = tanh(W_gs s + W_gh h + b_g)
    c' = f ⊙ c + i ⊙ g
    o = σ(W_os s + W_oh h + b_o)
    h' = tanh(c') ⊙ o
Each layer's h' is the next layer's input; the last layer's h' feeds
y = softmax(W_yh h' + b_y).
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.models.channel_sim import SensedSeries
from src.models.label_domain import WindowConfig, build_windows, step_loss_grad, step_losses
from src.models.nn_core import ParamStore, glorot_uniform, sigmoid, softmax, tanh_act
from src.models.training import TrainingConfig, TrainingResult, fit_network
from src.utils.constants import FORGET_BIAS_INIT

logger = logging.getLogger(__name__)

ARCH = "lstm"
GATES = ("f", "i", "g", "o")
LAYER_PARAM_NAMES = tuple(
    [f"W_{gate}s" for gate in GATES] + [f"W_{gate}h" for gate in GATES] + [f"b_{gate}" for gate in GATES]
)

# One layer's parameters keyed by LAYER_PARAM_NAMES
LstmLayerParams = Mapping[str, np.ndarray]
# ParamStore holding "layer<k>.<name>" for every layer plus W_yh, b_y
LstmStackParams = ParamStore


@dataclass
class LstmState:
    """Per-layer hidden and cell states, each (m,) or (B, m)."""
    h: List[np.ndarray]
    c: List[np.ndarray]

    @property
    def depth(self) -> int:
        return len(self.h)


def _layer_key(layer: int, name: str) -> str:
    return f"layer{layer + 1}.{name}"


def init_lstm_params(
    l_I: int, l_C: int, hidden_size: int, depth: int, rng: np.random.Generator
) -> LstmStackParams:
    """
    Glorot-initialized LSTM stack; biases zero except the forget gate (1.0).

    Returns:
        ParamStore with per-layer weights and the classifier W_yh, b_y
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    m = hidden_size
    params = ParamStore(
        meta={"arch": ARCH, "depth": int(depth), "hidden_size": int(m), "l_I": int(l_I), "l_C": int(l_C)}
    )
    for layer in range(depth):
        input_dim = l_I if layer == 0 else m
        for gate in GATES:
            params.add(_layer_key(layer, f"W_{gate}s"), glorot_uniform(m, input_dim, rng))
        for gate in GATES:
            params.add(_layer_key(layer, f"W_{gate}h"), glorot_uniform(m, m, rng))
        for gate in GATES:
            bias = np.full(m, FORGET_BIAS_INIT) if gate == "f" else np.zeros(m)
            params.add(_layer_key(layer, f"b_{gate}"), bias)
    params.add("W_yh", glorot_uniform(2 ** l_C, m, rng))
    params.add("b_y", np.zeros(2 ** l_C))
    return params


def stack_depth(params: LstmStackParams) -> int:
    depth = 0
    while _layer_key(depth, "W_fs") in params:
        depth += 1
    if depth == 0:
        raise ValueError("LSTM parameters contain no layers")
    return depth


def layer_params(params: LstmStackParams, layer: int) -> Dict[str, np.ndarray]:
    """Views of one layer's arrays keyed by their short names."""
    return {name: params[_layer_key(layer, name)] for name in LAYER_PARAM_NAMES}


def layer_grads(params: LstmStackParams, layer: int) -> Dict[str, np.ndarray]:
    return {name: params.grad(_layer_key(layer, name)) for name in LAYER_PARAM_NAMES}


def check_lstm_params(params: LstmStackParams) -> Tuple[int, int, int, int]:
    """
    Verify dimension consistency across the stack.

    Returns:
        Tuple of (depth, l_I, m, l_O)
    """
    depth = stack_depth(params)
    m, l_I = params[_layer_key(0, "W_fs")].shape
    for layer in range(depth):
        input_dim = l_I if layer == 0 else m
        for gate in GATES:
            expected = {
                f"W_{gate}s": (m, input_dim),
                f"W_{gate}h": (m, m),
                f"b_{gate}": (m,),
            }
            for name, shape in expected.items():
                key = _layer_key(layer, name)
                if key not in params:
                    raise ValueError(f"LSTM parameters missing: {key}")
                if params[key].shape != shape:
                    raise ValueError(f"{key} has shape {params[key].shape}, expected {shape}")
    l_O = params["W_yh"].shape[0]
    if params["W_yh"].shape != (l_O, m) or params["b_y"].shape != (l_O,):
        raise ValueError(f"classifier shapes do not match hidden size {m}")
    if l_O & (l_O - 1):
        raise ValueError(f"output size {l_O} is not a power of two")
    return depth, l_I, m, l_O


def _cell_forward(layer: LstmLayerParams, h_prev: np.ndarray, c_prev: np.ndarray, x: np.ndarray):
    f = sigmoid(x @ layer["W_fs"].T + h_prev @ layer["W_fh"].T + layer["b_f"])
    i = sigmoid(x @ layer["W_is"].T + h_prev @ layer["W_ih"].T + layer["b_i"])
    g = tanh_act(x @ layer["W_gs"].T + h_prev @ layer["W_gh"].T + layer["b_g"])
    c = f * c_prev + i * g
    o = sigmoid(x @ layer["W_os"].T + h_prev @ layer["W_oh"].T + layer["b_o"])
    tanh_c = np.tanh(c)
    h = tanh_c * o
    return h, c, (x, h_prev, c_prev, f, i, g, o, tanh_c)


def _cell_backward(
    layer: LstmLayerParams,
    grads: Dict[str, np.ndarray],
    cache,
    dh: np.ndarray,
    dc_next: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accumulate one cell's parameter gradients; return (dx, dh_prev, dc_prev)."""
    x, h_prev, c_prev, f, i, g, o, tanh_c = cache
    do = dh * tanh_c
    dc = dc_next + dh * o * (1.0 - tanh_c**2)
    pre = {
        "f": dc * c_prev * f * (1.0 - f),
        "i": dc * g * i * (1.0 - i),
        "g": dc * i * (1.0 - g**2),
        "o": do * o * (1.0 - o),
    }
    dx = np.zeros_like(x)
    dh_prev = np.zeros_like(h_prev)
    for gate, da in pre.items():
        grads[f"W_{gate}s"] += da.T @ x
        grads[f"W_{gate}h"] += da.T @ h_prev
        grads[f"b_{gate}"] += da.sum(axis=0)
        dx += da @ layer[f"W_{gate}s"]
        dh_prev += da @ layer[f"W_{gate}h"]
    return dx, dh_prev, dc * f


def lstm_cell_step(
    layer: LstmLayerParams, h_prev: np.ndarray, c_prev: np.ndarray, window: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One LSTM cell update.

    Args:
        layer: One layer's parameters
        h_prev: Previous hidden state (m,) or (B, m)
        c_prev: Previous cell state, same shape as h_prev
        window: Layer input (input_dim,) or (B, input_dim)

    Returns:
        Tuple of (h, c)
    """
    x = np.asarray(window, dtype=float)
    m, input_dim = layer["W_fs"].shape
    if x.shape[-1] != input_dim:
        raise ValueError(f"layer input has size {x.shape[-1]}, expected {input_dim}")
    if h_prev.shape[-1] != m or c_prev.shape != h_prev.shape:
        raise ValueError(f"states must have size {m} and matching shapes")
    h, c, _ = _cell_forward(layer, h_prev, c_prev, x)
    return h, c


def zero_state(depth: int, hidden_size: int, batch: Optional[int] = None) -> LstmState:
    shape = (hidden_size,) if batch is None else (batch, hidden_size)
    return LstmState(h=[np.zeros(shape) for _ in range(depth)], c=[np.zeros(shape) for _ in range(depth)])


def lstm_stack_step(
    params: LstmStackParams, state: LstmState, window: np.ndarray
) -> Tuple[LstmState, np.ndarray]:
    """
    Feed one input window through every layer and classify the top hidden state.

    Returns:
        Tuple of (new state, likelihood vector y)
    """
    depth = stack_depth(params)
    if state.depth != depth:
        raise ValueError(f"state has {state.depth} layers, network has {depth}")
    x = np.asarray(window, dtype=float)
    new_h, new_c = [], []
    for layer in range(depth):
        h, c = lstm_cell_step(layer_params(params, layer), state.h[layer], state.c[layer], x)
        new_h.append(h)
        new_c.append(c)
        x = h
    y = softmax(x @ params["W_yh"].T + params["b_y"])
    return LstmState(h=new_h, c=new_c), y


def lstm_forward(
    params: LstmStackParams, initial_state: Optional[LstmState], inputs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run the stack over a sequence of windows.

    Args:
        inputs: (T, l_I) or (T, B, l_I) windows

    Returns:
        Tuple of (top-layer hidden states H, outputs Y), leading dimension T
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim < 2 or inputs.shape[0] == 0:
        raise ValueError("lstm_forward requires a non-empty sequence of windows")
    depth, _, m, l_O = check_lstm_params(params)
    batch = inputs.shape[1] if inputs.ndim == 3 else None
    state = initial_state or zero_state(depth, m, batch)

    H = np.empty(inputs.shape[:-1] + (m,))
    Y = np.empty(inputs.shape[:-1] + (l_O,))
    for t in range(inputs.shape[0]):
        state, Y[t] = lstm_stack_step(params, state, inputs[t])
        H[t] = state.h[-1]
    return H, Y


def lstm_sequence_grads(
    params: LstmStackParams,
    inputs: np.ndarray,
    labels: np.ndarray,
    initial_state: Optional[LstmState] = None,
    scale: float = 1.0,
) -> float:
    """
    Summed step loss of a sequence and its BPTT gradients through every layer.

    Gradients of scale × (summed loss) are accumulated into params' buffers.

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
    depth, _, m, l_O = check_lstm_params(params)
    layers = [layer_params(params, layer) for layer in range(depth)]

    if initial_state is None:
        state = zero_state(depth, m, B)
    else:
        state = LstmState(
            h=[np.broadcast_to(h, (B, m)) for h in initial_state.h],
            c=[np.broadcast_to(c, (B, m)) for c in initial_state.c],
        )

    h, c = list(state.h), list(state.c)
    caches = [[None] * T for _ in range(depth)]
    top = np.empty((T, B, m))
    for t in range(T):
        x = inputs[t]
        for layer in range(depth):
            h[layer], c[layer], caches[layer][t] = _cell_forward(layers[layer], h[layer], c[layer], x)
            x = h[layer]
        top[t] = x
    Y = softmax(top @ params["W_yh"].T + params["b_y"])

    flat_Y = Y.reshape(T * B, l_O)
    flat_labels = labels.reshape(T * B)
    loss = float(step_losses(flat_Y, flat_labels).sum())

    dY = (step_loss_grad(flat_Y, flat_labels) * scale).reshape(T, B, l_O)
    dZ = Y * (dY - np.sum(dY * Y, axis=-1, keepdims=True))
    params.grad("W_yh")[...] += np.einsum("tbk,tbm->km", dZ, top)
    params.grad("b_y")[...] += dZ.sum(axis=(0, 1))
    d_top = dZ @ params["W_yh"]

    grads = [layer_grads(params, layer) for layer in range(depth)]
    dh_next = [np.zeros((B, m)) for _ in range(depth)]
    dc_next = [np.zeros((B, m)) for _ in range(depth)]
    for t in reversed(range(T)):
        d_in = d_top[t]
        for layer in reversed(range(depth)):
            dx, dh_next[layer], dc_next[layer] = _cell_backward(
                layers[layer], grads[layer], caches[layer][t], d_in + dh_next[layer], dc_next[layer]
            )
            d_in = dx
    return loss


class LstmNetwork:
    """Single or multi-layer LSTM detector network."""
    arch = ARCH

    def __init__(self, params: LstmStackParams):
        check_lstm_params(params)
        self.params = params

    @classmethod
    def initialize(
        cls, window: WindowConfig, hidden_size: int, depth: int, rng: np.random.Generator
    ) -> "LstmNetwork":
        return cls(init_lstm_params(window.l_I, window.l_C, hidden_size, depth, rng))

    @property
    def depth(self) -> int:
        return stack_depth(self.params)

    @property
    def hidden_size(self) -> int:
        return self.params[_layer_key(0, "W_fh")].shape[0]

    def initial_state(self, batch: Optional[int] = None) -> LstmState:
        return zero_state(self.depth, self.hidden_size, batch)

    def step(self, state: LstmState, window: np.ndarray) -> Tuple[LstmState, np.ndarray]:
        return lstm_stack_step(self.params, state, window)

    def forward(self, inputs: np.ndarray, state: Optional[LstmState] = None):
        return lstm_forward(self.params, state, inputs)

    def sequence_loss(self, inputs: np.ndarray, labels: np.ndarray) -> float:
        labels = np.asarray(labels, dtype=np.int64)
        _, Y = lstm_forward(self.params, None, inputs)
        return float(step_losses(Y.reshape(-1, Y.shape[-1]), labels.reshape(-1)).sum())

    def sequence_loss_and_grads(self, inputs: np.ndarray, labels: np.ndarray, scale: float = 1.0) -> float:
        return lstm_sequence_grads(self.params, inputs, labels, scale=scale)


def lstm_train(
    data: SensedSeries,
    window: WindowConfig,
    depth: int,
    hyperparams: TrainingConfig,
    rng: np.random.Generator,
    shuffle_rng: Optional[np.random.Generator] = None,
) -> TrainingResult:
    """
    Train an LSTM detector of the given depth on a sensed series.

    Args:
        data: Training series (normally attack-free)
        window: Window configuration
        depth: Number of stacked LSTM layers
        hyperparams: Training schedule and hidden size
        rng: Generator for weight initialization
        shuffle_rng: Generator for sequence shuffling (defaults to rng)

    Returns:
        TrainingResult with the trained LstmNetwork and loss history
    """
    hyperparams.validate()
    inputs, labels, _ = build_windows(data.bits, window)
    network = LstmNetwork.initialize(window, hyperparams.hidden_size, depth, rng)
    history = fit_network(network, inputs, labels, hyperparams, shuffle_rng or rng)
    return TrainingResult(network=network, loss_history=history)
