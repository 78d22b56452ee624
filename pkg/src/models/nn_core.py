"""
Dense numerical kernel shared by the recurrent detectors.

Activations, named parameter storage with gradient buffers, Glorot
initialization, the Adam optimizer and a central finite-difference gradient
checker. All arithmetic is float64.
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import expit
from scipy.special import softmax as _softmax

from src.utils.constants import (
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_EPSILON,
    DEFAULT_LEARNING_RATE,
)

logger = logging.getLogger(__name__)

DTYPE = np.float64


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function 1 / (1 + e^-x), saturation-safe."""
    return expit(np.asarray(x, dtype=DTYPE))


def tanh_act(x: np.ndarray) -> np.ndarray:
    """Hyperbolic tangent."""
    return np.tanh(np.asarray(x, dtype=DTYPE))


def softmax(v: np.ndarray) -> np.ndarray:
    """Softmax over the last axis (max-shifted)."""
    return _softmax(np.asarray(v, dtype=DTYPE), axis=-1)


def glorot_uniform(fan_out: int, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """
    Uniform weights in [-r, r] with r = sqrt(6 / (fan_in + fan_out)).

    Returns:
        (fan_out, fan_in) float64 matrix
    """
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_out, fan_in)).astype(DTYPE)


class ParamStore:
    """
    Ordered named parameters with a parallel gradient buffer.

    meta carries architecture header fields (arch, sizes) that travel with
    the parameters into checkpoints.
    """

    def __init__(self, meta: Optional[Dict] = None):
        self._params: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self._grads: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self.meta: Dict = dict(meta or {})

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self._params:
            raise ValueError(f"Parameter '{name}' already exists")
        array = np.array(value, dtype=DTYPE)
        if not np.all(np.isfinite(array)):
            raise ValueError(f"Parameter '{name}' has non-finite entries")
        self._params[name] = array
        self._grads[name] = np.zeros_like(array)
        return array

    def __getitem__(self, name: str) -> np.ndarray:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    @property
    def names(self) -> List[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def grads(self):
        return self._grads.items()

    def set(self, name: str, value: np.ndarray):
        """Overwrite a parameter in place, keeping its shape."""
        value = np.asarray(value, dtype=DTYPE)
        if value.shape != self._params[name].shape:
            raise ValueError(
                f"Shape mismatch for '{name}': expected {self._params[name].shape}, got {value.shape}"
            )
        self._params[name][...] = value

    def zero_grad(self):
        for g in self._grads.values():
            g.fill(0.0)

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self._params.values()))

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self._grads.values())))

    def clip_grad_norm(self, max_norm: float) -> float:
        """
        Rescale all gradients so their global L2 norm is at most max_norm.

        Returns:
            The norm before clipping
        """
        norm = self.grad_norm()
        if max_norm > 0 and norm > max_norm:
            scale = max_norm / norm
            for g in self._grads.values():
                g *= scale
        return norm

    def copy(self) -> "ParamStore":
        clone = ParamStore(meta=self.meta)
        for name, value in self._params.items():
            clone.add(name, value.copy())
        return clone

    def __repr__(self) -> str:
        return f"ParamStore({len(self)} tensors, {self.num_parameters} values, meta={self.meta})"


@dataclass
class AdamState:
    """Adaptive moment estimation state and hyperparameters."""
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ParamStore, **hyperparams) -> "AdamState":
        state = cls(**hyperparams)
        for name, value in params.items():
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        return state


def adam_step(params: ParamStore, state: AdamState) -> ParamStore:
    """
    Apply one Adam update in place, then zero the gradients.

    Args:
        params: Parameters with populated gradients
        state: Optimizer state (moment buffers created on first use)

    Returns:
        The updated ParamStore

    Raises:
        ValueError: If a moment buffer shape disagrees with its parameter
    """
    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1**t
    bias2 = 1.0 - state.beta2**t

    for name, value in params.items():
        grad = params.grad(name)
        if grad.shape != value.shape:
            raise ValueError(f"Gradient shape {grad.shape} does not match parameter '{name}' {value.shape}")
        m = state.m.setdefault(name, np.zeros_like(value))
        v = state.v.setdefault(name, np.zeros_like(value))
        if m.shape != value.shape or v.shape != value.shape:
            raise ValueError(f"Moment buffer shape does not match parameter '{name}' {value.shape}")

        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        value -= state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + state.epsilon)

    params.zero_grad()
    return params


def finite_difference_check(
    loss_fn: Callable[[], float],
    params: ParamStore,
    perturbation: float = 1e-5,
    num_coordinates: Optional[int] = 100,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Compare analytic gradients with central differences.

    The analytic gradient is read from the store's gradient buffers, which the
    caller must have populated for the current parameter values. loss_fn must
    recompute the loss from the current parameters without touching gradients.

    Args:
        loss_fn: Deterministic zero-argument loss
        params: Parameters with populated gradients
        perturbation: Central difference step ε > 0
        num_coordinates: Number of sampled coordinates (None = all)
        rng: Generator used to sample coordinates

    Returns:
        Worst relative error |a − n| / max(|a|, |n|, 1e-8)
    """
    if not perturbation > 0:
        raise ValueError(f"perturbation must be positive, got {perturbation}")

    coords: List[Tuple[str, int]] = [
        (name, i) for name, value in params.items() for i in range(value.size)
    ]
    if num_coordinates is not None and num_coordinates < len(coords):
        rng = rng or np.random.default_rng(0)
        picked = rng.choice(len(coords), size=num_coordinates, replace=False)
        coords = [coords[i] for i in sorted(picked)]

    analytic = {name: params.grad(name).copy() for name in params}
    worst = 0.0
    for name, i in coords:
        flat = params[name].reshape(-1)
        original = flat[i]
        flat[i] = original + perturbation
        loss_plus = loss_fn()
        flat[i] = original - perturbation
        loss_minus = loss_fn()
        flat[i] = original

        numeric = (loss_plus - loss_minus) / (2.0 * perturbation)
        a = analytic[name].reshape(-1)[i]
        error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        if error > worst:
            worst = error
    logger.debug(f"Gradient check over {len(coords)} coordinates: worst relative error {worst:.3e}")
    return float(worst)
