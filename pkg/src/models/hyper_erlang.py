"""
Hyper-Erlang sojourn time model for PU channel activity.

A Hyper-Erlang distribution is a probabilistic mixture of Erlang branches:
branch i is picked with probability w_i and the sojourn is Erlang(k_i, θ_i),
i.e. the sum of k_i exponentials with mean θ_i.
"""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.stats import gamma

from src.utils.validators import validate_mixture


@dataclass(frozen=True)
class HyperErlangParams:
    """Mixture weights, integer shapes and scales (seconds) of one sojourn distribution."""
    weights: Tuple[float, ...]
    shapes: Tuple[int, ...]
    scales: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "shapes", tuple(self.shapes))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))

    @property
    def n_branches(self) -> int:
        return len(self.weights)

    def validate(self) -> "HyperErlangParams":
        """
        Check the mixture invariants.

        Returns:
            self, for chaining

        Raises:
            ValueError: naming the violated invariant
        """
        is_valid, message = validate_mixture(self.weights, self.shapes, self.scales)
        if not is_valid:
            raise ValueError(f"Invalid Hyper-Erlang parameters: {message}")
        return self

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "shapes": [int(k) for k in self.shapes],
            "scales": list(self.scales),
        }


def expected_sojourn(params: HyperErlangParams) -> float:
    """
    Expected sojourn time E[T] = Σ w_i · k_i · θ_i.

    Args:
        params: Hyper-Erlang parameters

    Returns:
        Mean sojourn time in seconds
    """
    params.validate()
    w = np.asarray(params.weights)
    k = np.asarray(params.shapes, dtype=float)
    theta = np.asarray(params.scales)
    return float(np.sum(w * k * theta))


def sojourn_variance(params: HyperErlangParams) -> float:
    """
    Variance of the mixture: Σ w_i (k_i θ_i² + (k_i θ_i)²) − E[T]².

    Args:
        params: Hyper-Erlang parameters

    Returns:
        Variance in seconds²
    """
    mean = expected_sojourn(params)
    w = np.asarray(params.weights)
    k = np.asarray(params.shapes, dtype=float)
    theta = np.asarray(params.scales)
    second_moment = np.sum(w * (k * theta**2 + (k * theta) ** 2))
    return float(second_moment - mean**2)


def pdf(params: HyperErlangParams, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Probability density of the sojourn time.

    f(t) = Σ w_i · t^(k_i−1) e^(−t/θ_i) / (θ_i^k_i (k_i−1)!)

    Args:
        params: Hyper-Erlang parameters
        t: Time(s) in seconds, must be >= 0

    Returns:
        Density in 1/seconds (scalar for scalar input)

    Raises:
        ValueError: If any t is negative
    """
    params.validate()
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("pdf is only defined for t >= 0")

    density = np.zeros_like(t_arr)
    for w, k, theta in zip(params.weights, params.shapes, params.scales):
        density = density + w * gamma.pdf(t_arr, a=k, scale=theta)

    if density.ndim == 0:
        return float(density)
    return density


def sample_sojourn(params: HyperErlangParams, rng: np.random.Generator) -> float:
    """
    Draw one sojourn time.

    The branch is drawn from the categorical weights, then the duration is the
    sum of k_i independent exponential draws with mean θ_i.

    Args:
        params: Hyper-Erlang parameters
        rng: Seeded numpy generator

    Returns:
        Sojourn time in seconds (> 0)
    """
    params.validate()
    branch = rng.choice(params.n_branches, p=np.asarray(params.weights) / math.fsum(params.weights))
    k = int(params.shapes[branch])
    return float(rng.exponential(params.scales[branch], size=k).sum())


def sample_sojourns(params: HyperErlangParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    Draw many sojourn times with the same branch-then-sum construction.

    Args:
        params: Hyper-Erlang parameters
        rng: Seeded numpy generator
        size: Number of draws

    Returns:
        Array of sojourn times in seconds
    """
    params.validate()
    if size < 0:
        raise ValueError(f"size must be non-negative, got {size}")

    weights = np.asarray(params.weights) / math.fsum(params.weights)
    branches = rng.choice(params.n_branches, size=size, p=weights)
    draws = np.empty(size, dtype=float)
    for i, (k, theta) in enumerate(zip(params.shapes, params.scales)):
        idx = np.flatnonzero(branches == i)
        if idx.size:
            draws[idx] = rng.exponential(theta, size=(idx.size, int(k))).sum(axis=1)
    return draws


def make_params(
    weights: Sequence[float], shapes: Sequence[int], scales: Sequence[float]
) -> HyperErlangParams:
    """Build and validate a parameter set."""
    return HyperErlangParams(weights, shapes, scales).validate()
