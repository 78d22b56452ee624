"""
Input validation functions for the PUE attack detector toolkit
"""
import math
from typing import Optional, Sequence, Tuple

from src.utils.constants import MAX_LABEL_BITS, WEIGHT_SUM_TOLERANCE


def validate_mixture(
    weights: Sequence[float],
    shapes: Sequence[int],
    scales: Sequence[float],
    tolerance: float = WEIGHT_SUM_TOLERANCE,
) -> Tuple[bool, Optional[str]]:
    """
    Validate Hyper-Erlang mixture parameters.

    Args:
        weights: Branch probabilities
        shapes: Integer Erlang shapes
        scales: Erlang scales in seconds
        tolerance: Allowed deviation of sum(weights) from 1

    Returns:
        Tuple of (is_valid, error_message)
    """
    n = len(weights)
    if n < 1:
        return False, "weights must contain at least one branch"

    if len(shapes) != n or len(scales) != n:
        return False, (
            f"weights, shapes and scales must have equal length, "
            f"got {n}, {len(shapes)}, {len(scales)}"
        )

    if any((not math.isfinite(w)) or w < 0 for w in weights):
        return False, "weights must be non-negative"

    total = math.fsum(weights)
    if abs(total - 1.0) > tolerance:
        return False, f"weights must sum to 1, got {total:.12g}"

    for k in shapes:
        if isinstance(k, bool) or int(k) != k or k < 1:
            return False, f"shapes must be integers >= 1, got {k}"

    if any((not math.isfinite(s)) or s <= 0 for s in scales):
        return False, "scales must be positive"

    return True, None


def validate_sensing(t_ob: float, t_re: float) -> Tuple[bool, Optional[str]]:
    """
    Validate intermittent sensing timings.

    Args:
        t_ob: Observation time in seconds
        t_re: Revisit time in seconds

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not (math.isfinite(t_ob) and t_ob > 0):
        return False, f"t_ob must be positive, got {t_ob}"

    if not (math.isfinite(t_re) and t_re >= 0):
        return False, f"t_re must be non-negative, got {t_re}"

    return True, None


def validate_probability(value: float, name: str = "Probability") -> Tuple[bool, Optional[str]]:
    """
    Validate a probability in [0, 1].

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not (0.0 <= value <= 1.0):
        return False, f"{name} must be between 0 and 1, got {value}"

    return True, None


def validate_window(l_I: int, l_C: int, stride: int) -> Tuple[bool, Optional[str]]:
    """
    Validate detector window lengths.

    Args:
        l_I: Input window length in slots
        l_C: Comparison window length in slots
        stride: Slots between consecutive prediction steps

    Returns:
        Tuple of (is_valid, error_message)
    """
    if int(l_I) != l_I or l_I < 1:
        return False, f"l_I must be an integer >= 1, got {l_I}"

    if int(l_C) != l_C or not (1 <= l_C <= MAX_LABEL_BITS):
        return False, f"l_C must be an integer between 1 and {MAX_LABEL_BITS}, got {l_C}"

    if int(stride) != stride or stride < 1:
        return False, f"stride must be an integer >= 1, got {stride}"

    return True, None


def validate_positive_int(value: int, name: str) -> Tuple[bool, Optional[str]]:
    """Validate a strictly positive integer count."""
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        return False, f"{name} must be a positive integer, got {value!r}"

    return True, None


def validate_positive(value: float, name: str) -> Tuple[bool, Optional[str]]:
    """Validate a strictly positive real."""
    if not (math.isfinite(value) and value > 0):
        return False, f"{name} must be positive, got {value}"

    return True, None
