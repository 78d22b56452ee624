"""
PU channel activity simulation under intermittent spectrum sensing.

Generates alternating ON/OFF channel occupancy from Hyper-Erlang sojourn
models, discretizes it with the observe/revisit sensing pattern, and overlays
short impulse PUE attacks on individual sensing slots.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.models.hyper_erlang import (
    HyperErlangParams,
    expected_sojourn,
    make_params,
    sample_sojourns,
)
from src.utils.constants import (
    ATTACK_PROBABILITY,
    COMPLEX_OFF_SCALES,
    COMPLEX_OFF_SHAPES,
    COMPLEX_OFF_WEIGHTS,
    COMPLEX_ON_SCALES,
    COMPLEX_ON_SHAPES,
    COMPLEX_ON_WEIGHTS,
    COMPLEX_REVISIT_TIME,
    OBSERVATION_TIME,
    SIMPLE_OFF_SCALES,
    SIMPLE_OFF_SHAPES,
    SIMPLE_OFF_WEIGHTS,
    SIMPLE_ON_SCALES,
    SIMPLE_ON_SHAPES,
    SIMPLE_ON_WEIGHTS,
    SIMPLE_REVISIT_TIME,
    STATE_NAMES,
    STATE_OFF,
    STATE_ON,
)
from src.utils.validators import validate_probability, validate_sensing

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OnOffModel:
    """Two-state PU activity model: ON and OFF sojourn distributions."""
    on: HyperErlangParams
    off: HyperErlangParams

    def validate(self) -> "OnOffModel":
        try:
            self.on.validate()
        except ValueError as e:
            raise ValueError(f"on: {e}") from e
        try:
            self.off.validate()
        except ValueError as e:
            raise ValueError(f"off: {e}") from e
        return self

    def to_dict(self) -> dict:
        return {"on": self.on.to_dict(), "off": self.off.to_dict()}


@dataclass(frozen=True)
class SensingConfig:
    """Intermittent sensing pattern: observe for t_ob, idle for t_re."""
    t_ob: float
    t_re: float

    @property
    def slot_period(self) -> float:
        return self.t_ob + self.t_re

    def validate(self) -> "SensingConfig":
        is_valid, message = validate_sensing(self.t_ob, self.t_re)
        if not is_valid:
            raise ValueError(f"Invalid sensing configuration: {message}")
        return self


@dataclass(frozen=True)
class AttackConfig:
    """Short impulse PUE attack: fires independently in each slot."""
    impulse_probability: float

    def validate(self) -> "AttackConfig":
        is_valid, message = validate_probability(self.impulse_probability, "impulse_probability")
        if not is_valid:
            raise ValueError(f"Invalid attack configuration: {message}")
        return self


@dataclass
class ContinuousTrace:
    """Ground-truth channel history as alternating (state, duration) segments."""
    states: np.ndarray
    durations: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int8)
        self.durations = np.asarray(self.durations, dtype=float)
        if self.states.shape != self.durations.shape or self.states.ndim != 1:
            raise ValueError("states and durations must be 1-D arrays of equal length")

    def __len__(self) -> int:
        return int(self.states.size)

    @property
    def ends(self) -> np.ndarray:
        return np.cumsum(self.durations)

    @property
    def starts(self) -> np.ndarray:
        ends = self.ends
        return ends - self.durations

    @property
    def total_duration(self) -> float:
        return float(self.durations.sum())

    @property
    def segments(self) -> List[Tuple[str, float]]:
        return [(STATE_NAMES[int(s)], float(d)) for s, d in zip(self.states, self.durations)]

    def state_at(self, t: float) -> int:
        """State of the channel at time t (segments are half-open [start, end))."""
        if t < 0 or t >= self.total_duration:
            raise ValueError(f"t={t} lies outside the trace [0, {self.total_duration})")
        idx = int(np.searchsorted(self.ends, t, side="right"))
        return int(self.states[idx])

    def validate(self) -> "ContinuousTrace":
        if len(self) == 0:
            raise ValueError("trace is empty")
        if np.any(self.durations <= 0):
            raise ValueError("every segment duration must be positive")
        if np.any(self.states[1:] == self.states[:-1]):
            raise ValueError("segment states must strictly alternate")
        return self


@dataclass
class SensedSeries:
    """
    Binary observation sequence from intermittent sensing.

    bits are what the secondary user observes (1 = busy). attack_mask records
    every slot the attacker transmitted in. pu_bits is the attack-free
    observation of the same slots, so that bits == pu_bits | attack_mask.
    """
    bits: np.ndarray
    attack_mask: np.ndarray
    slot_period: float
    pu_bits: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int8)
        self.attack_mask = np.asarray(self.attack_mask, dtype=np.int8)
        if self.bits.shape != self.attack_mask.shape:
            raise ValueError("bits and attack_mask must have equal length")
        if self.pu_bits is None:
            # without ground truth, attacker slots are assumed to hide an idle PU
            self.pu_bits = np.where(self.attack_mask == 1, 0, self.bits).astype(np.int8)
        else:
            self.pu_bits = np.asarray(self.pu_bits, dtype=np.int8)
        self.validate()

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def observable_attacks(self) -> np.ndarray:
        """Slots where the attacker fired while the PU was idle."""
        return ((self.attack_mask == 1) & (self.pu_bits == 0)).astype(np.int8)

    def validate(self) -> "SensedSeries":
        if self.bits.shape != self.attack_mask.shape or self.bits.shape != self.pu_bits.shape:
            raise ValueError("bits, attack_mask and pu_bits must have equal length")
        for name, arr in (("bits", self.bits), ("attack_mask", self.attack_mask), ("pu_bits", self.pu_bits)):
            if np.any((arr != 0) & (arr != 1)):
                raise ValueError(f"{name} must contain only 0 and 1")
        if np.any((self.attack_mask == 1) & (self.bits != 1)):
            raise ValueError("bits must be 1 wherever attack_mask is 1")
        if np.any(self.bits != (self.pu_bits | self.attack_mask)):
            raise ValueError("bits must equal pu_bits OR attack_mask")
        if not self.slot_period > 0:
            raise ValueError(f"slot_period must be positive, got {self.slot_period}")
        return self


def generate_trace(
    model: OnOffModel,
    horizon: float,
    initial_state: int = STATE_OFF,
    rng: Optional[np.random.Generator] = None,
) -> ContinuousTrace:
    """
    Realize the alternating ON/OFF renewal process up to a time horizon.

    Args:
        model: ON/OFF sojourn model
        horizon: Minimum covered duration in seconds
        initial_state: STATE_OFF or STATE_ON for the first segment
        rng: Seeded numpy generator

    Returns:
        ContinuousTrace whose total duration is >= horizon
    """
    model.validate()
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if initial_state not in (STATE_OFF, STATE_ON):
        raise ValueError(f"initial_state must be {STATE_OFF} (OFF) or {STATE_ON} (ON)")
    if rng is None:
        raise ValueError("generate_trace requires a seeded generator")

    first = model.on if initial_state == STATE_ON else model.off
    second = model.off if initial_state == STATE_ON else model.on
    cycle = expected_sojourn(first) + expected_sojourn(second)

    chunks: List[np.ndarray] = []
    covered = 0.0
    while covered < horizon:
        # draw roughly the remaining number of ON/OFF pairs in one batch
        pairs = max(1, int(math.ceil((horizon - covered) / cycle * 1.1)) + 1)
        block = np.empty(2 * pairs)
        block[0::2] = sample_sojourns(first, rng, pairs)
        block[1::2] = sample_sojourns(second, rng, pairs)
        chunks.append(block)
        covered += float(block.sum())

    durations = np.concatenate(chunks)
    cut = int(np.searchsorted(np.cumsum(durations), horizon, side="left")) + 1
    durations = durations[:cut]
    states = np.empty(cut, dtype=np.int8)
    states[0::2] = initial_state
    states[1::2] = 1 - initial_state

    trace = ContinuousTrace(states=states, durations=durations)
    logger.debug(f"Generated trace: {cut} segments covering {trace.total_duration:.2f}s")
    return trace


def observe_channel(trace: ContinuousTrace, sensing: SensingConfig, n_slots: Optional[int] = None) -> np.ndarray:
    """
    Attack-free busy/idle observation of each sensing slot.

    Slot k observes [k·P, k·P + t_ob] with P = t_ob + t_re; the slot is busy
    if the PU is ON at any point with positive overlap inside the window.

    Returns:
        int8 array of 0/1 observations
    """
    sensing.validate()
    trace.validate()
    period = sensing.slot_period
    available = int(math.floor((trace.total_duration - sensing.t_ob) / period)) + 1
    if trace.total_duration < sensing.t_ob or available < 1:
        raise ValueError("trace does not cover a single sensing window")
    if n_slots is None:
        n_slots = available
    elif n_slots > available:
        raise ValueError(f"trace covers {available} slots, {n_slots} requested")

    ends = trace.ends
    window_start = np.arange(n_slots) * period
    window_end = window_start + sensing.t_ob
    first_seg = np.searchsorted(ends, window_start, side="right")
    last_seg = np.searchsorted(ends, window_end, side="left")
    last_idx = len(trace) - 1
    first_seg = np.minimum(first_seg, last_idx)
    last_seg = np.minimum(last_seg, last_idx)

    # alternating states: spanning two or more segments always touches ON
    busy = (trace.states[first_seg] == STATE_ON) | (last_seg > first_seg)
    return busy.astype(np.int8)


def sense(
    trace: ContinuousTrace,
    sensing: SensingConfig,
    attack: AttackConfig,
    rng: np.random.Generator,
    n_slots: Optional[int] = None,
) -> SensedSeries:
    """
    Discretize a trace by intermittent sensing and overlay impulse attacks.

    The attacker fires in each slot independently with impulse_probability,
    regardless of the PU state; the observed bit is 1 if the PU is ON in the
    window or the attacker fired.

    Args:
        trace: Ground-truth channel history
        sensing: Observation/revisit timings
        attack: Impulse attack configuration
        rng: Seeded numpy generator used for attacker decisions
        n_slots: Optional number of slots (default: all slots inside the trace)

    Returns:
        SensedSeries
    """
    if len(trace) == 0:
        raise ValueError("cannot sense an empty trace")
    attack.validate()

    pu_bits = observe_channel(trace, sensing, n_slots)
    fires = rng.random(pu_bits.size) < attack.impulse_probability
    attack_mask = fires.astype(np.int8)
    bits = (pu_bits | attack_mask).astype(np.int8)

    return SensedSeries(
        bits=bits,
        attack_mask=attack_mask,
        slot_period=sensing.slot_period,
        pu_bits=pu_bits,
    )


def simulate_series(
    model: OnOffModel,
    sensing: SensingConfig,
    attack: AttackConfig,
    n_slots: int,
    trace_rng: np.random.Generator,
    attack_rng: np.random.Generator,
    initial_state: int = STATE_OFF,
) -> Tuple[ContinuousTrace, SensedSeries]:
    """
    Generate a trace long enough for n_slots and sense it.

    Returns:
        Tuple of (trace, sensed series)
    """
    if n_slots < 1:
        raise ValueError(f"n_slots must be >= 1, got {n_slots}")
    sensing.validate()
    horizon = n_slots * sensing.slot_period + sensing.t_ob
    trace = generate_trace(model, horizon, initial_state, trace_rng)
    series = sense(trace, sensing, attack, attack_rng, n_slots=n_slots)
    logger.info(
        f"Simulated {n_slots} slots ({len(trace)} segments), "
        f"duty cycle {duty_cycle(series):.3f}, attack density {series.attack_mask.mean():.3f}"
    )
    return trace, series


def duty_cycle(series: SensedSeries) -> float:
    """Fraction of slots observed busy."""
    if len(series) == 0:
        return 0.0
    return float(series.bits.mean())


SIMPLE_MODEL = OnOffModel(
    on=make_params(SIMPLE_ON_WEIGHTS, SIMPLE_ON_SHAPES, SIMPLE_ON_SCALES),
    off=make_params(SIMPLE_OFF_WEIGHTS, SIMPLE_OFF_SHAPES, SIMPLE_OFF_SCALES),
)
COMPLEX_MODEL = OnOffModel(
    on=make_params(COMPLEX_ON_WEIGHTS, COMPLEX_ON_SHAPES, COMPLEX_ON_SCALES),
    off=make_params(COMPLEX_OFF_WEIGHTS, COMPLEX_OFF_SHAPES, COMPLEX_OFF_SCALES),
)
SIMPLE_SENSING = SensingConfig(t_ob=OBSERVATION_TIME, t_re=SIMPLE_REVISIT_TIME)
COMPLEX_SENSING = SensingConfig(t_ob=OBSERVATION_TIME, t_re=COMPLEX_REVISIT_TIME)
DEFAULT_ATTACK = AttackConfig(impulse_probability=ATTACK_PROBABILITY)
