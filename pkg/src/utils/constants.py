"""
Channel model and detector constants for the PUE attack detector toolkit.

This module contains the reference PU activity parameter sets, the sensing
timings used with them, and the defaults shared by the detectors.
"""

# Channel states
STATE_OFF = 0
STATE_ON = 1
STATE_NAMES = {STATE_OFF: "OFF", STATE_ON: "ON"}

# Simple PU activity model (2-branch Hyper-Erlang)
SIMPLE_ON_WEIGHTS = [0.5, 0.5]
SIMPLE_ON_SHAPES = [1, 1]
SIMPLE_ON_SCALES = [0.5, 1.5]  # seconds
SIMPLE_OFF_WEIGHTS = [0.5, 0.5]
SIMPLE_OFF_SHAPES = [2, 4]
SIMPLE_OFF_SCALES = [2.0, 1.0]  # seconds
SIMPLE_EXPECTED_ON = 1.0    # seconds
SIMPLE_EXPECTED_OFF = 4.0   # seconds

# Complex PU activity model (10-branch Hyper-Erlang)
COMPLEX_ON_WEIGHTS = [0.2, 0.05, 0.1, 0.1, 0.2, 0.05, 0.1, 0.03, 0.07, 0.1]
COMPLEX_ON_SHAPES = [2, 1, 2, 2, 1, 3, 10, 4, 3, 6]
COMPLEX_ON_SCALES = [0.5, 1.2, 0.3, 0.6, 2.0, 0.8, 1.2, 1.8, 2.0, 2.5]
COMPLEX_OFF_WEIGHTS = [0.1, 0.15, 0.05, 0.15, 0.12, 0.13, 0.08, 0.05, 0.05, 0.12]
COMPLEX_OFF_SHAPES = [4, 2, 3, 5, 15, 4, 3, 6, 5, 1]
COMPLEX_OFF_SCALES = [2.5, 1.3, 4.0, 3.0, 1.0, 1.5, 1.0, 0.8, 1.8, 4.0]
COMPLEX_EXPECTED_ON = 4.296  # seconds
COMPLEX_EXPECTED_OFF = 8.23  # seconds

# Intermittent sensing timings
OBSERVATION_TIME = 0.01          # T_ob, seconds
SIMPLE_REVISIT_TIME = 0.24       # T_re, seconds (0.25 s slot period)
COMPLEX_REVISIT_TIME = 0.99      # T_re, seconds (1.0 s slot period)

# Short impulse PUE attack
ATTACK_PROBABILITY = 0.3  # per sensing slot

# Tolerances
WEIGHT_SUM_TOLERANCE = 1e-9
MAX_LABEL_BITS = 16

# Window defaults
DEFAULT_INPUT_WINDOW = 4       # l_I
DEFAULT_COMPARISON_WINDOW = 2  # l_C

# Network and training defaults
DEFAULT_HIDDEN_SIZE = 32
DEFAULT_EPOCHS = 20
DEFAULT_BPTT_LENGTH = 50
DEFAULT_BATCH_SIZE = 16
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8
DEFAULT_GRAD_CLIP = 5.0
FORGET_BIAS_INIT = 1.0

# Longer schedule for the three-layer stack (settings.yaml `schedules.lstm3`)
DEEP_STACK_SCHEDULE = {"epochs": 40, "bptt_length": 100, "learning_rate": 3e-3}

# Evaluation sizes (sensed slots)
DEFAULT_TRAIN_SLOTS = 100_000
DEFAULT_EVAL_SLOTS = 20_000
DEFAULT_SEED_COUNT = 3
DEFAULT_SEED = 42

# Detector architectures: name -> (cell, depth)
DETECTOR_ARCHS = {
    "rnn": ("rnn", 1),
    "lstm1": ("lstm", 1),
    "lstm3": ("lstm", 3),
}
DETECTOR_LABELS = {
    "rnn": "Basic RNN",
    "lstm1": "Single layer LSTM",
    "lstm3": "Three layer LSTM",
}

# Published average losses (normal, contaminated); qualitative targets only
REFERENCE_LOSSES = {
    "simple": {
        "rnn": (0.0235, 0.0538),
        "lstm1": (0.0491, 0.0901),
        "lstm3": (0.0003, 0.0477),
    },
    "complex": {
        "rnn": (0.0301, 0.0549),
        "lstm1": (0.0496, 0.0872),
        "lstm3": (0.0001, 0.0478),
    },
}

# File formats
CONFIG_SCHEMA_VERSION = 1
CHECKPOINT_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1
