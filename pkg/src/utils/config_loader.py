"""
Experiment configuration loading.

Experiment files are YAML documents with an explicit schema_version. Omitted
window, detector, training and evaluation fields are filled from
config/settings.yaml. Unknown keys are rejected with their dotted path.
"""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from src.models.channel_sim import AttackConfig, OnOffModel, SensingConfig
from src.models.hyper_erlang import HyperErlangParams
from src.models.label_domain import WindowConfig
from src.models.registry import DETECTOR_SPECS, DetectorSpec
from src.models.training import TrainingConfig
from src.utils.constants import (
    ATTACK_PROBABILITY,
    CONFIG_SCHEMA_VERSION,
    DEEP_STACK_SCHEDULE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_BPTT_LENGTH,
    DEFAULT_COMPARISON_WINDOW,
    DEFAULT_EPOCHS,
    DEFAULT_EPSILON,
    DEFAULT_EVAL_SLOTS,
    DEFAULT_GRAD_CLIP,
    DEFAULT_HIDDEN_SIZE,
    DEFAULT_INPUT_WINDOW,
    DEFAULT_LEARNING_RATE,
    DEFAULT_SEED,
    DEFAULT_SEED_COUNT,
    DEFAULT_TRAIN_SLOTS,
)
from src.utils.rng import MAX_SEED
from src.utils.validators import (
    validate_mixture,
    validate_positive,
    validate_positive_int,
    validate_probability,
    validate_sensing,
    validate_window,
)

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).parent.parent.parent / "config"
SETTINGS_PATH = CONFIG_DIR / "settings.yaml"

TRAINING_KEYS = ("epochs", "bptt_length", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "grad_clip")


class ConfigError(ValueError):
    """Invalid experiment configuration; field is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)

    def __reduce__(self):
        return (ConfigError, (self.field, self.message))


@dataclass(frozen=True)
class EvaluationConfig:
    """Sensed-slot counts of the training series and of each held-out series."""
    train_slots: int = DEFAULT_TRAIN_SLOTS
    eval_slots: int = DEFAULT_EVAL_SLOTS

    def to_dict(self) -> dict:
        return {"train_slots": int(self.train_slots), "eval_slots": int(self.eval_slots)}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated experiment configuration."""
    name: str
    model: OnOffModel
    sensing: SensingConfig
    attack: AttackConfig
    window: WindowConfig = field(default_factory=WindowConfig)
    detector: DetectorSpec = DETECTOR_SPECS["lstm3"]
    training: TrainingConfig = field(default_factory=TrainingConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    seed: int = DEFAULT_SEED
    seeds: int = DEFAULT_SEED_COUNT
    output_dir: str = "results"
    schedules: Dict[str, TrainingConfig] = field(default_factory=dict)

    def training_for(self, detector: str) -> TrainingConfig:
        """Training schedule of one detector: its own entry in schedules, else the shared one."""
        return self.schedules.get(detector, self.training)

    @property
    def seed_list(self) -> List[int]:
        """Per-run seeds: seed, seed + 1, ..., seed + seeds - 1."""
        return [self.seed + i for i in range(self.seeds)]

    def with_overrides(
        self,
        seed: Optional[int] = None,
        seeds: Optional[int] = None,
        arch: Optional[str] = None,
        output_dir: Optional[str] = None,
        attack_probability: Optional[float] = None,
    ) -> "ExperimentConfig":
        """Copy with command-line overrides applied and validated."""
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = _seed(seed, "seed")
        if seeds is not None:
            changes["seeds"] = _positive_int(seeds, "seeds")
        if arch is not None:
            if arch not in DETECTOR_SPECS:
                raise ConfigError("detector.arch", f"unknown detector '{arch}', choose from {sorted(DETECTOR_SPECS)}")
            changes["detector"] = DETECTOR_SPECS[arch]
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        if attack_probability is not None:
            changes["attack"] = AttackConfig(impulse_probability=_probability(attack_probability, "attack.impulse_probability"))
        updated = replace(self, **changes)
        if updated.seed + updated.seeds - 1 > MAX_SEED:
            raise ConfigError("seeds", "seed range exceeds the unsigned 64-bit range")
        return updated

    def to_dict(self) -> dict:
        """Canonical nested form, the same layout parse_config reads."""
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "name": self.name,
            "model": self.model.to_dict(),
            "sensing": {"t_ob": float(self.sensing.t_ob), "t_re": float(self.sensing.t_re)},
            "attack": {"impulse_probability": float(self.attack.impulse_probability)},
            "window": self.window.to_dict(),
            "detector": {"arch": self.detector.name, "hidden_size": int(self.training.hidden_size)},
            "training": _training_dict(self.training),
            "schedules": {name: _training_dict(self.schedules[name]) for name in sorted(self.schedules)},
            "evaluation": self.evaluation.to_dict(),
            "seed": int(self.seed),
            "seeds": int(self.seeds),
            "output_dir": self.output_dir,
        }

    def digest(self) -> str:
        """SHA-256 of the canonical experiment content (seeds and output dir excluded)."""
        content = self.to_dict()
        for key in ("seed", "seeds", "output_dir"):
            content.pop(key)
        text = yaml.safe_dump(content, sort_keys=True, default_flow_style=False)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _training_dict(training: TrainingConfig) -> Dict[str, Any]:
    return {key: getattr(training, key) for key in TRAINING_KEYS}


def load_default_settings() -> Dict[str, Any]:
    """Load default settings from config/settings.yaml"""
    try:
        with open(SETTINGS_PATH, "r") as f:
            settings = yaml.safe_load(f) or {}
        return settings
    except FileNotFoundError:
        logger.warning(f"Configuration file not found: {SETTINGS_PATH}, using built-in defaults")
        return {
            "attack": {"impulse_probability": ATTACK_PROBABILITY},
            "window": {"l_I": DEFAULT_INPUT_WINDOW, "l_C": DEFAULT_COMPARISON_WINDOW},
            "detector": {"arch": "lstm3", "hidden_size": DEFAULT_HIDDEN_SIZE},
            "training": {
                "epochs": DEFAULT_EPOCHS,
                "bptt_length": DEFAULT_BPTT_LENGTH,
                "batch_size": DEFAULT_BATCH_SIZE,
                "learning_rate": DEFAULT_LEARNING_RATE,
                "beta1": DEFAULT_BETA1,
                "beta2": DEFAULT_BETA2,
                "epsilon": DEFAULT_EPSILON,
                "grad_clip": DEFAULT_GRAD_CLIP,
            },
            "schedules": {"lstm3": dict(DEEP_STACK_SCHEDULE)},
            "evaluation": {"train_slots": DEFAULT_TRAIN_SLOTS, "eval_slots": DEFAULT_EVAL_SLOTS},
            "seed": DEFAULT_SEED,
            "seeds": DEFAULT_SEED_COUNT,
            "output_dir": "results",
        }


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _number(value: Any, path: str) -> float:
    if not _is_number(value):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _positive_int(value: Any, path: str) -> int:
    is_valid, message = validate_positive_int(value, path.split(".")[-1])
    if not is_valid:
        raise ConfigError(path, message)
    return int(value)


def _positive(value: Any, path: str) -> float:
    is_valid, message = validate_positive(_number(value, path), path.split(".")[-1])
    if not is_valid:
        raise ConfigError(path, message)
    return float(value)


def _probability(value: Any, path: str) -> float:
    is_valid, message = validate_probability(_number(value, path), path.split(".")[-1])
    if not is_valid:
        raise ConfigError(path, message)
    return float(value)


def _seed(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MAX_SEED:
        raise ConfigError(path, f"seed must be an unsigned 64-bit integer, got {value!r}")
    return int(value)


def _section(raw: Dict[str, Any], key: str, allowed: Tuple[str, ...], path: str = "") -> Dict[str, Any]:
    full = f"{path}.{key}" if path else key
    value = raw.get(key, {})
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError(full, f"expected a mapping, got {type(value).__name__}")
    _reject_unknown(value, allowed, full)
    return value


def _reject_unknown(raw: Dict[str, Any], allowed: Tuple[str, ...], path: str):
    for key in raw:
        if key not in allowed:
            name = f"{path}.{key}" if path else str(key)
            raise ConfigError(name, f"unknown field (allowed: {', '.join(allowed)})")


def _require(raw: Dict[str, Any], key: str, path: str) -> Any:
    if key not in raw:
        raise ConfigError(f"{path}.{key}" if path else key, "required field is missing")
    return raw[key]


def _merge(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(defaults or {})
    merged.update(overrides or {})
    return merged


def _state_keys(model_raw: Dict[Any, Any]) -> Dict[Any, Any]:
    """Map the booleans YAML 1.1 reads from bare on/off keys back to state names."""
    mapped: Dict[Any, Any] = {}
    for key, value in model_raw.items():
        name = ("on" if key else "off") if isinstance(key, bool) else key
        if name in mapped:
            raise ConfigError(f"model.{name}", "state given twice")
        mapped[name] = value
    return mapped


def _parse_training(values: Dict[str, Any], hidden_size: int, path: str) -> TrainingConfig:
    training_values: Dict[str, Any] = {}
    for key in ("epochs", "bptt_length", "batch_size"):
        training_values[key] = _positive_int(_require(values, key, path), f"{path}.{key}")
    for key in ("learning_rate", "epsilon", "grad_clip"):
        training_values[key] = _positive(_require(values, key, path), f"{path}.{key}")
    for key in ("beta1", "beta2"):
        value = _number(_require(values, key, path), f"{path}.{key}")
        if not 0.0 <= value < 1.0:
            raise ConfigError(f"{path}.{key}", f"{key} must be in [0, 1), got {value}")
        training_values[key] = value
    return TrainingConfig(hidden_size=hidden_size, **training_values)


def _parse_schedules(
    raw: Dict[str, Any], defaults: Dict[str, Any], training_raw: Dict[str, Any], hidden_size: int
) -> Dict[str, TrainingConfig]:
    """
    Per-detector training schedules.

    Precedence, lowest first: default training, default schedule of the
    detector, the experiment's training section, the experiment's schedule.
    Detectors without a schedule in either place use the shared training.
    """
    own_schedules = _section(raw, "schedules", tuple(DETECTOR_SPECS))
    default_schedules = defaults.get("schedules") or {}
    schedules: Dict[str, TrainingConfig] = {}
    for name in DETECTOR_SPECS:
        own = _section(own_schedules, name, TRAINING_KEYS, "schedules")
        fallback = default_schedules.get(name) or {}
        if not own and not fallback:
            continue
        _reject_unknown(fallback, TRAINING_KEYS, f"schedules.{name}")
        values = {**(defaults.get("training") or {}), **fallback, **training_raw, **own}
        schedules[name] = _parse_training(values, hidden_size, f"schedules.{name}")
    return schedules


def _parse_mixture(raw: Any, path: str) -> HyperErlangParams:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping with weights, shapes and scales")
    _reject_unknown(raw, ("weights", "shapes", "scales"), path)
    lists = {}
    for key in ("weights", "shapes", "scales"):
        value = _require(raw, key, path)
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(f"{path}.{key}", "expected a list of numbers")
        lists[key] = value

    is_valid, message = validate_mixture(lists["weights"], lists["shapes"], lists["scales"])
    if not is_valid:
        head = message.split()[0]
        raise ConfigError(f"{path}.{head}" if head in lists else path, message)
    return HyperErlangParams(
        weights=lists["weights"],
        shapes=[int(k) for k in lists["shapes"]],
        scales=lists["scales"],
    )


def config_from_dict(raw: Dict[str, Any], defaults: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Build a validated ExperimentConfig from a parsed YAML mapping.

    Args:
        raw: Parsed experiment document
        defaults: Settings used for omitted fields (default: config/settings.yaml)

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: naming the offending field path
    """
    if not isinstance(raw, dict):
        raise ConfigError("", "configuration must be a mapping")
    defaults = load_default_settings() if defaults is None else defaults
    _reject_unknown(
        raw,
        ("schema_version", "name", "model", "sensing", "attack", "window", "detector",
         "training", "schedules", "evaluation", "seed", "seeds", "output_dir"),
        "",
    )

    version = _require(raw, "schema_version", "")
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported schema version {version!r}, expected {CONFIG_SCHEMA_VERSION}")

    if isinstance(raw.get("model"), dict):
        raw = {**raw, "model": _state_keys(raw["model"])}
    model_raw = _section(raw, "model", ("on", "off"))
    model = OnOffModel(
        on=_parse_mixture(_require(model_raw, "on", "model"), "model.on"),
        off=_parse_mixture(_require(model_raw, "off", "model"), "model.off"),
    )

    sensing_raw = _section(raw, "sensing", ("t_ob", "t_re"))
    t_ob = _number(_require(sensing_raw, "t_ob", "sensing"), "sensing.t_ob")
    t_re = _number(_require(sensing_raw, "t_re", "sensing"), "sensing.t_re")
    is_valid, message = validate_sensing(t_ob, t_re)
    if not is_valid:
        raise ConfigError(f"sensing.{message.split()[0]}", message)
    sensing = SensingConfig(t_ob=t_ob, t_re=t_re)

    attack_raw = _merge(defaults.get("attack"), _section(raw, "attack", ("impulse_probability",)))
    attack = AttackConfig(
        impulse_probability=_probability(
            _require(attack_raw, "impulse_probability", "attack"), "attack.impulse_probability"
        )
    )

    window_own = _section(raw, "window", ("l_I", "l_C", "stride"))
    window_raw = _merge(defaults.get("window"), window_own)
    l_I = _positive_int(_require(window_raw, "l_I", "window"), "window.l_I")
    l_C = _positive_int(_require(window_raw, "l_C", "window"), "window.l_C")
    # a default stride belongs to the default l_C
    stride = window_own.get("stride") if "l_C" in window_own else window_raw.get("stride")
    stride = l_C if stride is None else _positive_int(stride, "window.stride")
    is_valid, message = validate_window(l_I, l_C, stride)
    if not is_valid:
        raise ConfigError(f"window.{message.split()[0]}", message)
    window = WindowConfig(l_I=l_I, l_C=l_C, stride=stride)

    detector_raw = _merge(defaults.get("detector"), _section(raw, "detector", ("arch", "hidden_size")))
    arch = _require(detector_raw, "arch", "detector")
    if arch not in DETECTOR_SPECS:
        raise ConfigError("detector.arch", f"unknown detector {arch!r}, choose from {sorted(DETECTOR_SPECS)}")
    hidden_size = _positive_int(_require(detector_raw, "hidden_size", "detector"), "detector.hidden_size")

    training_own = _section(raw, "training", TRAINING_KEYS)
    training = _parse_training(_merge(defaults.get("training"), training_own), hidden_size, "training")
    schedules = _parse_schedules(raw, defaults, training_own, hidden_size)

    evaluation_raw = _merge(defaults.get("evaluation"), _section(raw, "evaluation", ("train_slots", "eval_slots")))
    evaluation = EvaluationConfig(
        train_slots=_positive_int(_require(evaluation_raw, "train_slots", "evaluation"), "evaluation.train_slots"),
        eval_slots=_positive_int(_require(evaluation_raw, "eval_slots", "evaluation"), "evaluation.eval_slots"),
    )

    name = raw.get("name", "experiment")
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "expected a non-empty string")
    output_dir = raw.get("output_dir", defaults.get("output_dir", "results"))
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "expected a non-empty path string")

    config = ExperimentConfig(
        name=name,
        model=model,
        sensing=sensing,
        attack=attack,
        window=window,
        detector=DETECTOR_SPECS[arch],
        training=training,
        evaluation=evaluation,
        seed=_seed(raw.get("seed", defaults.get("seed", DEFAULT_SEED)), "seed"),
        seeds=_positive_int(raw.get("seeds", defaults.get("seeds", DEFAULT_SEED_COUNT)), "seeds"),
        output_dir=output_dir,
        schedules=schedules,
    )
    return config.with_overrides()


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load and validate an experiment configuration file.

    Args:
        path: YAML experiment file (e.g. config/simple.cfg)

    Returns:
        ExperimentConfig

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: If the file is malformed or violates the schema
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Configuration file not found: {path}")
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError("", f"malformed configuration file {path}: {e}") from e

    config = config_from_dict(raw)
    logger.info(f"Loaded configuration '{config.name}' from {path} (digest {config.digest()[:12]})")
    return config
