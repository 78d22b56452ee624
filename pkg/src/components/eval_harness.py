"""
Experiment harness for the PUE attack detectors.

Trains a detector on attack-free sensed data, scores held-out normal and
attacked series, and summarizes the gap as average losses, ROC curves and
AUC, averaged over several seeds.
"""
import logging
import time
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from src.components.detector import DetectionScore, mean_loss, score_series
from src.models.channel_sim import AttackConfig, generate_trace, sense, simulate_series
from src.models.registry import DETECTOR_SPECS, DetectorSpec, get_detector_spec, train_detector
from src.utils.config_loader import ExperimentConfig
from src.utils.constants import REPORT_FORMAT_VERSION, STATE_OFF
from src.utils.rng import (
    STREAM_ATTACK,
    STREAM_EVAL_ATTACK,
    STREAM_EVAL_TRACE,
    STREAM_INIT,
    STREAM_SHUFFLE,
    STREAM_TRACE,
    SeedStreams,
)

logger = logging.getLogger(__name__)

ROC_COLUMNS = ["threshold", "fpr", "tpr"]
COMPARISON_COLUMNS = ["rank", "detector", "model", "normal_loss", "contaminated_loss", "loss_ratio", "auc"]

__all__ = [
    "DETECTOR_SPECS",
    "ExperimentReport",
    "RocPoint",
    "SeedResult",
    "compare_detectors",
    "comparison_table",
    "pair_counting_auc",
    "roc_curve",
    "roc_to_frame",
    "run_detector_suite",
    "run_experiment",
]


@dataclass(frozen=True)
class RocPoint:
    """One operating point: steps with loss >= threshold are flagged."""
    threshold: float
    false_positive_rate: float
    true_positive_rate: float


def _split_losses(scores: Sequence[DetectionScore]) -> Tuple[np.ndarray, np.ndarray]:
    clean = np.array([s.loss for s in scores if not s.contaminated], dtype=float)
    contaminated = np.array([s.loss for s in scores if s.contaminated], dtype=float)
    if clean.size == 0:
        raise ValueError("ROC needs at least one clean score; none were given")
    if contaminated.size == 0:
        raise ValueError("ROC needs at least one contaminated score; none were given")
    return clean, contaminated


def roc_curve(scores: Sequence[DetectionScore]) -> Tuple[List[RocPoint], float]:
    """
    ROC curve of a loss-threshold detector and its area.

    Thresholds sweep the distinct loss values from highest to lowest; the
    curve starts at (0, 0) with an infinite threshold and ends at (1, 1).

    Args:
        scores: Scores with ground-truth contamination flags

    Returns:
        Tuple of (ROC points, AUC by trapezoidal integration)

    Raises:
        ValueError: If either class is missing
    """
    clean, contaminated = _split_losses(scores)
    clean_sorted = np.sort(clean)
    contaminated_sorted = np.sort(contaminated)
    thresholds = np.unique(np.concatenate([clean, contaminated]))[::-1]

    flagged_clean = clean.size - np.searchsorted(clean_sorted, thresholds, side="left")
    flagged_contaminated = contaminated.size - np.searchsorted(contaminated_sorted, thresholds, side="left")
    fpr = np.concatenate([[0.0], flagged_clean / clean.size])
    tpr = np.concatenate([[0.0], flagged_contaminated / contaminated.size])

    points = [RocPoint(threshold=float("inf"), false_positive_rate=0.0, true_positive_rate=0.0)]
    points.extend(
        RocPoint(threshold=float(t), false_positive_rate=float(f), true_positive_rate=float(r))
        for t, f, r in zip(thresholds, fpr[1:], tpr[1:])
    )
    auc = float(trapezoid(tpr, fpr))
    return points, auc


def pair_counting_auc(clean_losses: Sequence[float], contaminated_losses: Sequence[float]) -> float:
    """
    Probability that a contaminated loss exceeds a clean one, ties counted ½.
    """
    clean = np.asarray(clean_losses, dtype=float)
    contaminated = np.asarray(contaminated_losses, dtype=float)
    if clean.size == 0 or contaminated.size == 0:
        raise ValueError("pair counting needs at least one score of each class")
    greater = (contaminated[:, None] > clean[None, :]).sum()
    ties = (contaminated[:, None] == clean[None, :]).sum()
    return float((greater + 0.5 * ties) / (clean.size * contaminated.size))


def roc_to_frame(points: Sequence[RocPoint]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "threshold": [p.threshold for p in points],
            "fpr": [p.false_positive_rate for p in points],
            "tpr": [p.true_positive_rate for p in points],
        },
        columns=ROC_COLUMNS,
    )


@dataclass
class SeedResult:
    """Outcome of one (detector, seed) run."""
    seed: int
    normal_loss: float
    contaminated_loss: float
    auc: float
    initial_train_loss: float
    final_train_loss: float
    contaminated_steps: int

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "normal_loss": float(self.normal_loss),
            "contaminated_loss": float(self.contaminated_loss),
            "auc": float(self.auc),
            "initial_train_loss": float(self.initial_train_loss),
            "final_train_loss": float(self.final_train_loss),
            "contaminated_steps": int(self.contaminated_steps),
        }


@dataclass
class ExperimentReport:
    """
    Average losses and AUC of one detector on one PU model, over seeds.

    scores and roc hold the first seed's per-step detail for CSV export;
    runtime_seconds is logged but kept out of the report file.
    """
    model: str
    detector: str
    label: str
    config_digest: str
    seed_results: List[SeedResult]
    scores: List[DetectionScore] = field(default_factory=list, repr=False)
    roc: List[RocPoint] = field(default_factory=list, repr=False)
    runtime_seconds: float = 0.0

    def __post_init__(self):
        if not self.seed_results:
            raise ValueError("a report needs at least one seed result")

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.seed_results]

    @property
    def normal_loss(self) -> float:
        return float(np.mean([r.normal_loss for r in self.seed_results]))

    @property
    def contaminated_loss(self) -> float:
        return float(np.mean([r.contaminated_loss for r in self.seed_results]))

    @property
    def auc(self) -> float:
        return float(np.mean([r.auc for r in self.seed_results]))

    @property
    def loss_ratio(self) -> float:
        normal = self.normal_loss
        return self.contaminated_loss / normal if normal > 0 else float("inf")

    def to_dict(self) -> dict:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "model": self.model,
            "detector": self.detector,
            "label": self.label,
            "config_digest": self.config_digest,
            "seeds": self.seeds,
            "normal_loss": self.normal_loss,
            "contaminated_loss": self.contaminated_loss,
            "loss_ratio": self.loss_ratio,
            "auc": self.auc,
            "per_seed": [r.to_dict() for r in self.seed_results],
        }


def _run_seed(
    config: ExperimentConfig, spec: DetectorSpec, seed: int
) -> Tuple[SeedResult, List[DetectionScore], List[RocPoint]]:
    streams = SeedStreams(seed)
    window = config.window
    eval_slots = config.evaluation.eval_slots

    _, train_series = simulate_series(
        config.model,
        config.sensing,
        AttackConfig(impulse_probability=0.0),
        config.evaluation.train_slots,
        streams.stream(STREAM_TRACE),
        streams.stream(STREAM_ATTACK),
    )
    result = train_detector(
        spec,
        train_series,
        window,
        config.training_for(spec.name),
        streams.stream(STREAM_INIT),
        streams.stream(STREAM_SHUFFLE),
    )

    # one held-out trace, sensed once without and once with the attacker
    horizon = eval_slots * config.sensing.slot_period + config.sensing.t_ob
    eval_trace = generate_trace(config.model, horizon, STATE_OFF, streams.stream(STREAM_EVAL_TRACE))
    normal_series = sense(
        eval_trace, config.sensing, AttackConfig(impulse_probability=0.0), streams.stream(STREAM_EVAL_ATTACK), eval_slots
    )
    attacked_series = sense(eval_trace, config.sensing, config.attack, streams.stream(STREAM_EVAL_ATTACK), eval_slots)

    normal_scores = score_series(result.network, normal_series, window)
    attacked_scores = score_series(result.network, attacked_series, window)
    all_scores = normal_scores + attacked_scores
    roc, auc = roc_curve(all_scores)

    seed_result = SeedResult(
        seed=seed,
        normal_loss=mean_loss(normal_scores),
        contaminated_loss=mean_loss(attacked_scores),
        auc=auc,
        initial_train_loss=result.initial_loss,
        final_train_loss=result.final_loss,
        contaminated_steps=int(sum(s.contaminated for s in attacked_scores)),
    )
    logger.info(
        f"[{config.name}/{spec.name} seed {seed}] normal {seed_result.normal_loss:.5f}, "
        f"contaminated {seed_result.contaminated_loss:.5f}, AUC {auc:.4f}"
    )
    return seed_result, all_scores, roc


def run_experiment(config: ExperimentConfig, detector: Optional[str] = None) -> ExperimentReport:
    """
    Train and evaluate one detector on one PU model for every configured seed.

    Each seed generates its own attack-free training series and held-out
    evaluation trace; the same seed gives every detector the same data.

    Args:
        config: Validated experiment configuration
        detector: Detector name overriding config.detector

    Returns:
        ExperimentReport aggregated over config.seed_list
    """
    spec = get_detector_spec(detector) if detector else config.detector
    started = time.perf_counter()

    seed_results: List[SeedResult] = []
    first_scores: List[DetectionScore] = []
    first_roc: List[RocPoint] = []
    for seed in config.seed_list:
        seed_result, scores, roc = _run_seed(config, spec, seed)
        seed_results.append(seed_result)
        if not first_scores:
            first_scores, first_roc = scores, roc

    report = ExperimentReport(
        model=config.name,
        detector=spec.name,
        label=spec.label,
        config_digest=config.digest(),
        seed_results=seed_results,
        scores=first_scores,
        roc=first_roc,
        runtime_seconds=time.perf_counter() - started,
    )
    logger.info(
        f"{config.name}/{spec.name}: normal {report.normal_loss:.5f}, contaminated {report.contaminated_loss:.5f}, "
        f"mean AUC {report.auc:.4f} over {len(seed_results)} seeds ({report.runtime_seconds:.1f}s)"
    )
    if report.contaminated_loss <= report.normal_loss:
        logger.warning(f"{config.name}/{spec.name}: attacked series did not raise the average loss")
    return report


def compare_detectors(reports: Sequence[ExperimentReport]) -> List[ExperimentReport]:
    """Order reports by mean AUC, highest first; ties broken by detector name."""
    return sorted(reports, key=lambda r: (-r.auc, r.detector))


def comparison_table(reports: Sequence[ExperimentReport]) -> pd.DataFrame:
    """Ranked comparison with columns rank, detector, model, losses, loss_ratio, auc."""
    rows = [
        {
            "rank": rank,
            "detector": report.detector,
            "model": report.model,
            "normal_loss": report.normal_loss,
            "contaminated_loss": report.contaminated_loss,
            "loss_ratio": report.loss_ratio,
            "auc": report.auc,
        }
        for rank, report in enumerate(compare_detectors(reports), start=1)
    ]
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)


def run_detector_suite(
    config: ExperimentConfig, detectors: Optional[Sequence[str]] = None, jobs: int = 1
) -> List[ExperimentReport]:
    """
    Run every named detector on one PU model.

    Args:
        config: Experiment configuration shared by all detectors
        detectors: Detector names (default: all of DETECTOR_SPECS)
        jobs: Worker processes; 1 runs sequentially

    Returns:
        Reports in the order of detectors
    """
    names = list(detectors or DETECTOR_SPECS)
    for name in names:
        get_detector_spec(name)
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")

    if jobs == 1 or len(names) == 1:
        return [run_experiment(config, name) for name in names]

    logger.info(f"Running {len(names)} detectors on '{config.name}' with {jobs} workers")
    with ProcessPoolExecutor(max_workers=min(jobs, len(names))) as pool:
        futures: Dict[str, Future] = {name: pool.submit(run_experiment, config, name) for name in names}
        return [futures[name].result() for name in names]
