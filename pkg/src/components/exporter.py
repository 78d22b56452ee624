"""
Export & Reporting Module
Writes sensed series, traces, detection scores and ROC curves as CSV and
experiment reports as YAML, and reads back the CSVs the CLI consumes.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd
import yaml

from src.components.detector import SCORE_COLUMNS, DetectionScore, frame_to_scores, scores_to_frame
from src.components.eval_harness import ExperimentReport, RocPoint, comparison_table, roc_to_frame
from src.models.channel_sim import ContinuousTrace, SensedSeries
from src.utils.constants import STATE_NAMES

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SERIES_COLUMNS = ["slot", "bit", "attack_mask", "pu_bit"]
TRACE_COLUMNS = ["segment", "state", "start", "duration"]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _read_csv(path: PathLike, required: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Input file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ValueError(f"{path} is missing columns: {missing}")
    return frame


def series_to_frame(series: SensedSeries) -> pd.DataFrame:
    """Sensed series as slot, bit, attack_mask, pu_bit columns."""
    return pd.DataFrame(
        {
            "slot": np.arange(len(series), dtype=np.int64),
            "bit": series.bits.astype(np.int64),
            "attack_mask": series.attack_mask.astype(np.int64),
            "pu_bit": series.pu_bits.astype(np.int64),
        },
        columns=SERIES_COLUMNS,
    )


def trace_to_frame(trace: ContinuousTrace) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "segment": np.arange(len(trace), dtype=np.int64),
            "state": [STATE_NAMES[int(s)] for s in trace.states],
            "start": trace.starts,
            "duration": trace.durations,
        },
        columns=TRACE_COLUMNS,
    )


def export_series_csv(series: SensedSeries, path: PathLike) -> Path:
    path = _prepare(path)
    series_to_frame(series).to_csv(path, index=False)
    logger.info(f"Wrote {len(series)} sensed slots to {path}")
    return path


def export_trace_csv(trace: ContinuousTrace, path: PathLike) -> Path:
    path = _prepare(path)
    trace_to_frame(trace).to_csv(path, index=False)
    logger.info(f"Wrote {len(trace)} trace segments to {path}")
    return path


def export_scores_csv(scores: Sequence[DetectionScore], path: PathLike) -> Path:
    path = _prepare(path)
    scores_to_frame(scores).to_csv(path, index=False)
    logger.info(f"Wrote {len(scores)} detection scores to {path}")
    return path


def export_roc_csv(points: Sequence[RocPoint], path: PathLike) -> Path:
    path = _prepare(path)
    roc_to_frame(points).to_csv(path, index=False)
    logger.info(f"Wrote {len(points)} ROC points to {path}")
    return path


def export_comparison_csv(reports: Sequence[ExperimentReport], path: PathLike) -> Path:
    path = _prepare(path)
    comparison_table(reports).to_csv(path, index=False)
    return path


def export_yaml(document: Dict[str, Any], path: PathLike) -> Path:
    """Write a YAML document with its key order preserved."""
    path = _prepare(path)
    path.write_text(yaml.safe_dump(document, sort_keys=False, default_flow_style=False))
    return path


def export_report(reports: Sequence[ExperimentReport], model: str, path: PathLike) -> Path:
    """
    Report file for one PU model: every detector's averages, ranked by AUC.

    Runtime is not written, so repeated runs produce identical files.
    """
    ranked = comparison_table(reports)
    document = {
        "model": model,
        "ranking": ranked["detector"].tolist(),
        "detectors": [report.to_dict() for report in reports],
    }
    path = export_yaml(document, path)
    logger.info(f"Wrote report for '{model}' ({len(reports)} detectors) to {path}")
    return path


def load_series_csv(path: PathLike, slot_period: float) -> SensedSeries:
    """
    Read a sensed series written by export_series_csv.

    When the pu_bit column is absent, attacked slots are taken to hide an
    idle PU.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If columns are missing or the series is inconsistent
    """
    frame = _read_csv(path, SERIES_COLUMNS[:3])
    pu_bits = frame["pu_bit"].to_numpy() if "pu_bit" in frame.columns else None
    return SensedSeries(
        bits=frame["bit"].to_numpy(),
        attack_mask=frame["attack_mask"].to_numpy(),
        slot_period=slot_period,
        pu_bits=pu_bits,
    )


def load_scores_csv(path: PathLike) -> List[DetectionScore]:
    """Read detection scores written by export_scores_csv."""
    return frame_to_scores(_read_csv(path, SCORE_COLUMNS))
