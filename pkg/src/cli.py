"""
Command-line entry point for the PUE attack detector toolkit.

    python -m src.cli simulate  --config config/simple.cfg --seed 7 --out runs/sim
    python -m src.cli train     --config config/simple.cfg --arch lstm3 --out runs/train
    python -m src.cli score     --checkpoint runs/train/checkpoint_lstm3.yaml --input runs/sim/series.csv --out runs/score
    python -m src.cli roc       --scores runs/score/scores.csv --out runs/roc
    python -m src.cli reproduce --seed 42 --seeds 3 --out results

Exit status: 0 success, 1 validation error, 2 runtime failure.
"""
import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from src.components.checkpoint import load_checkpoint, save_checkpoint
from src.components.detector import mean_loss, score_series
from src.components.eval_harness import comparison_table, roc_curve, run_detector_suite
from src.components.exporter import (
    export_comparison_csv,
    export_report,
    export_roc_csv,
    export_scores_csv,
    export_series_csv,
    export_trace_csv,
    load_scores_csv,
    load_series_csv,
)
from src.models.channel_sim import AttackConfig, generate_trace, sense, simulate_series
from src.models.label_domain import WindowConfig
from src.models.registry import DETECTOR_SPECS, train_detector
from src.utils.config_loader import CONFIG_DIR, ExperimentConfig, parse_config
from src.utils.constants import STATE_OFF
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

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

DEFAULT_CONFIG = CONFIG_DIR / "simple.cfg"
REPRODUCE_CONFIGS = [CONFIG_DIR / "simple.cfg", CONFIG_DIR / "complex.cfg"]
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _seed_arg(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {value!r}")
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def _load_config(args: argparse.Namespace, path: Optional[Path] = None) -> ExperimentConfig:
    config = parse_config(path or args.config or DEFAULT_CONFIG)
    return config.with_overrides(
        seed=getattr(args, "seed", None),
        seeds=getattr(args, "seeds", None),
        arch=getattr(args, "arch", None),
        output_dir=getattr(args, "out", None),
        attack_probability=getattr(args, "attack_prob", None),
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    streams = SeedStreams(config.seed)
    n_slots = args.slots or config.evaluation.eval_slots
    trace, series = simulate_series(
        config.model,
        config.sensing,
        config.attack,
        n_slots,
        streams.stream(STREAM_TRACE),
        streams.stream(STREAM_ATTACK),
    )
    out = Path(config.output_dir)
    export_trace_csv(trace, out / "trace.csv")
    export_series_csv(series, out / "series.csv")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    streams = SeedStreams(config.seed)
    _, series = simulate_series(
        config.model,
        config.sensing,
        AttackConfig(impulse_probability=0.0),
        config.evaluation.train_slots,
        streams.stream(STREAM_TRACE),
        streams.stream(STREAM_ATTACK),
    )
    started = time.perf_counter()
    result = train_detector(
        config.detector,
        series,
        config.window,
        config.training_for(config.detector.name),
        streams.stream(STREAM_INIT),
        streams.stream(STREAM_SHUFFLE),
    )
    logger.info(
        f"Trained {config.detector.label}: loss {result.initial_loss:.5f} -> {result.final_loss:.5f} "
        f"in {time.perf_counter() - started:.1f}s"
    )
    path = args.checkpoint or Path(config.output_dir) / f"checkpoint_{config.detector.name}.yaml"
    save_checkpoint(result.network, path)
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    network = load_checkpoint(args.checkpoint)
    meta = network.params.meta
    window = WindowConfig(l_I=int(meta["l_I"]), l_C=int(meta["l_C"]), stride=meta.get("stride"))

    config = _load_config(args)
    if args.input:
        series = load_series_csv(args.input, slot_period=config.sensing.slot_period)
    else:
        streams = SeedStreams(config.seed)
        n_slots = config.evaluation.eval_slots
        horizon = n_slots * config.sensing.slot_period + config.sensing.t_ob
        trace = generate_trace(config.model, horizon, STATE_OFF, streams.stream(STREAM_EVAL_TRACE))
        series = sense(trace, config.sensing, config.attack, streams.stream(STREAM_EVAL_ATTACK), n_slots)

    scores = score_series(network, series, window)
    logger.info(f"Mean loss {mean_loss(scores):.5f} over {len(scores)} steps")
    export_scores_csv(scores, Path(args.out or ".") / "scores.csv")
    return EXIT_OK


def cmd_roc(args: argparse.Namespace) -> int:
    scores = load_scores_csv(args.scores)
    points, auc = roc_curve(scores)
    export_roc_csv(points, Path(args.out or ".") / "roc.csv")
    print(f"AUC: {auc:.6f}")
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    paths = args.config or REPRODUCE_CONFIGS
    out = Path(args.out or "results")
    all_reports = []
    started = time.perf_counter()
    for path in paths:
        config = _load_config(args, Path(path))
        reports = run_detector_suite(config, args.detectors or list(DETECTOR_SPECS), jobs=args.jobs)
        model_dir = out / config.name
        export_report(reports, config.name, model_dir / "report.yaml")
        export_comparison_csv(reports, model_dir / "comparison.csv")
        for report in reports:
            export_scores_csv(report.scores, model_dir / f"scores_{report.detector}.csv")
            export_roc_csv(report.roc, model_dir / f"roc_{report.detector}.csv")
        all_reports.extend(reports)

    summary = comparison_table(all_reports)
    summary.to_csv(_prepare_dir(out) / "summary.csv", index=False)
    logger.info(f"Reproduced {len(all_reports)} experiments in {time.perf_counter() - started:.1f}s")
    print(summary.to_string(index=False))
    return EXIT_OK


def _prepare_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pue-detect",
        description="Simulate PU channel activity, train recurrent PUE attack detectors and evaluate them",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: $PUE_LOG_LEVEL or INFO)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to run")

    def common(sub: argparse.ArgumentParser, config_help: str = "Experiment config file"):
        sub.add_argument("--config", type=Path, default=None, help=config_help)
        sub.add_argument("--seed", type=_seed_arg, default=None, help="64-bit random seed")
        sub.add_argument("--out", type=str, default=None, help="Output directory")

    sim_parser = subparsers.add_parser("simulate", help="Generate a trace and its sensed series")
    common(sim_parser)
    sim_parser.add_argument("--attack-prob", type=float, default=None, help="Override impulse attack probability")
    sim_parser.add_argument("--slots", type=int, default=None, help="Number of sensed slots")
    sim_parser.set_defaults(handler=cmd_simulate)

    train_parser = subparsers.add_parser("train", help="Train a detector and write a checkpoint")
    common(train_parser)
    train_parser.add_argument("--arch", choices=sorted(DETECTOR_SPECS), default=None, help="Detector architecture")
    train_parser.add_argument("--checkpoint", type=Path, default=None, help="Checkpoint path to write")
    train_parser.set_defaults(handler=cmd_train)

    score_parser = subparsers.add_parser("score", help="Score a sensed series with a trained detector")
    common(score_parser, "Experiment config: slot period of --input, or the series to simulate without it")
    score_parser.add_argument("--checkpoint", type=Path, required=True, help="Trained checkpoint")
    score_parser.add_argument("--input", type=Path, default=None, help="Sensed series CSV")
    score_parser.add_argument("--attack-prob", type=float, default=None, help="Override impulse attack probability")
    score_parser.set_defaults(handler=cmd_score)

    roc_parser = subparsers.add_parser("roc", help="ROC curve and AUC of a score CSV")
    roc_parser.add_argument("--scores", type=Path, required=True, help="Score CSV from 'score'")
    roc_parser.add_argument("--out", type=str, default=None, help="Output directory")
    roc_parser.set_defaults(handler=cmd_roc)

    reproduce_parser = subparsers.add_parser("reproduce", help="Run every detector on the simple and complex models")
    reproduce_parser.add_argument(
        "--config", type=Path, action="append", default=None, help="Experiment config (repeatable)"
    )
    reproduce_parser.add_argument("--seed", type=_seed_arg, default=None, help="Base seed")
    reproduce_parser.add_argument("--seeds", type=int, default=None, help="Number of seeds per detector")
    reproduce_parser.add_argument("--out", type=str, default="results", help="Report directory")
    reproduce_parser.add_argument("--jobs", type=int, default=1, help="Worker processes")
    reproduce_parser.add_argument(
        "--arch", dest="detectors", action="append", choices=sorted(DETECTOR_SPECS), default=None,
        help="Restrict to a detector (repeatable)",
    )
    reproduce_parser.set_defaults(handler=cmd_reproduce)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad arguments; --help exits 0
        return EXIT_OK if e.code in (0, None) else EXIT_VALIDATION

    level = args.log_level or os.getenv("PUE_LOG_LEVEL", "INFO")
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)

    try:
        return args.handler(args)
    except ValueError as e:
        logger.error(f"Validation error: {e}")
        return EXIT_VALIDATION
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
