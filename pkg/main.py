"""
Confmap - Confidence-Map Ground Truth and Evaluation Toolkit

Command-line entry point. Each subcommand loads the configuration, runs one
batch pipeline and writes a JSON run report.

Exit status: 0 success, 1 data/generation failure or failed check,
2 usage error, 3 I/O error.
"""

import argparse
import asyncio
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv

from src.core.exceptions import ConfmapError
from src.core.logger import dev_log, logger, setup_logger
from src.core.pipeline import PipelineService, describe
from src.models.confidence import BandPredictorParams, ConfidenceFormula, ThresholdMode
from src.models.config import AppConfig
from src.models.corruption import CorruptionKind
from src.services.report_service import ReportService, render_report

# Load environment variables
load_dotenv()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _kinds(value: str) -> List[CorruptionKind]:
    if value == "all":
        return list(CorruptionKind)
    try:
        return [CorruptionKind.parse(name) for name in value.split(",") if name]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _severities(value: str) -> List[int]:
    if value == "all":
        return [1, 2, 3, 4, 5]
    try:
        severity = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"severity must be 1..5 or 'all', got '{value}'")
    if not 1 <= severity <= 5:
        raise argparse.ArgumentTypeError(f"severity must be 1..5 or 'all', got {severity}")
    return [severity]


def _generation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threshold", type=float, default=None, help="Margin search radius tau (default 3.0)")
    parser.add_argument(
        "--threshold-mode",
        choices=[m.value for m in ThresholdMode],
        default=None,
        help="relative: tau times the calibration distance; absolute: tau pixels",
    )
    parser.add_argument(
        "--formula",
        choices=[f.value for f in ConfidenceFormula],
        default=None,
        help="Confidence ratio (default corrected)",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser for every subcommand."""
    parser = argparse.ArgumentParser(
        prog="confmap",
        description="Confidence-map ground truth generation and evaluation toolkit",
    )
    parser.add_argument("--config", default=None, help="Path to YAML configuration file")
    parser.add_argument("--seed", type=int, default=None, help="Seed of every random stream (default 0)")
    parser.add_argument("--threads", type=int, default=None, help="Frames processed concurrently (default 1)")
    parser.add_argument("--strict", action="store_true", default=None, help="Missing counterpart frames are fatal")
    parser.add_argument("--report", default=None, help="Write the JSON report here instead of stdout")
    parser.add_argument("--log-level", default=None, help="Console log level (default INFO)")
    parser.add_argument("--log-dir", default=None, help="Directory for log files; '' disables them")

    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="Generate ground-truth confidence maps")
    generate.add_argument("annotations", help="Annotation JSON file")
    generate.add_argument("out_dir", help="Output directory for <frame_id>.png maps")
    _generation_flags(generate)
    generate.add_argument("--keep-partial", action="store_true", default=None, help="Keep outputs of a failed run")

    score_map = commands.add_parser("score-map", help="Score predicted maps against ground truth")
    score_map.add_argument("pred_dir")
    score_map.add_argument("gt_dir")
    score_map.add_argument("--w-out", type=float, default=None, help="Weight of zero-confidence pixels (default 10)")

    score_traj = commands.add_parser("score-traj", help="Score predicted trajectories against ground truth")
    score_traj.add_argument("pred_file")
    score_traj.add_argument("gt_file")
    score_traj.add_argument("--resample-n", type=int, default=None, help="Points per trajectory (default 6)")

    corrupt = commands.add_parser("corrupt", help="Write corrupted copies of RGB images")
    corrupt.add_argument("image_dir")
    corrupt.add_argument("out_dir")
    corrupt.add_argument("--kind", type=_kinds, default=list(CorruptionKind), help="Kind, comma list or 'all'")
    corrupt.add_argument("--severity", type=_severities, default=[1, 2, 3, 4, 5], help="1..5 or 'all'")

    resample = commands.add_parser("resample", help="Resample trajectories by arc length")
    resample.add_argument("input")
    resample.add_argument("output")
    resample.add_argument("--resample-n", type=int, default=None, help="Points per trajectory (default 6)")

    validate = commands.add_parser("validate", help="Check an annotation file")
    validate.add_argument("annotations")

    oracle = commands.add_parser("compare-oracle", help="Compare the generator with the exhaustive oracle")
    oracle.add_argument("annotations")
    _generation_flags(oracle)
    oracle.add_argument(
        "--oracle-formula",
        choices=[f.value for f in ConfidenceFormula],
        default=None,
        help="Formula used by the oracle (default: same as --formula)",
    )

    robustness = commands.add_parser("score-robustness", help="Score a <kind>/s<severity> prediction tree")
    robustness.add_argument("pred_root")
    robustness.add_argument("gt_dir")
    robustness.add_argument("--w-out", type=float, default=None, help="Weight of zero-confidence pixels (default 10)")

    predict_map = commands.add_parser("predict-map", help="Write band baseline maps from annotation trajectories")
    predict_map.add_argument("annotations")
    predict_map.add_argument("out_dir")
    predict_map.add_argument("--half-width", type=float, required=True, help="Band half width in pixels")

    predict_traj = commands.add_parser("predict-traj", help="Extrapolate trajectories at constant direction")
    predict_traj.add_argument("input")
    predict_traj.add_argument("output")
    predict_traj.add_argument("--n", type=int, default=6, help="Points to predict (default 6)")

    return parser


def load_config(config_path: Optional[str]) -> AppConfig:
    """Load configuration from a YAML file and/or environment variables.

    Environment variables take precedence over YAML configuration.

    Raises:
        OSError: If the YAML file cannot be read
        ValueError: If a value is invalid
    """
    if not config_path:
        return AppConfig.from_env()

    dev_log(f"Loading configuration from {config_path}", "INFO")
    with open(Path(config_path), "r", encoding="utf-8") as file:
        config_dict = yaml.safe_load(file) or {}
    if not isinstance(config_dict, dict):
        raise ValueError(f"configuration file {config_path} must hold a mapping")
    return AppConfig.from_yaml_and_env(config_dict)


def flag_overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    """Command-line values that override the loaded configuration; None means not given."""
    def flag(name: str) -> Any:
        return getattr(args, name, None)

    return {
        "generation": {
            "distance_threshold": flag("threshold"),
            "threshold_mode": flag("threshold_mode"),
            "formula": flag("formula"),
        },
        "metrics": {"w_out": flag("w_out"), "resample_n": flag("resample_n")},
        "corruption": {"seed": flag("seed")},
        "runtime": {
            "threads": flag("threads"),
            "strict": flag("strict"),
            "keep_partial": flag("keep_partial"),
            "log_level": flag("log_level"),
            "log_dir": flag("log_dir"),
        },
    }


async def run_command(service: PipelineService, args: argparse.Namespace):
    """Dispatch a parsed command to the pipeline."""
    if args.command == "generate":
        return await service.generate(args.annotations, args.out_dir)
    if args.command == "score-map":
        return await service.score_map(args.pred_dir, args.gt_dir)
    if args.command == "score-traj":
        return await service.score_traj(args.pred_file, args.gt_file)
    if args.command == "corrupt":
        return await service.corrupt(args.image_dir, args.out_dir, args.kind, args.severity)
    if args.command == "resample":
        return await service.resample(args.input, args.output)
    if args.command == "validate":
        return await service.validate(args.annotations)
    if args.command == "compare-oracle":
        return await service.compare_oracle(args.annotations, args.oracle_formula)
    if args.command == "score-robustness":
        return await service.score_robustness(args.pred_root, args.gt_dir)
    if args.command == "predict-map":
        return await service.predict_map(args.annotations, args.out_dir, BandPredictorParams(half_width=args.half_width))
    if args.command == "predict-traj":
        return await service.predict_traj(args.input, args.output, args.n)
    raise ValueError(f"unknown command '{args.command}'")


async def main(argv: Optional[List[str]] = None) -> int:
    """Application main entry point."""
    args = build_parser().parse_args(argv)

    try:
        config = load_config(args.config).with_overrides(flag_overrides(args))
    except OSError as e:
        setup_logger(log_dir=None)
        logger.error(f"Failed to read configuration: {e}")
        return EXIT_IO
    except (ValueError, yaml.YAMLError) as e:
        setup_logger(log_dir=None)
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE

    setup_logger(config.runtime.log_level, config.runtime.log_dir)
    dev_log(f"Running '{args.command}'", "INFO")

    reports = ReportService()
    service = PipelineService(config, reports)
    try:
        report = await run_command(service, args)
        if args.report:
            await reports.write_report(report, args.report)
        else:
            sys.stdout.write(render_report(report).decode("utf-8"))
    except ConfmapError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE
    except OSError as e:
        logger.error(f"{args.command} I/O error: {e}")
        return EXIT_IO
    except ValueError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE

    summary = describe(report)
    print(summary, file=sys.stdout if args.report else sys.stderr)
    return EXIT_FAILURE if report.passed is False else EXIT_OK


# Entry point for the application
if __name__ == "__main__":
    exit_code = asyncio.run(main())
    sys.exit(exit_code)
