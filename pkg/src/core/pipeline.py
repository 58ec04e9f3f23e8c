"""
Confmap Pipeline Core

This module runs the batch commands: it reads inputs, fans frames out to worker
threads, writes outputs and assembles the run report. Frames may finish in any
order; reports are always sorted by frame_id.
"""

import asyncio
from pathlib import Path
from typing import Any, Awaitable, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from src.core.annotations import (
    parse_annotations,
    parse_trajectory_file,
    resample_trajectory,
    serialize_trajectories,
)
from src.core.baseline import extrapolate_trajectory, predict_map_from_trajectory
from src.core.confidence import generate as generate_map
from src.core.confidence import oracle_generate
from src.core.corruption import TABLE_VERSION, apply, expand_specs, psnr
from src.core.exceptions import (
    AnnotationValidationError,
    ConfmapError,
    FrameMismatchError,
    GenerationError,
)
from src.core.logger import dev_log, logger
from src.core.metrics import aggregate_map_scores, aggregate_traj_scores, score_map, score_trajectory, summarize_robustness
from src.models.annotation import AnnotationRecord
from src.models.confidence import BandPredictorParams, ConfidenceFormula, GenerationParams
from src.models.config import AppConfig
from src.models.corruption import CorruptionKind
from src.models.scores import TOOL_VERSION, FrameEntry, MapScore, RunReport
from src.services.image_io import decode_rgb_png, encode_png, encode_rgb_png, load_map_png
from src.services.report_service import ReportService

SIDECAR_NAME = "generation_params.json"
SEVERITIES = (1, 2, 3, 4, 5)

T = TypeVar("T")
R = TypeVar("R")


def _png_frames(directory: Union[str, Path]) -> Dict[str, Path]:
    """PNG files of a directory keyed by file stem.

    Raises:
        FileNotFoundError: If the directory does not exist
        NotADirectoryError: If the path is not a directory
    """
    directory = Path(directory)
    if not directory.exists():
        raise FileNotFoundError(f"directory not found: {directory}")
    if not directory.is_dir():
        raise NotADirectoryError(f"not a directory: {directory}")
    return {path.stem: path for path in sorted(directory.glob("*.png")) if path.is_file()}


def _read_bytes(path: Union[str, Path]) -> bytes:
    return Path(path).read_bytes()


def _generate_png(record: AnnotationRecord, params: GenerationParams, workers: int) -> Tuple[bytes, float]:
    confidence = generate_map(record, params, workers=workers)
    return encode_png(confidence), float(confidence.values.mean())


def _predict_png(record: AnnotationRecord, params: BandPredictorParams) -> Tuple[bytes, float]:
    prediction = predict_map_from_trajectory(record.trajectory, record.width, record.height, params)
    return encode_png(prediction), float(prediction.values.mean())


def _in_frame(frame_id: str, op: Callable[[], R]) -> R:
    """Run op, prefixing any ValueError with the frame it came from."""
    try:
        return op()
    except ValueError as e:
        raise ValueError(f"frame '{frame_id}': {e}") from e


def _score_pair(pred_path: Path, gt_path: Path, w_out: float) -> MapScore:
    return score_map(load_map_png(pred_path), load_map_png(gt_path), w_out)


class PipelineService:
    """Core service running batch commands over annotated frames."""

    def __init__(self, config: AppConfig, reports: Optional[ReportService] = None):
        """Initialize the pipeline service.

        Args:
            config: Application configuration with command-line overrides applied
            reports: Writer for output files; a fresh one by default
        """
        self.config = config
        self.reports = reports or ReportService()

    async def _bounded(self, items: Sequence[T], worker: Callable[[T], Awaitable[R]]) -> List[Union[R, BaseException]]:
        """Run worker over items with at most runtime.threads in flight; results keep input order."""
        semaphore = asyncio.Semaphore(self.config.runtime.threads)

        async def run_one(item: T):
            async with semaphore:
                return await worker(item)

        return await asyncio.gather(*(run_one(item) for item in items), return_exceptions=True)

    @staticmethod
    def _raise_first(results: Iterable[Any]) -> None:
        for result in results:
            if isinstance(result, BaseException):
                raise result

    def _report(self, command: str, arguments: Dict[str, Any], **fields) -> RunReport:
        echo = {
            "settings": self.config.to_dict(),
            "arguments": {k: (str(v) if isinstance(v, Path) else v) for k, v in arguments.items()},
        }
        return RunReport(command=command, config=echo, **fields)

    def _match_frames(self, predicted: Iterable[str], truth: Iterable[str], label: str) -> Tuple[List[str], List[str]]:
        """Frame ids present on both sides, and those missing a counterpart.

        Raises:
            FrameMismatchError: Under strict mode, if anything is missing or nothing matches
        """
        predicted, truth = set(predicted), set(truth)
        common = sorted(predicted & truth)
        missing = sorted(predicted ^ truth)
        for frame_id in missing:
            side = "ground truth" if frame_id in predicted else "prediction"
            logger.warning(f"{label}: frame '{frame_id}' has no {side} counterpart")
        if self.config.runtime.strict and (missing or not common):
            reason = "no frames in common" if not common else f"{len(missing)} frames without counterpart"
            raise FrameMismatchError(f"{label}: {reason}", missing)
        if not common:
            logger.warning(f"{label}: no frames in common; nothing scored")
        return common, missing

    async def generate(self, annotations_path: Union[str, Path], out_dir: Union[str, Path]) -> RunReport:
        """Write one confidence PNG per record plus the generation sidecar.

        Raises:
            AnnotationParseError: If the annotation file is malformed
            AnnotationValidationError: If any record is invalid; nothing is written
            GenerationError: If a record cannot be generated; outputs are removed
                unless runtime.keep_partial is set, in which case the sidecar marks them partial
            OSError: If inputs cannot be read or outputs written
        """
        dev_log(f"Generating confidence maps from {annotations_path}", "INFO")
        records = parse_annotations(await asyncio.to_thread(_read_bytes, annotations_path))
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        params = self.config.generation.to_params()
        # One frame gets every thread; several frames get one each
        workers = self.config.runtime.threads if len(records) == 1 else 1

        async def work(record: AnnotationRecord) -> Dict[str, Any]:
            data, mean = await asyncio.to_thread(_generate_png, record, params, workers)
            name = f"{record.frame_id}.png"
            await self.reports.write_bytes(out_dir / name, data)
            return {"output": name, "mean_confidence": mean}

        results = await self._bounded(records, work)

        entries, failed, unexpected = [], [], []
        for record, result in zip(records, results):
            if isinstance(result, ConfmapError):
                logger.error(f"Generation failed for frame '{record.frame_id}': {result}")
                failed.append(record.frame_id)
            elif isinstance(result, BaseException):
                unexpected.append(result)
            else:
                entries.append(FrameEntry(frame_id=record.frame_id, scores=result))

        partial = bool(failed or unexpected)
        if partial and not self.config.runtime.keep_partial:
            removed = await self.reports.remove_written()
            dev_log(f"Removed {removed} partial outputs", "WARN")
        else:
            await self.reports.write_json(out_dir / SIDECAR_NAME, {
                "tool_version": TOOL_VERSION,
                "params": params.to_dict(),
                "frames": sorted(entry.frame_id for entry in entries),
                "failed": sorted(failed),
                "partial": partial,
            })

        self._raise_first(unexpected)
        if failed:
            raise GenerationError(f"generation failed for frames: {', '.join(sorted(failed))}")

        dev_log(f"Generated {len(entries)} confidence maps into {out_dir}", "DONE")
        return self._report(
            "generate",
            {"annotations": annotations_path, "out_dir": out_dir},
            per_frame=entries,
            aggregate={"frames": len(entries), "params": params.to_dict()},
        )

    async def score_map(self, pred_dir: Union[str, Path], gt_dir: Union[str, Path]) -> RunReport:
        """Score predicted confidence PNGs against ground-truth PNGs of the same frame_id."""
        dev_log(f"Scoring maps in {pred_dir} against {gt_dir}", "INFO")
        predicted, truth = _png_frames(pred_dir), _png_frames(gt_dir)
        common, missing = self._match_frames(predicted, truth, "score-map")
        w_out = self.config.metrics.w_out

        async def work(frame_id: str) -> MapScore:
            return await asyncio.to_thread(_score_pair, predicted[frame_id], truth[frame_id], w_out)

        results = await self._bounded(common, work)
        self._raise_first(results)

        dev_log(f"Scored {len(common)} maps", "DONE")
        return self._report(
            "score-map",
            {"pred_dir": pred_dir, "gt_dir": gt_dir},
            per_frame=[FrameEntry(frame_id=f, scores=s.to_dict()) for f, s in zip(common, results)],
            aggregate=aggregate_map_scores(results),
            missing=missing,
        )

    async def score_traj(self, pred_file: Union[str, Path], gt_file: Union[str, Path]) -> RunReport:
        """Score predicted trajectories after resampling both sides to metrics.resample_n points."""
        dev_log(f"Scoring trajectories in {pred_file} against {gt_file}", "INFO")
        predicted = parse_trajectory_file(await asyncio.to_thread(_read_bytes, pred_file))
        truth = parse_trajectory_file(await asyncio.to_thread(_read_bytes, gt_file))
        common, missing = self._match_frames(predicted, truth, "score-traj")
        n = self.config.metrics.resample_n

        scores = [_in_frame(f, lambda f=f: score_trajectory(predicted[f], truth[f], resample_n=n)) for f in common]

        dev_log(f"Scored {len(common)} trajectories", "DONE")
        return self._report(
            "score-traj",
            {"pred_file": pred_file, "gt_file": gt_file},
            per_frame=[FrameEntry(frame_id=f, scores=s.to_dict()) for f, s in zip(common, scores)],
            aggregate=aggregate_traj_scores(scores),
            missing=missing,
        )

    async def corrupt(
        self,
        image_dir: Union[str, Path],
        out_dir: Union[str, Path],
        kinds: Sequence[CorruptionKind],
        severities: Sequence[int] = SEVERITIES,
    ) -> RunReport:
        """Write <frame_id>.<kind>.s<severity>.png for every input PNG, kind and severity."""
        dev_log(f"Corrupting images in {image_dir}", "INFO")
        images = _png_frames(image_dir)
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        specs = expand_specs(kinds, severities, self.config.corruption.seed)

        async def work(frame_id: str) -> Dict[str, float]:
            image = decode_rgb_png(await asyncio.to_thread(_read_bytes, images[frame_id]))
            scores = {}
            for spec in specs:
                corrupted = await asyncio.to_thread(apply, image, spec)
                label = f"{spec.kind.value}.s{spec.severity}"
                await self.reports.write_bytes(out_dir / f"{frame_id}.{label}.png", encode_rgb_png(corrupted))
                scores[label] = psnr(image, corrupted)
            return scores

        frame_ids = sorted(images)
        results = await self._bounded(frame_ids, work)
        self._raise_first(results)

        outputs = len(frame_ids) * len(specs)
        dev_log(f"Wrote {outputs} corrupted images into {out_dir}", "DONE")
        return self._report(
            "corrupt",
            {
                "image_dir": image_dir,
                "out_dir": out_dir,
                "kinds": [CorruptionKind(k).value for k in kinds],
                "severities": list(severities),
            },
            per_frame=[FrameEntry(frame_id=f, scores={"psnr": s}) for f, s in zip(frame_ids, results)],
            aggregate={"images": len(frame_ids), "outputs": outputs, "table_version": TABLE_VERSION},
        )

    async def resample(self, input_path: Union[str, Path], out_path: Union[str, Path]) -> RunReport:
        """Resample every trajectory of an annotation or prediction file to metrics.resample_n points."""
        n = self.config.metrics.resample_n
        trajectories = parse_trajectory_file(await asyncio.to_thread(_read_bytes, input_path))
        resampled = {
            frame_id: _in_frame(frame_id, lambda t=t: resample_trajectory(t, n))
            for frame_id, t in trajectories.items()
        }
        await self.reports.write_bytes(out_path, serialize_trajectories(resampled))

        dev_log(f"Resampled {len(resampled)} trajectories to {n} points", "DONE")
        return self._report(
            "resample",
            {"input": input_path, "output": out_path},
            per_frame=[
                FrameEntry(frame_id=f, scores={
                    "points_in": len(trajectories[f]),
                    "points_out": n,
                    "arc_length_in": trajectories[f].arc_length(),
                    "arc_length_out": resampled[f].arc_length(),
                })
                for f in resampled
            ],
            aggregate={"frames": len(resampled)},
        )

    async def predict_map(
        self,
        annotations_path: Union[str, Path],
        out_dir: Union[str, Path],
        params: BandPredictorParams,
    ) -> RunReport:
        """Write the distance-band baseline map of every record as <frame_id>.png."""
        dev_log(f"Predicting band maps from {annotations_path} (half width {params.half_width})", "INFO")
        records = parse_annotations(await asyncio.to_thread(_read_bytes, annotations_path))
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        async def work(record: AnnotationRecord) -> Dict[str, Any]:
            data, mean = await asyncio.to_thread(_predict_png, record, params)
            name = f"{record.frame_id}.png"
            await self.reports.write_bytes(out_dir / name, data)
            return {"output": name, "mean_confidence": mean}

        results = await self._bounded(records, work)
        self._raise_first(results)

        return self._report(
            "predict-map",
            {"annotations": annotations_path, "out_dir": out_dir, "half_width": params.half_width},
            per_frame=[FrameEntry(frame_id=r.frame_id, scores=s) for r, s in zip(records, results)],
            aggregate={"frames": len(records)},
        )

    async def predict_traj(self, input_path: Union[str, Path], out_path: Union[str, Path], n: int) -> RunReport:
        """Extrapolate every trajectory of a file by n points and write a prediction file."""
        histories = parse_trajectory_file(await asyncio.to_thread(_read_bytes, input_path))
        predicted = {frame_id: extrapolate_trajectory(h, n) for frame_id, h in histories.items()}
        await self.reports.write_bytes(out_path, serialize_trajectories(predicted))

        dev_log(f"Extrapolated {len(predicted)} trajectories by {n} points", "DONE")
        return self._report(
            "predict-traj",
            {"input": input_path, "output": out_path, "n": n},
            per_frame=[
                FrameEntry(frame_id=f, scores={"history_points": len(histories[f]), "points_out": n})
                for f in predicted
            ],
            aggregate={"frames": len(predicted)},
        )

    async def validate(self, annotations_path: Union[str, Path]) -> RunReport:
        """Check an annotation file; invalid records are listed in the report instead of raising."""
        raw = await asyncio.to_thread(_read_bytes, annotations_path)
        arguments = {"annotations": annotations_path}
        try:
            records = parse_annotations(raw)
        except AnnotationValidationError as e:
            dev_log(f"{len(e.frame_ids)} invalid records in {annotations_path}", "ERROR")
            return self._report(
                "validate",
                arguments,
                aggregate={
                    "invalid_frames": e.frame_ids,
                    "issues": [issue._asdict() for issue in e.issues],
                },
                passed=False,
            )

        dev_log(f"{len(records)} records valid", "DONE")
        return self._report(
            "validate",
            arguments,
            per_frame=[
                FrameEntry(frame_id=r.frame_id, scores={
                    "width": r.width,
                    "height": r.height,
                    "trajectory_points": len(r.trajectory),
                    "margin_vertices": len(r.margin),
                })
                for r in records
            ],
            aggregate={"records": len(records), "issues": []},
            passed=True,
        )

    async def compare_oracle(
        self,
        annotations_path: Union[str, Path],
        oracle_formula: Optional[ConfidenceFormula] = None,
    ) -> RunReport:
        """Compare the accelerated generator with the exhaustive oracle; passes iff every pixel matches."""
        raw = await asyncio.to_thread(_read_bytes, annotations_path)
        if raw.strip():
            records = parse_annotations(raw)
        else:
            records = []
        if not records:
            dev_log(f"No records in {annotations_path}; comparison passes vacuously", "WARN")

        params = self.config.generation.to_params()
        oracle_params = params
        if oracle_formula is not None:
            oracle_params = GenerationParams(**{**params.to_dict(), "formula": ConfidenceFormula(oracle_formula)})

        async def work(record: AnnotationRecord) -> Dict[str, Any]:
            fast = await asyncio.to_thread(generate_map, record, params)
            reference = await asyncio.to_thread(oracle_generate, record, oracle_params)
            difference = np.abs(fast.values - reference.values)
            return {"max_abs_diff": float(difference.max()), "differing_pixels": int(np.count_nonzero(difference))}

        results = await self._bounded(records, work)
        self._raise_first(results)

        max_diff = max((r["max_abs_diff"] for r in results), default=0.0)
        passed = max_diff == 0.0
        dev_log(f"Oracle comparison {'passed' if passed else 'FAILED'} (max discrepancy {max_diff})", "DONE" if passed else "ERROR")
        return self._report(
            "compare-oracle",
            {"annotations": annotations_path, "oracle_params": oracle_params.to_dict()},
            per_frame=[FrameEntry(frame_id=r.frame_id, scores=s) for r, s in zip(records, results)],
            aggregate={"frames": len(records), "max_abs_diff": max_diff},
            passed=passed,
        )

    async def score_robustness(self, pred_root: Union[str, Path], gt_dir: Union[str, Path]) -> RunReport:
        """Score a <kind>/s<severity>/<frame_id>.png prediction tree and summarize MAE per corruption.

        Each cell's MAE is the pooled MAE over its frames.
        """
        dev_log(f"Scoring robustness tree {pred_root} against {gt_dir}", "INFO")
        pred_root = Path(pred_root)
        truth = _png_frames(gt_dir)
        if not pred_root.is_dir():
            raise FileNotFoundError(f"directory not found: {pred_root}")
        w_out = self.config.metrics.w_out

        table: Dict[Tuple[CorruptionKind, int], float] = {}
        entries: List[FrameEntry] = []
        all_missing: List[str] = []
        for kind in CorruptionKind:
            for severity in SEVERITIES:
                cell = f"{kind.value}/s{severity}"
                cell_dir = pred_root / kind.value / f"s{severity}"
                if not cell_dir.is_dir():
                    continue
                predicted = _png_frames(cell_dir)
                common, missing = self._match_frames(predicted, truth, cell)
                all_missing.extend(f"{cell}/{frame_id}" for frame_id in missing)
                if not common:
                    continue

                async def work(frame_id: str, predicted=predicted) -> MapScore:
                    return await asyncio.to_thread(_score_pair, predicted[frame_id], truth[frame_id], w_out)

                results = await self._bounded(common, work)
                self._raise_first(results)
                pooled = aggregate_map_scores(results)["pooled"]
                table[(kind, severity)] = pooled["mae"]
                entries.append(FrameEntry(frame_id=cell, scores={**pooled, "frames": len(common)}))

        if not table:
            raise FrameMismatchError(f"no scorable <kind>/s<severity> cells under {pred_root}", all_missing)

        summary = summarize_robustness(table)
        dev_log(f"Scored {len(table)} corruption cells; overall MAE {summary.overall:.3f}", "DONE")
        return self._report(
            "score-robustness",
            {"pred_root": pred_root, "gt_dir": gt_dir},
            per_frame=entries,
            aggregate=summary.to_dict(),
            missing=all_missing,
        )


def describe(report: RunReport) -> str:
    """One-line human summary of a report."""
    aggregate = report.aggregate
    if report.command in ("score-map", "score-robustness", "score-traj"):
        if report.command == "score-robustness":
            return f"score-robustness: {len(report.per_frame)} cells, overall MAE {aggregate['overall']:.4f}"
        pooled = aggregate.get("pooled")
        if not pooled:
            return f"{report.command}: no frames scored"
        shown = ", ".join(f"{k}={v:.4f}" for k, v in sorted(pooled.items()) if isinstance(v, float))
        return f"{report.command}: {aggregate['frames']} frames, pooled {shown}"
    if report.passed is not None:
        return f"{report.command}: {'PASS' if report.passed else 'FAIL'}"
    return f"{report.command}: {len(report.per_frame)} frames"
