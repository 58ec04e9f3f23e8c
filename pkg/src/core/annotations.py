"""
Confmap Annotations Module

This module reads and writes annotation files and trajectory prediction files,
and resamples trajectories by arc length.

Annotation file layout (UTF-8 JSON, top-level array):

    [{"frame_id": "f001", "width": 1300, "height": 1024,
      "trajectory": [[x, y], ...], "safety_margin": [[x, y], ...]}]
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np
from pydantic import ValidationError

from src.core.exceptions import AnnotationParseError, AnnotationValidationError, ValidationIssue
from src.core.logger import logger
from src.models.annotation import AnnotationRecord, Trajectory

_VALUE_ERROR_PREFIX = "Value error, "


def _decode_json(raw: Union[bytes, str]) -> Any:
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise AnnotationParseError(f"content is not valid UTF-8: {e.reason}", e.start) from e
    else:
        text = raw
    # A BOM is tolerated; offsets still refer to the original bytes
    bom = 3 if text.startswith("\ufeff") else 0
    text = text[1:] if bom else text

    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = bom + len(text[:e.pos].encode("utf-8"))
        raise AnnotationParseError(f"malformed JSON: {e.msg} at line {e.lineno} column {e.colno}", offset) from e


def _issues_from(error: ValidationError, frame_id: Any) -> List[ValidationIssue]:
    issues = []
    for detail in error.errors():
        field = ".".join(str(part) for part in detail.get("loc", ())) or "record"
        message = detail.get("msg", "invalid value")
        if message.startswith(_VALUE_ERROR_PREFIX):
            message = message[len(_VALUE_ERROR_PREFIX):]
        issues.append(ValidationIssue(frame_id, field, message))
    return issues


def parse_annotations(raw: Union[bytes, str]) -> List[AnnotationRecord]:
    """Parse and validate the contents of an annotation file.

    Every record is checked before failing so that one error lists all
    offending frames.

    Args:
        raw: File content

    Returns:
        Validated records in file order

    Raises:
        AnnotationParseError: If the content is not well-formed JSON
        AnnotationValidationError: If any record breaks the schema or an invariant
    """
    document = _decode_json(raw)
    if not isinstance(document, list):
        raise AnnotationValidationError([
            ValidationIssue(None, "<root>", f"expected a JSON array of records, got {type(document).__name__}")
        ])

    records: List[AnnotationRecord] = []
    issues: List[ValidationIssue] = []
    seen_ids: Dict[str, int] = {}

    for index, item in enumerate(document):
        if not isinstance(item, dict):
            issues.append(ValidationIssue(None, f"[{index}]", f"record must be an object, got {type(item).__name__}"))
            continue
        frame_id = item.get("frame_id") if isinstance(item.get("frame_id"), str) else None
        try:
            record = AnnotationRecord.model_validate(item)
        except ValidationError as e:
            issues.extend(_issues_from(e, frame_id))
            continue

        if record.frame_id in seen_ids:
            issues.append(ValidationIssue(
                record.frame_id, "frame_id", f"duplicate frame_id (first used by record {seen_ids[record.frame_id]})"
            ))
            continue
        seen_ids[record.frame_id] = index
        records.append(record)

    if issues:
        for issue in issues:
            logger.warning(f"Invalid annotation: {issue}")
        raise AnnotationValidationError(issues)

    logger.debug(f"Parsed {len(records)} annotation records")
    return records


def serialize_annotations(records: Iterable[AnnotationRecord]) -> bytes:
    """Write records in the annotation file layout; parse_annotations reads it back unchanged."""
    document = [record.to_json_dict() for record in records]
    return (json.dumps(document, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def load_annotations(path: Union[str, Path]) -> List[AnnotationRecord]:
    """Read and parse an annotation file.

    Raises:
        OSError: If the file cannot be read
    """
    records = parse_annotations(Path(path).read_bytes())
    logger.info(f"Loaded {len(records)} annotation records from {path}")
    return records


def parse_trajectory_file(raw: Union[bytes, str]) -> Dict[str, Trajectory]:
    """Read per-frame trajectories.

    Accepts the prediction layout ``{frame_id: [[x, y], ...]}`` or a full
    annotation file, whose trajectories are used.

    Raises:
        AnnotationParseError: If the content is not well-formed JSON
        AnnotationValidationError: If any trajectory is invalid
    """
    document = _decode_json(raw)
    if isinstance(document, list):
        return {record.frame_id: record.trajectory for record in parse_annotations(raw)}
    if not isinstance(document, dict):
        raise AnnotationValidationError([
            ValidationIssue(None, "<root>", "expected an object mapping frame_id to points or an annotation array")
        ])

    trajectories: Dict[str, Trajectory] = {}
    issues: List[ValidationIssue] = []
    for frame_id, points in document.items():
        try:
            trajectories[frame_id] = Trajectory.model_validate(points)
        except ValidationError as e:
            issues.extend(_issues_from(e, frame_id))
    if issues:
        raise AnnotationValidationError(issues)
    return trajectories


def serialize_trajectories(trajectories: Dict[str, Trajectory]) -> bytes:
    """Write trajectories in the prediction layout, keys sorted."""
    document = {frame_id: trajectories[frame_id].to_list() for frame_id in sorted(trajectories)}
    return (json.dumps(document, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def resample_trajectory(trajectory: Union[Trajectory, Sequence[Any]], n: int) -> Trajectory:
    """Resample a polyline to n points evenly spaced by arc length.

    Args:
        trajectory: Input polyline
        n: Number of output points

    Returns:
        Trajectory starting and ending at the input endpoints, same direction

    Raises:
        ValueError: If n < 2, or if the polyline is too short for n distinct
            float64 points
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"resample count must be an integer >= 2, got {n!r}")
    if not isinstance(trajectory, Trajectory):
        trajectory = Trajectory.model_validate(trajectory)

    points = trajectory.as_array()
    segments = np.hypot(*np.diff(points, axis=0).T)
    cumulative = np.concatenate(([0.0], np.cumsum(segments)))
    targets = np.linspace(0.0, cumulative[-1], int(n))

    out = np.empty((int(n), 2), dtype=np.float64)
    out[:, 0] = np.interp(targets, cumulative, points[:, 0])
    out[:, 1] = np.interp(targets, cumulative, points[:, 1])
    out[0] = points[0]
    out[-1] = points[-1]
    collapsed = np.flatnonzero((np.diff(out, axis=0) == 0.0).all(axis=1))
    if collapsed.size:
        raise ValueError(
            f"trajectory from {points[0].tolist()} to {points[-1].tolist()} (arc length {cumulative[-1]:.3g}) "
            f"is too short for {int(n)} distinct points: outputs {collapsed[0]} and {collapsed[0] + 1} coincide"
        )
    return Trajectory.from_array(out)


__all__ = [
    "load_annotations",
    "parse_annotations",
    "parse_trajectory_file",
    "resample_trajectory",
    "serialize_annotations",
    "serialize_trajectories",
]
