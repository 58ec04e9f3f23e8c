"""
Confmap Exceptions

Error types raised by the toolkit. Argument errors on library calls are plain
ValueError; everything data-related derives from ConfmapError.
"""

from typing import List, NamedTuple, Optional


class ConfmapError(Exception):
    """Base class for toolkit errors."""


class ValidationIssue(NamedTuple):
    """One problem found while validating an annotation record."""
    frame_id: Optional[str]
    field: str
    message: str

    def __str__(self) -> str:
        frame = self.frame_id if self.frame_id is not None else "<unknown>"
        return f"frame '{frame}', field '{self.field}': {self.message}"


class AnnotationParseError(ConfmapError):
    """Annotation content is not well-formed JSON."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class AnnotationValidationError(ConfmapError):
    """One or more annotation records violate the schema or an invariant."""

    def __init__(self, issues: List[ValidationIssue]):
        self.issues = list(issues)
        lines = [str(issue) for issue in self.issues]
        super().__init__("Annotation validation failed:\n" + "\n".join(lines))

    @property
    def frame_ids(self) -> List[str]:
        """Distinct frame ids that failed, in file order."""
        seen = []
        for issue in self.issues:
            if issue.frame_id is not None and issue.frame_id not in seen:
                seen.append(issue.frame_id)
        return seen


class GenerationError(ConfmapError):
    """A confidence map cannot be generated for an annotation."""


class ImageFormatError(ConfmapError):
    """An image file does not have the expected pixel format."""


class FrameMismatchError(ConfmapError):
    """Prediction and ground-truth frame sets do not line up."""

    def __init__(self, message: str, missing: List[str]):
        super().__init__(message)
        self.missing = list(missing)
