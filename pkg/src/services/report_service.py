"""
Confmap Report Service

This module writes run artifacts: JSON reports, the generation sidecar and
image files. Writes go through aiofiles so batch commands never block the
event loop, and every file written is tracked so a failed run can be rolled
back.
"""

import json
from pathlib import Path
from typing import Any, List, Union

import aiofiles
import aiofiles.os

from src.core.logger import logger
from src.models.scores import RunReport


def render_json(document: Any) -> bytes:
    """Stable JSON: sorted keys, two-space indent, trailing newline."""
    return (json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def render_report(report: RunReport) -> bytes:
    return render_json(report.to_dict())


class ReportService:
    """Service for writing run outputs."""

    def __init__(self):
        """Initialize report service."""
        self.written: List[Path] = []

    async def write_bytes(self, path: Union[str, Path], data: bytes) -> Path:
        """Write a file and remember it.

        Raises:
            OSError: If the file cannot be written
        """
        path = Path(path)
        async with aiofiles.open(path, "wb") as handle:
            await handle.write(data)
        self.written.append(path)
        logger.debug(f"Wrote {path} ({len(data)} bytes)")
        return path

    async def write_json(self, path: Union[str, Path], document: Any) -> Path:
        return await self.write_bytes(path, render_json(document))

    async def write_report(self, report: RunReport, path: Union[str, Path]) -> Path:
        """Write a run report as stable JSON."""
        written = await self.write_bytes(path, render_report(report))
        logger.info(f"Report for '{report.command}' written to {written}")
        return written

    async def remove_written(self) -> int:
        """Delete every file written so far; returns how many were removed."""
        removed = 0
        for path in reversed(self.written):
            try:
                await aiofiles.os.remove(path)
                removed += 1
            except FileNotFoundError:
                pass
            except OSError as e:
                logger.error(f"Could not remove partial output {path}: {e}")
        self.written.clear()
        return removed
