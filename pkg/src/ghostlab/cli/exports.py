"""Delimited text exports: one header line, floats at 17 significant digits."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ghostlab.core.document import format_float

logger = logging.getLogger(__name__)

DELIMITER = ","
FLOAT_FORMAT = "%.17g"


def write_array(path: Path, columns: Sequence[str], data: np.ndarray) -> Path:
    data = np.asarray(data, dtype=np.float64).reshape(-1, len(columns))
    np.savetxt(
        path,
        data,
        fmt=FLOAT_FORMAT,
        delimiter=DELIMITER,
        header=DELIMITER.join(columns),
        comments="",
    )
    logger.info("Wrote %s (%d rows)", path, len(data))
    return path


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if value is None:
        return ""
    return str(value)


def write_rows(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Mixed text and numeric rows."""
    lines = [DELIMITER.join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"Row has {len(row)} cells, expected {len(columns)}")
        lines.append(DELIMITER.join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote %s (%d rows)", path, len(lines) - 1)
    return path
