"""CSV ingestion and output writers."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from bayesdcc.errors import InvalidInputError
from bayesdcc.model import ReturnsMatrix

__all__ = ["SAMPLE_DATA", "load_returns", "write_table", "format_float"]

SAMPLE_DATA = Path(__file__).with_name("data") / "sample_returns.csv"


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _select(header: list, columns, width: int) -> list[int]:
    if columns is None:
        return list(range(width))
    out = []
    for c in columns:
        if isinstance(c, (int, np.integer)) or (isinstance(c, str) and c.isdigit() and c not in header):
            i = int(c)
            if not 0 <= i < width:
                raise InvalidInputError(f"column index {i} out of range (file has {width} columns)")
            out.append(i)
        elif c in header:
            out.append(header.index(c))
        else:
            raise InvalidInputError(f"column {c!r} not found; available: {header}")
    return out


def load_returns(path, columns: Optional[Sequence] = None) -> ReturnsMatrix:
    """
    Read a comma-separated returns file.

    The first row is treated as a header when any of its cells is not numeric.
    ``columns`` selects series by header name or 0-based index. Data are used
    as given: the model assumes zero-mean returns, so nothing is demeaned.

    Raises
    ------
    InvalidInputError
        For a missing file, a non-numeric or empty cell (reported with its
        1-based line number), or fewer than two data rows.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(n, [c.strip() for c in row]) for n, row in enumerate(csv.reader(fh), start=1) if row]
    if not rows:
        raise InvalidInputError(f"{path} is empty")

    first = rows[0][1]
    has_header = not all(_is_number(c) for c in first)
    width = len(first)
    header = first if has_header else [f"y{i + 1}" for i in range(width)]
    body = rows[1:] if has_header else rows
    idx = _select(header, columns, width)

    values = np.empty((len(body), len(idx)))
    for r, (line_no, row) in enumerate(body):
        if len(row) != width:
            raise InvalidInputError(f"row {line_no}: expected {width} fields, found {len(row)}")
        for j, i in enumerate(idx):
            cell = row[i]
            try:
                v = float(cell)
            except ValueError:
                raise InvalidInputError(f"row {line_no}: non-numeric value {cell!r} in column {header[i]!r}") from None
            if not np.isfinite(v):
                raise InvalidInputError(f"row {line_no}: non-finite value {cell!r} in column {header[i]!r}")
            values[r, j] = v
    if values.shape[0] < 2:
        raise InvalidInputError(f"need at least 2 data rows, found {values.shape[0]}")
    return ReturnsMatrix(values, [header[i] for i in idx])


def format_float(v: float) -> str:
    # 17 significant digits round-trips any double
    return format(float(v), ".17g")


def write_table(path, columns: Sequence[str], data) -> Path:
    """Write a header plus rows of floats (17 significant digits)."""
    path = Path(path)
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in data:
            writer.writerow([format_float(v) for v in row])
    return path
