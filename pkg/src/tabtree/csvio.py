"""CSV reading and writing with fixed formatting.

Fields are quoted per RFC 4180 only when needed.  An empty field is a missing
cell, and so are the tokens ``NaN`` and ``nan`` on read.  Floats are written
with 17 significant digits, which round-trips every float64 exactly.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np
import pandas as pd

MISSING_TOKENS = ("", "NaN", "nan")
LINE_TERMINATOR = "\n"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return format(value, ".17g")
    return str(value)


def read_csv_text(text: str, missing_tokens=MISSING_TOKENS) -> pd.DataFrame:
    """Parse CSV text into a DataFrame of text cells (``None`` for missing)."""
    try:
        rows = list(csv.reader(io.StringIO(text, newline="")))
    except csv.Error as exc:
        raise ValueError(f"CSV input is malformed: {exc}") from exc
    if not rows:
        raise ValueError("CSV input has no header row")
    header, body = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise ValueError("CSV header has duplicate column names")
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ValueError(f"CSV line {i} has {len(row)} fields, expected {len(header)}")
    missing = set(missing_tokens)
    columns = {h: [None if row[j] in missing else row[j] for row in body] for j, h in enumerate(header)}
    return pd.DataFrame({h: pd.Series(v, dtype=object) for h, v in columns.items()}, columns=header)


def read_csv(path, missing_tokens=MISSING_TOKENS) -> pd.DataFrame:
    with open(path, encoding="utf-8", newline="") as fh:
        return read_csv_text(fh.read(), missing_tokens)


def _quote(field: str) -> str:
    # csv.writer leaves a bare "\r" unquoted under a "\n" terminator, so quoting is done here
    if "\x00" in field:
        raise ValueError("cannot write CSV: NUL characters are not supported")
    if any(ch in field for ch in ',"\r\n'):
        return '"' + field.replace('"', '""') + '"'
    return field


def _row(fields) -> str:
    if len(fields) == 1 and fields[0] == "":
        return '""' + LINE_TERMINATOR  # a bare empty line would read as no fields
    return ",".join(_quote(f) for f in fields) + LINE_TERMINATOR


def write_csv_text(frame: pd.DataFrame) -> str:
    columns = [frame[c].to_numpy(dtype=object) for c in frame.columns]
    lines = [_row([str(c) for c in frame.columns])]
    for i in range(len(frame)):
        lines.append(_row([format_cell(col[i]) for col in columns]))
    return "".join(lines)


def write_csv(frame: pd.DataFrame, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(write_csv_text(frame))
