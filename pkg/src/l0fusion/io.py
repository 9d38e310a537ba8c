"""CSV datasets, key=value configuration files and tidy result tables.

Dataset files have a header row with a column ``y``, feature columns
``x1..xp``, covariate columns ``z1..zq`` and optionally ``beta_true``, whose
first ``p`` rows hold the true fused coefficients (remaining cells empty).
"""

from __future__ import annotations

import csv
import math
import re
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .numerics import Dataset


class InputFormatError(ValueError):
    """Malformed input file; the message names the offending line or row."""


def _indexed(header: list[str], prefix: str) -> list[int]:
    cols = {}
    for i, name in enumerate(header):
        m = re.fullmatch(prefix + r"(\d+)", name)
        if m:
            cols[int(m.group(1))] = i
    if sorted(cols) != list(range(1, len(cols) + 1)):
        raise InputFormatError(f"columns {prefix}1..{prefix}{len(cols)} must be numbered consecutively")
    return [cols[k] for k in sorted(cols)]


def read_dataset(path: str | Path) -> tuple[Dataset, np.ndarray | None]:
    """Load a dataset CSV; returns the data and the true coefficients if present."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "y" not in header:
        raise InputFormatError(f"{path}: row 1: missing column 'y'")
    iy = header.index("y")
    ix = _indexed(header, "x")
    iz = _indexed(header, "z")
    ib = header.index("beta_true") if "beta_true" in header else None
    if not ix:
        raise InputFormatError(f"{path}: row 1: no feature columns x1..xp")
    p = len(ix)

    def num(row_no: int, cell: str, name: str) -> float:
        try:
            v = float(cell)
        except ValueError:
            raise InputFormatError(f"{path}: row {row_no}: column {name}: not a number: {cell!r}") from None
        if not math.isfinite(v):
            raise InputFormatError(f"{path}: row {row_no}: column {name}: non-finite value")
        return v

    y, X, Z, beta = [], [], [], []
    for row_no, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputFormatError(
                f"{path}: row {row_no}: expected {len(header)} fields, found {len(row)}"
            )
        y.append(num(row_no, row[iy], "y"))
        X.append([num(row_no, row[i], header[i]) for i in ix])
        Z.append([num(row_no, row[i], header[i]) for i in iz])
        if ib is not None and row[ib].strip():
            if len(beta) != row_no - 2:
                raise InputFormatError(f"{path}: row {row_no}: beta_true has a gap above")
            beta.append(num(row_no, row[ib], "beta_true"))
    if not y:
        raise InputFormatError(f"{path}: no data rows")
    n = len(y)
    data = Dataset(np.array(y), np.array(X).reshape(n, p), np.array(Z).reshape(n, len(iz)))
    truth = None
    if ib is not None:
        if len(beta) != p:
            raise InputFormatError(f"{path}: beta_true must fill the first {p} rows, found {len(beta)}")
        truth = np.array(beta)
    return data, truth


def write_dataset(path: str | Path, data: Dataset, beta_true: np.ndarray | None = None) -> None:
    header = ["y"] + [f"x{j + 1}" for j in range(data.p)] + [f"z{k + 1}" for k in range(data.q)]
    if beta_true is not None:
        if len(beta_true) > data.n:
            raise ValueError("beta_true needs at least p rows")
        header.append("beta_true")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(data.n):
            row = [repr(float(data.y[i]))]
            row += [repr(float(v)) for v in data.X[i]]
            row += [repr(float(v)) for v in data.Z[i]]
            if beta_true is not None:
                row.append(repr(float(beta_true[i])) if i < len(beta_true) else "")
            w.writerow(row)


def read_vector(path: str | Path) -> np.ndarray:
    """One number per row, optional single header line (e.g. ``beta``)."""
    values = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip().rstrip(",")
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                if line_no == 1:
                    continue
                raise InputFormatError(f"{path}: line {line_no}: not a number: {text!r}") from None
    return np.array(values)


def write_vector(path: str | Path, values: Iterable[float], name: str = "beta") -> None:
    with open(path, "w") as fh:
        fh.write(name + "\n")
        for v in values:
            fh.write(f"{float(v)!r}\n")


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise InputFormatError(f"{path}: line {line_no}: expected key = value")
            key, value = (part.strip() for part in text.split("=", 1))
            if not key:
                raise InputFormatError(f"{path}: line {line_no}: empty key")
            out[key.replace("-", "_")] = value
    return out


def format_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(format_value(x) for x in v)
    return str(v)


def write_table(path_or_file, rows: list[Mapping[str, Any]], fields: list[str]) -> None:
    """Comma-separated table with a header row; ``None`` and NaN become empty cells."""
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([format_value(row.get(f)) for f in fields])
    finally:
        if own:
            fh.close()
