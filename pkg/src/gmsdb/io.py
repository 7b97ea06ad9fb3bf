"""CSV dialect shared by all commands.

Comma separated, ``.`` decimal point, UTF-8, one header row, and any line
starting with ``#`` treated as a comment. A column named ``label`` holds
reference labels and never enters the feature matrix.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LABEL_COLUMN = "label"


class CsvFormatError(ValueError):
    """Raised for unreadable or non-numeric CSV input."""


@dataclass
class Table:
    features: np.ndarray
    labels: np.ndarray | None
    feature_names: list[str]
    comments: list[str] = field(default_factory=list)

    @property
    def spec(self) -> dict | None:
        """Generator spec echoed in the first JSON comment line, if any."""
        for line in self.comments:
            try:
                doc = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(doc, dict):
                return doc
        return None


def _parse_label(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def read_table(path) -> Table:
    if str(path) == "-":
        text = sys.stdin.read()
    else:
        text = Path(path).read_text(encoding="utf-8")
    comments, rows = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comments.append(stripped[1:].strip())
            continue
        rows.append((lineno, next(csv.reader([line]))))
    if not rows:
        raise CsvFormatError(f"{path}: no header row")
    _, header = rows[0]
    header = [h.strip() for h in header]
    label_idx = header.index(LABEL_COLUMN) if LABEL_COLUMN in header else None
    feature_idx = [k for k in range(len(header)) if k != label_idx]
    if not feature_idx:
        raise CsvFormatError(f"{path}: no feature columns")

    features, labels = [], []
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise CsvFormatError(
                f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}")
        values = []
        for k in feature_idx:
            try:
                v = float(row[k])
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {lineno}, column {k + 1} ({header[k]!r}): "
                    f"cannot parse {row[k]!r} as a number") from None
            if not np.isfinite(v):
                raise CsvFormatError(
                    f"{path}: row {lineno}, column {k + 1} ({header[k]!r}): non-finite value")
            values.append(v)
        features.append(values)
        if label_idx is not None:
            labels.append(_parse_label(row[label_idx].strip()))

    X = np.asarray(features, dtype=float).reshape(len(features), len(feature_idx))
    y = None
    if label_idx is not None:
        y = np.asarray(labels, dtype=object if any(isinstance(v, str) for v in labels) else int)
    return Table(X, y, [header[k] for k in feature_idx], comments)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def format_csv(columns: list[str], rows, comment: dict | None = None) -> str:
    buf = io.StringIO()
    if comment is not None:
        buf.write("# " + json.dumps(comment, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def dataset_csv(points: np.ndarray, labels, spec: dict | None = None) -> str:
    d = points.shape[1]
    columns = [f"x{k}" for k in range(d)] + [LABEL_COLUMN]
    rows = ([*p, lab] for p, lab in zip(points.tolist(), np.asarray(labels).tolist()))
    return format_csv(columns, rows, spec)
