"""CSV formats and atomic file writes."""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bench import StreamInstance


class DataError(ValueError):
    """Malformed data in an input file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence], footer: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def stream_csv(stream: Sequence[StreamInstance]) -> str:
    n = stream[0].x.shape[0] if stream else 2
    header = ["h"] + [f"x{j + 1}" for j in range(n)] + ["label"]
    rows = ([inst.h] + [repr(float(v)) for v in inst.x] + [fmt(inst.true_label)]
            for inst in stream)
    return csv_text(header, rows)


def read_stream_csv(path: str | os.PathLike) -> tuple[list[StreamInstance], bool]:
    """Parse ``[h,]x1..xn[,label]`` rows. Returns (instances, labelled).

    Raises :class:`DataError` pointing at the first bad line.
    """
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines()]
    reader = csv.reader(lines)
    try:
        header = [c.strip() for c in next(reader)]
    except StopIteration:
        raise DataError("empty file, expected a header", 1) from None

    feats = [i for i, c in enumerate(header) if c.startswith("x") and c[1:].isdigit()]
    expected = [f"x{j + 1}" for j in range(len(feats))]
    if not feats or [header[i] for i in feats] != expected:
        raise DataError(f"header must name attributes x1..xn, got {header}", 1)
    unknown = set(header) - set(expected) - {"h", "label"}
    if unknown:
        raise DataError(f"unknown columns {sorted(unknown)}", 1)
    h_col = header.index("h") if "h" in header else None
    lab_col = header.index("label") if "label" in header else None

    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row or row[0].startswith("#"):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            x = np.array([float(row[i]) for i in feats])
        except ValueError:
            raise DataError(f"non-numeric attribute in {row}", lineno) from None
        if not all(math.isfinite(v) for v in x):
            raise DataError(f"non-finite attribute in {row}", lineno)
        if np.any(x < 0) or np.any(x > 1):
            raise DataError(f"attribute outside [0, 1] in {row}", lineno)
        label = None
        if lab_col is not None:
            try:
                label = int(row[lab_col])
            except ValueError:
                raise DataError(f"label {row[lab_col]!r} is not an integer", lineno) from None
        try:
            h = int(row[h_col]) if h_col is not None else len(out) + 1
        except ValueError:
            raise DataError(f"step index {row[h_col]!r} is not an integer", lineno) from None
        out.append(StreamInstance(h, x, label))
    return out, lab_col is not None
