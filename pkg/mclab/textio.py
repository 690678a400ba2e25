"""
Text file formats used by the lab.

- matrix / mask: "m n" header, then m lines of n decimal numbers
- step graphon: "p q" header, row breakpoints, column breakpoints, then p
  lines of q block values
- experiment config: "key = value" lines with "#" comments; solver and probe
  settings use "solver." and "probe." prefixes

Every reader reports malformed input as FormatError with a 1-based line
number. Every writer replaces its target atomically.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from mclab.errors import FormatError, LabError
from mclab.graphon import StepGraphon
from mclab.models import ExperimentConfig, ProbeConfig, SolverConfig


# --- Atomic writes ---
def atomic_write_text(path, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, payload) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return atomic_write_text(path, buffer.getvalue())


# --- Tokenizing ---
def _read_lines(path) -> List[Tuple[int, str]]:
    """Non-blank lines with their 1-based numbers."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(path, 0, f"cannot read file: {exc.strerror or exc}") from exc
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        raise FormatError(path, line, f"invalid UTF-8 byte 0x{data[exc.start]:02x}") from exc
    return [(no, line.strip()) for no, line in enumerate(text.splitlines(), start=1) if line.strip()]


def _numbers(path, line_no: int, line: str, count: int, kind=float) -> list:
    parts = line.split()
    if len(parts) != count:
        raise FormatError(path, line_no, f"expected {count} values, found {len(parts)}")
    try:
        values = [kind(p) for p in parts]
    except ValueError:
        raise FormatError(path, line_no, f"not a {'number' if kind is float else 'whole number'}: {line!r}") from None
    if kind is float and not all(np.isfinite(values)):
        raise FormatError(path, line_no, "values must be finite")
    return values


def _header(path, lines, what: str) -> Tuple[int, int]:
    if not lines:
        raise FormatError(path, 1, f"empty {what} file")
    no, line = lines[0]
    rows, cols = _numbers(path, no, line, 2, int)
    if rows < 1 or cols < 1:
        raise FormatError(path, no, f"{what} dimensions must be positive, got {rows} x {cols}")
    return rows, cols


# --- Matrices and masks ---
def read_matrix(path) -> np.ndarray:
    lines = _read_lines(path)
    m, n = _header(path, lines, "matrix")
    body = lines[1:]
    if len(body) != m:
        at = body[m][0] if len(body) > m else (lines[-1][0] + 1)
        raise FormatError(path, at, f"expected {m} matrix rows, found {len(body)}")
    A = np.array([_numbers(path, no, line, n) for no, line in body], dtype=np.float64)
    A.setflags(write=False)
    return A


def read_mask(path) -> np.ndarray:
    lines = _read_lines(path)
    A = read_matrix(path)
    bad = np.argwhere((A != 0.0) & (A != 1.0))
    if bad.size:
        i, j = bad[0]
        raise FormatError(path, lines[1 + i][0], f"mask entry in column {j + 1} is {A[i, j]!r}, expected 0 or 1")
    return A


def format_matrix(A) -> str:
    A = np.asarray(A, dtype=np.float64)
    rows = [" ".join(format(float(v), ".17g") for v in row) for row in A]
    return "\n".join([f"{A.shape[0]} {A.shape[1]}", *rows]) + "\n"


def write_matrix(path, A) -> Path:
    return atomic_write_text(path, format_matrix(A))


# --- Step graphons ---
def read_step_graphon(path) -> StepGraphon:
    lines = _read_lines(path)
    p, q = _header(path, lines, "step graphon")
    if len(lines) != 3 + p:
        at = lines[-1][0] + 1 if len(lines) < 3 + p else lines[3 + p][0]
        raise FormatError(path, at, f"expected {3 + p} non-blank lines, found {len(lines)}")
    (rno, rline), (cno, cline) = lines[1], lines[2]
    row_breaks = _numbers(path, rno, rline, p + 1)
    col_breaks = _numbers(path, cno, cline, q + 1)
    values = [_numbers(path, no, line, q) for no, line in lines[3:]]
    for no, line in ((rno, row_breaks), (cno, col_breaks)):
        if line[0] != 0.0 or line[-1] != 1.0 or any(b <= a for a, b in zip(line, line[1:])):
            raise FormatError(path, no, "breakpoints must increase strictly from 0 to 1")
    for (no, _), row in zip(lines[3:], values):
        if any(v < 0.0 or v > 1.0 for v in row):
            raise FormatError(path, no, "block values must lie in [0, 1]")
    try:
        return StepGraphon(row_breaks, col_breaks, values, name=Path(path).stem)
    except LabError as exc:
        raise FormatError(path, lines[0][0], str(exc)) from exc


def write_step_graphon(path, W: StepGraphon) -> Path:
    p, q = W.block_shape
    fmt = lambda vals: " ".join(format(float(v), ".17g") for v in vals)
    body = [f"{p} {q}", fmt(W.row_breaks), fmt(W.col_breaks), *(fmt(row) for row in W.values)]
    return atomic_write_text(path, "\n".join(body) + "\n")


# --- Experiment config ---
_LIST_KEYS = {"sizes"}


def _parse_value(key: str, raw: str):
    if key in _LIST_KEYS:
        return [int(tok) for tok in raw.replace(",", " ").split()]
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    return raw


def read_config(path) -> ExperimentConfig:
    """
    Parse a key = value experiment config. Unknown keys and malformed lines
    raise FormatError; out-of-range values raise pydantic's ValidationError.
    """
    top, nested = {}, {"solver": {}, "probe": {}}
    sections = {"solver": SolverConfig.model_fields, "probe": ProbeConfig.model_fields}
    for no, line in _read_lines(path):
        if line.startswith("#"):
            continue
        line = line.split("#", 1)[0].strip()
        if "=" not in line:
            raise FormatError(path, no, f"expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if not key or not raw:
            raise FormatError(path, no, "empty key or value")
        prefix, _, name = key.partition(".")
        try:
            if name:
                if prefix not in sections or name not in sections[prefix]:
                    raise FormatError(path, no, f"unknown setting {key!r}")
                nested[prefix][name] = _parse_value(name, raw)
            else:
                if key not in ExperimentConfig.model_fields or key in sections:
                    raise FormatError(path, no, f"unknown setting {key!r}")
                top[key] = _parse_value(key, raw)
        except ValueError:
            raise FormatError(path, no, f"malformed value for {key!r}: {raw!r}") from None
    return ExperimentConfig(solver=SolverConfig(**nested["solver"]), probe=ProbeConfig(**nested["probe"]), **top)
