"""Text formats: datasets as CSV, experiment configs as ``key = value`` files.

Floats are written with ``repr``, the shortest decimal string that parses back
to the same double, so write/read round-trips are bit-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import os
import platform
import sys
from typing import Optional

import numpy as np

from .data import Dataset, ExperimentConfig, validate_dataset


class CSVParseError(ValueError):
    def __init__(self, path, row: int, column: str, cell: str):
        super().__init__(f"{path}: row {row}, column {column!r}: cannot parse {cell!r} as a number")
        self.row = row
        self.column = column


def load_csv(path, delimiter: str = ",", target_column: Optional[str] = None) -> Dataset:
    """Read a headed numeric CSV.  The target column (default: the last) becomes ``y``.

    Row numbers in errors count data rows from 1, not including the header.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip().strip('"') for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if target_column is None:
        target_column = header[-1]
    if target_column not in header:
        raise KeyError(f"{path}: no column named {target_column!r} (have {header})")
    values = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise CSVParseError(path, i, "<row>", delimiter.join(row))
        for k, cell in enumerate(row):
            try:
                values[i - 1, k] = float(cell)
            except ValueError:
                raise CSVParseError(path, i, header[k], cell) from None
    t = header.index(target_column)
    keep = [k for k in range(len(header)) if k != t]
    ds = Dataset(values[:, keep], values[:, t], tuple(header[k] for k in keep))
    validate_dataset(ds)
    return ds


def write_csv(ds: Dataset, path, delimiter: str = ",", target_column: str = "y") -> None:
    """Write predictors then the response, one row per sample."""
    names = ds.feature_names or tuple(f"x{k + 1}" for k in range(ds.d))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow([*names, target_column])
        for xi, yi in zip(ds.x, ds.y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(kind, text: str):
    if kind is bool:
        low = text.lower()
        if low not in ("true", "false"):
            raise ValueError(f"expected true/false, got {text!r}")
        return low == "true"
    if kind is tuple:
        return tuple(int(v) for v in text.split(",") if v.strip())
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def _field_types() -> dict:
    return {f.name: type(f.default) for f in dataclasses.fields(ExperimentConfig)}


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Apply ``key = value`` lines to ``base`` (defaults if omitted).

    Blank lines and anything after ``#`` are ignored; unknown keys are errors.
    """
    types = _field_types()
    values = dataclasses.asdict(base) if base is not None else {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse(types[key], value)
        except ValueError as err:
            raise ValueError(f"config line {lineno}: {key}: {err}") from None
    return ExperimentConfig(**values)


def emit_config(cfg: ExperimentConfig) -> str:
    """Every field in declaration order, one ``key = value`` line each."""
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n"
                   for f in dataclasses.fields(cfg))


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), base)


def write_manifest(outdir, cfg: ExperimentConfig, command: str, extra: Optional[dict] = None) -> str:
    """Record the effective config, seed and environment of a run."""
    path = os.path.join(outdir, "manifest.txt")
    lines = [
        f"# command: {command}",
        f"# master_seed: {cfg.master_seed}",
        f"# python: {platform.python_version()}",
        f"# numpy: {np.__version__}",
        f"# argv: {' '.join(sys.argv)}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n" + emit_config(cfg))
    return path
