"""Readers and writers for the on-disk formats.

* Matrices: CSV, row-major, one matrix row per line, no header.
* Estimate snapshots: JSON lines, ``{"t": int, "a": [[...]], "b": [...]}``.
* Sparse triplets: CSV ``row,col,value`` with a header, zeros omitted.

Floats are written with ``repr`` so that reading back is bit-exact.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import DimensionError, DynsemError, TopologyEstimate


class FormatError(DynsemError, ValueError):
    code = "E_FORMAT"


def format_float(value: float) -> str:
    return repr(float(value))


def write_matrix_csv(path, matrix) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in matrix:
            fh.write(",".join(format_float(v) for v in row))
            fh.write("\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def estimate_to_json(estimate: TopologyEstimate) -> str:
    return json.dumps(
        {
            "t": int(estimate.interval_index),
            "a": estimate.adjacency.tolist(),
            "b": estimate.external_influence.tolist(),
        },
        separators=(",", ":"),
    )


def estimate_from_json(line: str) -> TopologyEstimate:
    try:
        obj = json.loads(line)
        return TopologyEstimate(np.array(obj["a"], dtype=float), np.array(obj["b"], dtype=float), int(obj["t"]))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad estimate snapshot: {exc}") from None


def write_estimates_jsonl(path, estimates: Iterable[TopologyEstimate]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for est in estimates:
            fh.write(estimate_to_json(est))
            fh.write("\n")


def iter_estimates_jsonl(path) -> Iterator[TopologyEstimate]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield estimate_from_json(line)


def read_estimates_jsonl(path) -> list[TopologyEstimate]:
    return list(iter_estimates_jsonl(path))


def write_triplets_csv(path, matrix, threshold: float = 0.0) -> None:
    """Sparse export of the entries with ``|value| > threshold``."""
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = np.nonzero(np.abs(matrix) > threshold)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "value"])
        for i, j in zip(rows, cols):
            w.writerow([int(i), int(j), format_float(matrix[i, j])])


def read_triplets_csv(path, shape: tuple[int, int]) -> np.ndarray:
    out = np.zeros(shape)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            i, j = int(rec["row"]), int(rec["col"])
            if not (0 <= i < shape[0] and 0 <= j < shape[1]):
                raise DimensionError(f"triplet ({i}, {j}) outside shape {shape}")
            out[i, j] = float(rec["value"])
    return out


def write_records_csv(path, header: list[str], rows: Iterable[Iterable]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
