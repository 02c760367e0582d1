"""Turn raw cascade timestamps into per-interval infection-time matrices.

Input format, one cascade per line (UTF-8)::

    cascade_id<TAB>node,timestamp;node,timestamp;...

Timestamps are hours. Malformed lines are reported, not fatal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .core import ConfigError, DimensionError, EmptyDatasetError, IntervalObservations, Susceptibility
from .io import read_matrix_csv

FILL_FACTOR = 100.0


@dataclass(frozen=True)
class CascadeRecord:
    cascade_id: str
    events: tuple  # ((node_id, timestamp), ...)

    def __post_init__(self):
        if not self.events:
            raise ValueError(f"cascade {self.cascade_id!r} has no events")
        for node, ts in self.events:
            if not ts >= 0 or not math.isfinite(ts):
                raise ValueError(f"cascade {self.cascade_id!r}: bad timestamp {ts!r} for node {node!r}")

    @property
    def nodes(self) -> set:
        return {node for node, _ in self.events}


@dataclass(frozen=True)
class IngestConfig:
    min_sites: int = 7
    interval_hours: float = 168.0
    max_nodes: int | None = None

    def __post_init__(self):
        if self.min_sites < 1:
            raise ConfigError("min_sites must be at least 1")
        if not self.interval_hours > 0:
            raise ConfigError("interval_hours must be positive")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ConfigError("max_nodes must be positive")


@dataclass
class ParseResult:
    records: list = field(default_factory=list)
    rejects: list = field(default_factory=list)  # (line number, reason)


def _parse_line(line: str) -> CascadeRecord:
    cascade_id, sep, body = line.partition("\t")
    if not sep or not cascade_id:
        raise ValueError("expected '<cascade_id>\\t<events>'")
    events = []
    for item in body.split(";"):
        if not item.strip():
            continue
        node, comma, ts = item.rpartition(",")
        if not comma or not node:
            raise ValueError(f"bad event {item!r}")
        events.append((node.strip(), float(ts)))
    return CascadeRecord(cascade_id.strip(), tuple(events))


def parse_cascades(stream: TextIO | Iterable[str]) -> ParseResult:
    """Parse every line; bad or empty lines go to ``rejects``."""
    out = ParseResult()
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            out.rejects.append((lineno, "empty line"))
            continue
        try:
            out.records.append(_parse_line(line))
        except ValueError as exc:
            out.rejects.append((lineno, str(exc)))
    return out


def dedupe(record: CascadeRecord) -> CascadeRecord:
    """Keep one event per node, at its earliest timestamp, in first-mention order."""
    earliest: dict[str, float] = {}
    for node, ts in record.events:
        if node not in earliest or ts < earliest[node]:
            earliest[node] = ts
    return CascadeRecord(record.cascade_id, tuple(earliest.items()))


def filter_cascades(records: Iterable[CascadeRecord], min_sites: int = 7) -> list[CascadeRecord]:
    """Deduplicate, then keep cascades reaching at least ``min_sites`` distinct nodes."""
    kept = []
    for rec in records:
        rec = dedupe(rec)
        if len(rec.events) >= min_sites:
            kept.append(rec)
    return kept


@dataclass(frozen=True)
class NodeMap:
    ids: tuple
    mentions: tuple

    def __len__(self):
        return len(self.ids)

    def index(self, node_id: str) -> int:
        return self.ids.index(node_id)

    def rows(self):
        return [(k, node, m) for k, (node, m) in enumerate(zip(self.ids, self.mentions))]


@dataclass(frozen=True)
class BinnedData:
    node_map: NodeMap
    cascade_ids: tuple
    observations: tuple
    origin: float
    t_max: float
    fill_value: float


def build_intervals(records: Iterable[CascadeRecord], config: IngestConfig = IngestConfig()) -> BinnedData:
    """Bin events into intervals of ``config.interval_hours``.

    Times are shifted so the earliest event is at 0. Entry ``(i, c)`` of
    interval ``t`` holds the shifted time at which node ``i`` adopted cascade
    ``c`` if that happened inside interval ``t``; otherwise it holds
    ``100 * t_max`` with ``t_max`` the largest shifted time.
    """
    records = [dedupe(r) for r in records]
    if not records:
        raise EmptyDatasetError("no cascades left after filtering")
    origin = min(ts for r in records for _, ts in r.events)
    t_max = max(ts for r in records for _, ts in r.events) - origin
    fill = FILL_FACTOR * t_max
    h = config.interval_hours
    n_intervals = int(math.floor(t_max / h)) + 1

    counts: dict[str, int] = {}
    for r in records:
        for node, _ in r.events:
            counts[node] = counts.get(node, 0) + 1
    order = sorted(counts, key=lambda node: (-counts[node], node))
    if config.max_nodes is not None:
        order = order[: config.max_nodes]
    row_of = {node: k for k, node in enumerate(order)}

    ys = np.full((n_intervals, len(order), len(records)), fill)
    for c, r in enumerate(records):
        for node, ts in r.events:
            i = row_of.get(node)
            if i is None:
                continue
            shifted = ts - origin
            t = min(int(math.floor(shifted / h)), n_intervals - 1)
            ys[t, i, c] = shifted
    observations = tuple(IntervalObservations(ys[t], t + 1) for t in range(n_intervals))
    node_map = NodeMap(tuple(order), tuple(counts[node] for node in order))
    return BinnedData(node_map, tuple(r.cascade_id for r in records), observations, origin, t_max, fill)


def build_susceptibility(
    n: int,
    c: int,
    mode: str = "uniform",
    *,
    low: float = 0.0,
    high: float = 0.01,
    seed: int = 0,
    path=None,
) -> Susceptibility:
    """Uniform random susceptibilities, or a CSV matrix loaded from ``path``."""
    if n < 1 or c < 1:
        raise DimensionError("dimensions must be positive")
    if mode == "uniform":
        rng = np.random.default_rng(seed)
        return Susceptibility(rng.uniform(low, high, size=(n, c)))
    if mode == "from_file":
        x = read_matrix_csv(path)
        if x.shape != (n, c):
            raise DimensionError(f"susceptibility file {path} has shape {x.shape}, expected {(n, c)}")
        return Susceptibility(x)
    raise ConfigError(f"unknown susceptibility mode {mode!r}")


def format_cascade(record: CascadeRecord) -> str:
    events = ";".join(f"{node},{ts!r}" for node, ts in record.events)
    return f"{record.cascade_id}\t{events}"
