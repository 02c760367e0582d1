"""Domain types for the dynamic structural equation model.

The model for interval ``t`` is ``Y = A Y + B X + E`` where ``Y`` holds
infection times (nodes x cascades), ``A`` is a hollow, generally
asymmetric adjacency matrix (``a_ij`` weights the edge ``j -> i``), ``B``
is diagonal and ``X`` holds time-invariant susceptibilities.

All values here are immutable: array fields are copied on construction and
flagged read-only, so instances can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DynsemError(Exception):
    """Base class; ``code`` is the machine-readable prefix used by the CLI."""

    code = "E_DYNSEM"


class DimensionError(DynsemError, ValueError):
    code = "E_DIM"


class EmptyDatasetError(DynsemError, ValueError):
    code = "E_EMPTY"


class ConfigError(DynsemError, ValueError):
    code = "E_CONFIG"


class ConstraintError(DynsemError, ValueError):
    code = "E_CONSTRAINT"


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TopologyEstimate:
    """Adjacency ``A`` (hollow) plus the diagonal of ``B`` for one interval."""

    adjacency: np.ndarray
    external_influence: np.ndarray
    interval_index: int = 0

    def __post_init__(self):
        a = _frozen(self.adjacency, 2, "adjacency")
        b = _frozen(self.external_influence, 1, "external_influence")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"adjacency must be square, got {a.shape}")
        if b.shape != (n,):
            raise DimensionError(f"external_influence must have length {n}, got {b.shape}")
        if np.any(np.diag(a) != 0.0):
            raise ConstraintError("adjacency diagonal must be exactly zero (no self-loops)")
        if self.interval_index < 0:
            raise ConfigError("interval_index must be nonnegative")
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "external_influence", b)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def influence_matrix(self) -> np.ndarray:
        """Dense diagonal view of ``B``; only for display and oracles."""
        return np.diag(self.external_influence)

    def __eq__(self, other):
        if not isinstance(other, TopologyEstimate):
            return NotImplemented
        return (
            self.interval_index == other.interval_index
            and np.array_equal(self.adjacency, other.adjacency)
            and np.array_equal(self.external_influence, other.external_influence)
        )


@dataclass(frozen=True, eq=False)
class IntervalObservations:
    """Infection-time matrix ``Y`` (N x C) observed during one interval."""

    infection_times: np.ndarray
    interval_index: int = 0

    def __post_init__(self):
        y = _frozen(self.infection_times, 2, "infection_times")
        if not np.all(np.isfinite(y)):
            raise ConstraintError(
                f"interval {self.interval_index}: infection times must be finite "
                "(use the fill value for uninfected nodes)"
            )
        object.__setattr__(self, "infection_times", y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.infection_times.shape

    def __eq__(self, other):
        if not isinstance(other, IntervalObservations):
            return NotImplemented
        return self.interval_index == other.interval_index and np.array_equal(
            self.infection_times, other.infection_times
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Susceptibility:
    """Nonnegative N x C matrix ``X`` of external-infection susceptibilities."""

    values: np.ndarray

    def __post_init__(self):
        x = _frozen(self.values, 2, "susceptibility")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ConstraintError("susceptibility entries must be finite and nonnegative")
        object.__setattr__(self, "values", x)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


SOLVERS = ("ista", "fista", "rt_fista", "sgd")
SCHEDULES = ("constant", "sqrt_t")


@dataclass(frozen=True)
class SolverConfig:
    """Tracking parameters.

    ``lambda_schedule`` is ``"constant"`` (``lambda_t = lambda0``) or
    ``"sqrt_t"`` (``lambda_t = lambda0 * lambda_scale * sqrt(t)``).
    ``sigma0`` scales the identity used to seed the Gram-matrix average.
    """

    beta: float = 0.98
    lambda0: float = 25.0
    lambda_schedule: str = "constant"
    lambda_scale: float = 1.0
    solver: str = "fista"
    tol: float = 1e-6
    max_inner: int = 100
    eta: float = 1e-3
    rng_seed: int = 0
    sigma0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if self.lambda0 < 0:
            raise ConfigError(f"lambda0 must be nonnegative, got {self.lambda0}")
        if self.lambda_schedule not in SCHEDULES:
            raise ConfigError(f"unknown lambda schedule {self.lambda_schedule!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if int(self.max_inner) != self.max_inner or self.max_inner < 1:
            raise ConfigError(f"max_inner must be a positive integer, got {self.max_inner}")
        if self.solver == "sgd" and not self.eta > 0:
            raise ConfigError(f"eta must be positive for the sgd solver, got {self.eta}")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be unsigned")
        if self.sigma0 < 0:
            raise ConfigError("sigma0 must be nonnegative")

    def lambda_at(self, t: int) -> float:
        if self.lambda_schedule == "sqrt_t":
            return self.lambda0 * self.lambda_scale * float(np.sqrt(t))
        return self.lambda0


@dataclass(frozen=True, eq=False)
class DynamicNetwork:
    """Ground-truth sequence of adjacency matrices and ``B`` diagonals."""

    adjacency_seq: tuple
    influence_seq: tuple

    def __post_init__(self):
        adj = tuple(_frozen(a, 2, "adjacency") for a in self.adjacency_seq)
        inf = tuple(_frozen(b, 1, "influence") for b in self.influence_seq)
        if len(adj) != len(inf):
            raise DimensionError("adjacency and influence sequences differ in length")
        if adj:
            n = adj[0].shape[0]
            for t, (a, b) in enumerate(zip(adj, inf), start=1):
                if a.shape != (n, n) or b.shape != (n,):
                    raise DimensionError(f"interval {t}: expected {n} nodes")
                if np.any(np.diag(a) != 0.0):
                    raise ConstraintError(f"interval {t}: adjacency is not hollow")
        object.__setattr__(self, "adjacency_seq", adj)
        object.__setattr__(self, "influence_seq", inf)

    def __len__(self) -> int:
        return len(self.adjacency_seq)

    @property
    def n_nodes(self) -> int:
        return self.adjacency_seq[0].shape[0]

    def estimate_at(self, t: int) -> TopologyEstimate:
        """Truth at 1-based interval ``t`` as a :class:`TopologyEstimate`."""
        return TopologyEstimate(self.adjacency_seq[t - 1], self.influence_seq[t - 1], t)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Validated observation sequence with its susceptibility matrix."""

    observations: tuple
    susceptibility: Susceptibility
    n_nodes: int
    n_cascades: int
    n_intervals: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_intervals", len(self.observations))


def validate_dataset(
    observations: Sequence[IntervalObservations], susceptibility: Susceptibility
) -> Dataset:
    """Check that every interval and ``X`` share the same N x C shape."""
    observations = tuple(observations)
    if not observations:
        raise EmptyDatasetError("observation sequence is empty")
    n, c = susceptibility.shape
    for pos, obs in enumerate(observations, start=1):
        if obs.shape != (n, c):
            t = obs.interval_index or pos
            raise DimensionError(
                f"interval {t}: infection times have shape {obs.shape}, expected {(n, c)}"
            )
    return Dataset(observations, susceptibility, n, c)
