"""Tracking sparse, time-varying directed networks from cascade infection times."""
from .core import (
    Dataset,
    DynamicNetwork,
    DynsemError,
    IntervalObservations,
    SolverConfig,
    Susceptibility,
    TopologyEstimate,
    validate_dataset,
)
from .solvers import Tracker, TrackingResult, track

__all__ = [
    "Dataset",
    "DynamicNetwork",
    "DynsemError",
    "IntervalObservations",
    "SolverConfig",
    "Susceptibility",
    "TopologyEstimate",
    "Tracker",
    "TrackingResult",
    "track",
    "validate_dataset",
]
