"""Estimate quality against ground truth."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DimensionError

DEFAULT_THRESHOLD = 1e-6


def _pair(estimate, truth):
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape or estimate.ndim != 2 or estimate.shape[0] != estimate.shape[1]:
        raise DimensionError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    return estimate, truth


def mse(estimate, truth) -> float:
    """``sum_ij (est_ij - true_ij)^2 / N^2``."""
    estimate, truth = _pair(estimate, truth)
    n = truth.shape[0]
    return float(np.sum((estimate - truth) ** 2)) / (n * n)


def _support(matrix, threshold):
    s = np.abs(matrix) > threshold
    np.fill_diagonal(s, False)
    return s


def edge_count(estimate, threshold: float = DEFAULT_THRESHOLD) -> int:
    """Number of off-diagonal entries with magnitude above ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return int(np.count_nonzero(_support(np.asarray(estimate, dtype=float), threshold)))


def support_metrics(
    estimate, truth, threshold: float = DEFAULT_THRESHOLD, truth_threshold: float = DEFAULT_THRESHOLD
) -> tuple[float, float]:
    """Precision and recall of the thresholded off-diagonal support.

    ``threshold`` applies to the estimate; the true support is fixed by
    ``truth_threshold`` so that recall cannot rise as ``threshold`` grows.
    Precision is 1 for an empty estimate; recall is 1 for an empty truth.
    """
    estimate, truth = _pair(estimate, truth)
    est = _support(estimate, threshold)
    tru = _support(truth, truth_threshold)
    hits = int(np.count_nonzero(est & tru))
    n_est, n_true = int(est.sum()), int(tru.sum())
    precision = hits / n_est if n_est else 1.0
    recall = hits / n_true if n_true else 1.0
    return precision, recall


@dataclass
class MetricTrace:
    t: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    nnz: list = field(default_factory=list)
    precision: list = field(default_factory=list)
    recall: list = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    def append(self, t, estimate, truth=None, threshold=DEFAULT_THRESHOLD):
        self.t.append(int(t))
        self.nnz.append(edge_count(estimate, threshold))
        if truth is not None:
            self.mse.append(mse(estimate, truth))
            p, r = support_metrics(estimate, truth, threshold)
            self.precision.append(p)
            self.recall.append(r)

    @property
    def has_truth(self) -> bool:
        return bool(self.mse)

    def rows(self):
        if self.has_truth:
            return list(zip(self.t, self.mse, self.nnz, self.precision, self.recall))
        return list(zip(self.t, self.nnz))

    @property
    def header(self) -> list[str]:
        return ["t", "mse", "nnz", "precision", "recall"] if self.has_truth else ["t", "nnz"]


def metric_trace(estimates, truths=None, threshold: float = DEFAULT_THRESHOLD) -> MetricTrace:
    """Per-interval metrics; ``truths`` (adjacency matrices) may be omitted."""
    trace = MetricTrace()
    if truths is not None and len(truths) != len(estimates):
        raise DimensionError(f"{len(estimates)} estimates but {len(truths)} ground-truth intervals")
    for k, est in enumerate(estimates):
        a = getattr(est, "adjacency", est)
        t = getattr(est, "interval_index", k + 1) or k + 1
        trace.append(t, a, None if truths is None else truths[k], threshold)
    return trace
