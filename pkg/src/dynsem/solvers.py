"""Proximal-gradient solvers for the sparse exponentially weighted LS cost.

At interval ``t`` the tracker minimizes

    1/2 sum_tau beta^(t-tau) ||Y_tau - A Y_tau - B X||_F^2 + lambda_t ||A||_1

over hollow ``A`` and diagonal ``B``. The cost separates across rows, so every
iteration updates all rows at once; the per-row formulas
(:func:`gradient_a`, :func:`gradient_b`) are kept for reference and testing,
while the solvers use the equivalent matrix form.

Solvers
-------
``ista``      proximal gradient to convergence per interval, warm-started.
``fista``     accelerated variant; momentum restarts at every interval.
``rt_fista``  one accelerated step per interval, momentum never restarts.
``sgd``       one proximal step per interval on the current interval's data only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import (
    ConfigError,
    Dataset,
    DimensionError,
    IntervalObservations,
    SolverConfig,
    Susceptibility,
    TopologyEstimate,
)
from .stats import NodeView, SuffStats, lipschitz_constant, update_suff_stats


def soft_threshold(value, mu: float):
    """Elementwise ``sign(m) * max(|m| - mu, 0)``."""
    if mu < 0:
        raise ValueError("threshold must be nonnegative")
    value = np.asarray(value, dtype=float)
    out = np.sign(value) * np.maximum(np.abs(value) - mu, 0.0)
    return float(out) if out.ndim == 0 else out


def momentum_weight(c_prev: float) -> float:
    """Next term of the Nesterov sequence, ``(1 + sqrt(4 c^2 + 1)) / 2``."""
    return (1.0 + math.sqrt(4.0 * c_prev * c_prev + 1.0)) / 2.0


def _xvals(susceptibility) -> np.ndarray:
    return susceptibility.values if isinstance(susceptibility, Susceptibility) else np.asarray(susceptibility, float)


def _yvals(obs) -> np.ndarray:
    return obs.infection_times if isinstance(obs, IntervalObservations) else np.asarray(obs, float)


def objective(estimate: TopologyEstimate, history: Sequence, susceptibility, beta: float, lam: float) -> float:
    """Cost at the last interval of ``history``, evaluated from the raw data."""
    x = _xvals(susceptibility)
    a = estimate.adjacency
    bx = estimate.external_influence[:, None] * x
    t = len(history)
    total = 0.0
    for tau, obs in enumerate(history, start=1):
        y = _yvals(obs)
        if y.shape != x.shape or a.shape[0] != y.shape[0]:
            raise DimensionError(f"interval {tau}: shape {y.shape} incompatible with X {x.shape}")
        r = y - a @ y - bx
        total += beta ** (t - tau) * float(np.sum(r * r))
    return 0.5 * total + lam * float(np.abs(a).sum())


# -- per-row reference gradients ---------------------------------------------


def gradient_a(view: NodeView, a_minus_i, b_ii: float) -> np.ndarray:
    a_minus_i = np.asarray(a_minus_i, dtype=float)
    if a_minus_i.shape != view.sigma_col_minus_i.shape:
        raise DimensionError("a_minus_i does not match the node view")
    return view.sigma_minus_i @ a_minus_i + view.ybar_minus_i @ view.x_i * b_ii - view.sigma_col_minus_i


def gradient_b(view: NodeView, a_minus_i, b_ii: float, beta_pow_sum: float | None = None) -> float:
    w = view.beta_pow_sum if beta_pow_sum is None else beta_pow_sum
    a_minus_i = np.asarray(a_minus_i, dtype=float)
    return float(
        a_minus_i @ (view.ybar_minus_i @ view.x_i)
        + w * b_ii * float(view.x_i @ view.x_i)
        - float(view.ybar_row_i @ view.x_i)
    )


# -- matrix form ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IntervalProblem:
    """Data-dependent quantities that stay fixed during one interval's solve."""

    sigma: np.ndarray
    x_ybar_t: np.ndarray  # X @ ybar^T, entry (i, j) = x_i . ybar_j
    x_sqnorm: np.ndarray
    weight_sum: float
    trace_sigma: float

    @classmethod
    def from_stats(cls, stats: SuffStats, susceptibility) -> "IntervalProblem":
        x = _xvals(susceptibility)
        return cls(
            sigma=stats.sigma,
            x_ybar_t=x @ stats.ybar.T,
            x_sqnorm=np.einsum("ij,ij->i", x, x),
            weight_sum=stats.beta_pow_sum,
            trace_sigma=float(np.trace(stats.sigma)),
        )

    def gradients(self, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of the smooth cost for all rows; diagonal of ``grad_a`` is zero."""
        grad_a = a @ self.sigma + b[:, None] * self.x_ybar_t - self.sigma
        np.fill_diagonal(grad_a, 0.0)
        grad_b = np.einsum("ij,ij->i", a, self.x_ybar_t) + self.weight_sum * b * self.x_sqnorm - np.diag(self.x_ybar_t)
        return grad_a, grad_b

    def smooth_cost(self, a: np.ndarray, b: np.ndarray) -> float:
        a_sigma = a @ self.sigma
        quad = self.trace_sigma - 2.0 * float(np.sum(a * self.sigma)) + float(np.sum(a_sigma * a))
        cross = float(b @ (np.diag(self.x_ybar_t) - np.einsum("ij,ij->i", a, self.x_ybar_t)))
        ext = self.weight_sum * float(np.sum(b * b * self.x_sqnorm))
        return 0.5 * (quad - 2.0 * cross + ext)

    def cost(self, a: np.ndarray, b: np.ndarray, lam: float) -> float:
        return self.smooth_cost(a, b) + lam * float(np.abs(a).sum())


def objective_from_stats(estimate: TopologyEstimate, stats: SuffStats, susceptibility, lam: float) -> float:
    """Same cost as :func:`objective`, computed from the running averages.

    When the statistics were seeded with ``sigma0 > 0`` this includes the
    decaying ridge term that seeding implies.
    """
    prob = IntervalProblem.from_stats(stats, susceptibility)
    return prob.cost(estimate.adjacency, estimate.external_influence, lam)


def _prox_step(prob: IntervalProblem, a, b, lam, lipschitz):
    grad_a, grad_b = prob.gradients(a, b)
    a_new = soft_threshold(a - grad_a / lipschitz, lam / lipschitz)
    np.fill_diagonal(a_new, 0.0)
    return a_new, b - grad_b / lipschitz


def _rel_change(a_new, b_new, a_old, b_old) -> float:
    num = math.sqrt(float(np.sum((a_new - a_old) ** 2) + np.sum((b_new - b_old) ** 2)))
    den = math.sqrt(float(np.sum(a_old**2) + np.sum(b_old**2)))
    return num / max(1.0, den)


@dataclass
class SolverState:
    """Iterate ``[A B]`` plus what the accelerated solvers need.

    ``c`` and ``c_prev`` are consecutive terms of the momentum sequence;
    the extrapolation weight at the next step is ``(c_prev - 1) / c``.
    """

    a: np.ndarray
    b: np.ndarray
    a_prev: np.ndarray
    b_prev: np.ndarray
    c: float = 1.0
    c_prev: float = 1.0
    k: int = 0

    @classmethod
    def initial(cls, n_nodes: int) -> "SolverState":
        a = np.zeros((n_nodes, n_nodes))
        b = np.ones(n_nodes)
        return cls(a, b, a.copy(), b.copy())

    @classmethod
    def from_estimate(cls, estimate: TopologyEstimate) -> "SolverState":
        a = np.array(estimate.adjacency)
        b = np.array(estimate.external_influence)
        return cls(a, b, a.copy(), b.copy())

    def restart(self) -> "SolverState":
        """Fresh subproblem at the current iterate: no momentum, ``k = 0``."""
        return SolverState(self.a, self.b, self.a.copy(), self.b.copy())

    def estimate(self, t: int = 0) -> TopologyEstimate:
        return TopologyEstimate(self.a, self.b, t)

    @property
    def current(self) -> TopologyEstimate:
        return self.estimate()

    @property
    def previous(self) -> TopologyEstimate:
        return TopologyEstimate(self.a_prev, self.b_prev)


def _check_lipschitz(lipschitz):
    if not lipschitz > 0:
        raise ConfigError(f"Lipschitz constant must be positive, got {lipschitz}")


def ista_inner(state: SolverState, prob: IntervalProblem, lam: float, lipschitz: float, tol: float, max_inner: int) -> SolverState:
    _check_lipschitz(lipschitz)
    a, b = state.a, state.b
    k = 0
    while k < max_inner:
        a_new, b_new = _prox_step(prob, a, b, lam, lipschitz)
        k += 1
        change = _rel_change(a_new, b_new, a, b)
        a, b = a_new, b_new
        if change <= tol:
            break
    return SolverState(a, b, a.copy(), b.copy(), k=state.k + k)


def _fista_step(state: SolverState, prob: IntervalProblem, lam: float, lipschitz: float) -> SolverState:
    w = (state.c_prev - 1.0) / state.c
    if w == 0.0:
        a_ext, b_ext = state.a, state.b
    else:
        a_ext = state.a + w * (state.a - state.a_prev)
        b_ext = state.b + w * (state.b - state.b_prev)
    a_new, b_new = _prox_step(prob, a_ext, b_ext, lam, lipschitz)
    return SolverState(a_new, b_new, state.a, state.b, c=momentum_weight(state.c), c_prev=state.c, k=state.k + 1)


def fista_inner(state: SolverState, prob: IntervalProblem, lam: float, lipschitz: float, tol: float, max_inner: int) -> SolverState:
    """Accelerated iterations continuing from ``state`` (call ``restart`` first for a fresh solve)."""
    _check_lipschitz(lipschitz)
    for _ in range(max_inner):
        state = _fista_step(state, prob, lam, lipschitz)
        if _rel_change(state.a, state.b, state.a_prev, state.b_prev) <= tol:
            break
    return state


def rt_fista_step(state: SolverState, prob: IntervalProblem, lam: float, lipschitz: float) -> SolverState:
    """One accelerated step; the momentum sequence carries over between calls."""
    _check_lipschitz(lipschitz)
    return _fista_step(state, prob, lam, lipschitz)


def sgd_gradients(a: np.ndarray, b: np.ndarray, y: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``1/2 ||Y - A Y - B X||_F^2`` for one interval's data."""
    resid = a @ y + b[:, None] * x - y
    grad_a = resid @ y.T
    np.fill_diagonal(grad_a, 0.0)
    return grad_a, np.einsum("ij,ij->i", resid, x)


def sgd_step(state: SolverState, obs, susceptibility, lam: float, eta: float) -> SolverState:
    """Proximal stochastic-gradient step on the current interval only.

    The threshold is ``lam * eta`` so that it pairs with the step ``eta`` the
    same way ``lam / L`` pairs with ``1 / L`` in the batch solvers.
    """
    if not eta > 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    y, x = _yvals(obs), _xvals(susceptibility)
    grad_a, grad_b = sgd_gradients(state.a, state.b, y, x)
    a_new = soft_threshold(state.a - eta * grad_a, lam * eta)
    np.fill_diagonal(a_new, 0.0)
    return SolverState(a_new, state.b - eta * grad_b, state.a, state.b, k=state.k + 1)


# -- tracking over the horizon ---------------------------------------------------


@dataclass
class StepDiagnostics:
    t: int
    objective: float
    inner_iters: int
    nnz: int
    lipschitz: float
    lam: float


@dataclass
class TrackingResult:
    estimates: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)
    inner_iters_used: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.estimates)


NNZ_THRESHOLD = 1e-6


class Tracker:
    """Streaming tracker: feed one interval at a time with :meth:`step`."""

    def __init__(self, config: SolverConfig, susceptibility: Susceptibility):
        self.config = config
        self.susceptibility = susceptibility
        n, c = susceptibility.shape
        self.stats = SuffStats.initial(n, c, config.sigma0)
        self.state = SolverState.initial(n)

    @property
    def t(self) -> int:
        return self.stats.t

    def step(self, obs) -> tuple[TopologyEstimate, StepDiagnostics]:
        cfg = self.config
        y = _yvals(obs)
        t = self.stats.t + 1
        lam = cfg.lambda_at(t)
        if cfg.solver == "sgd":
            if y.shape != self.susceptibility.shape:
                raise DimensionError(f"interval {t}: shape {y.shape} does not match X {self.susceptibility.shape}")
            self.state = sgd_step(self.state, y, self.susceptibility, lam, cfg.eta)
            self.stats = SuffStats(self.stats.sigma, self.stats.ybar, self.stats.beta_pow_sum, t)
            resid = y - self.state.a @ y - self.state.b[:, None] * self.susceptibility.values
            obj = 0.5 * float(np.sum(resid * resid)) + lam * float(np.abs(self.state.a).sum())
            iters, lip = 1, float("nan")
        else:
            self.stats = update_suff_stats(self.stats, y, cfg.beta)
            lip = lipschitz_constant(self.stats, self.susceptibility)
            prob = IntervalProblem.from_stats(self.stats, self.susceptibility)
            if cfg.solver == "rt_fista":
                self.state = rt_fista_step(self.state, prob, lam, lip)
                iters = 1
            else:
                fresh = self.state.restart()
                inner = ista_inner if cfg.solver == "ista" else fista_inner
                self.state = inner(fresh, prob, lam, lip, cfg.tol, cfg.max_inner)
                iters = self.state.k
            obj = prob.cost(self.state.a, self.state.b, lam)
        est = self.state.estimate(t)
        nnz = int(np.count_nonzero(np.abs(self.state.a) > NNZ_THRESHOLD))
        return est, StepDiagnostics(t, obj, iters, nnz, lip, lam)

    # -- checkpointing -----------------------------------------------------

    def save(self, path) -> None:
        s, st = self.stats, self.state
        with open(path, "wb") as fh:
            np.savez(
                fh,
                sigma=s.sigma,
                ybar=s.ybar,
                beta_pow_sum=s.beta_pow_sum,
                t=s.t,
                a=st.a,
                b=st.b,
                a_prev=st.a_prev,
                b_prev=st.b_prev,
                momentum=np.array([st.c, st.c_prev]),
                k=st.k,
            )

    def load(self, path) -> None:
        with np.load(Path(path)) as z:
            if z["ybar"].shape != self.stats.ybar.shape:
                raise DimensionError(f"checkpoint shape {z['ybar'].shape} does not match dataset")
            self.stats = SuffStats(z["sigma"].copy(), z["ybar"].copy(), float(z["beta_pow_sum"]), int(z["t"]))
            c, c_prev = (float(v) for v in z["momentum"])
            self.state = SolverState(z["a"].copy(), z["b"].copy(), z["a_prev"].copy(), z["b_prev"].copy(), c, c_prev, int(z["k"]))


def track(
    dataset: Dataset,
    config: SolverConfig,
    *,
    tracker: Tracker | None = None,
    on_step: Callable[[Tracker, TopologyEstimate, StepDiagnostics], None] | None = None,
) -> TrackingResult:
    """Run the configured solver over every interval of ``dataset``.

    Pass a ``tracker`` restored from a checkpoint to resume; intervals it has
    already consumed are skipped.
    """
    tracker = tracker or Tracker(config, dataset.susceptibility)
    result = TrackingResult()
    for obs in dataset.observations[tracker.t :]:
        est, diag = tracker.step(obs)
        result.estimates.append(est)
        result.objective_trace.append(diag.objective)
        result.inner_iters_used.append(diag.inner_iters)
        result.diagnostics.append(diag)
        if on_step is not None:
            on_step(tracker, est, diag)
    return result
