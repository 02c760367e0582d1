"""Exponentially weighted sufficient statistics and the Lipschitz constant.

For forgetting factor ``beta`` the tracker needs only

    sigma_t = beta * sigma_{t-1} + Y_t Y_t^T
    ybar_t  = beta * ybar_{t-1}  + Y_t
    w_t     = beta * w_{t-1}     + 1        (= sum of beta^(t-tau))

so memory does not grow with the horizon.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DimensionError, DynsemError, IntervalObservations, Susceptibility

POWER_TOL = 1e-8
POWER_MAX_ITER = 10_000


class PowerIterationError(DynsemError, ArithmeticError):
    code = "E_POWER"


def geometric_weight_sum(beta: float, t: int) -> float:
    """``sum_{tau=1..t} beta^(t-tau)``, equal to ``t`` when ``beta == 1``."""
    if beta == 1.0:
        return float(t)
    return (1.0 - beta**t) / (1.0 - beta)


@dataclass(eq=False)
class SuffStats:
    sigma: np.ndarray
    ybar: np.ndarray
    beta_pow_sum: float = 0.0
    t: int = 0
    lipschitz: float | None = field(default=None, repr=False)
    _lipschitz_key: object = field(default=None, repr=False)

    @classmethod
    def initial(cls, n_nodes: int, n_cascades: int, sigma0: float = 1.0) -> "SuffStats":
        """Starting point ``sigma = sigma0 * I``, ``ybar = 0``.

        ``sigma0 = 1`` matches the usual initialization of the tracker; it acts
        as a ridge term on the adjacency rows that decays like ``beta^t``.
        """
        return cls(sigma0 * np.eye(n_nodes), np.zeros((n_nodes, n_cascades)))

    @property
    def n_nodes(self) -> int:
        return self.sigma.shape[0]


def update_suff_stats(prev: SuffStats, obs: IntervalObservations | np.ndarray, beta: float) -> SuffStats:
    y = obs.infection_times if isinstance(obs, IntervalObservations) else np.asarray(obs, dtype=float)
    if y.shape != prev.ybar.shape:
        raise DimensionError(f"observation shape {y.shape} does not match statistics {prev.ybar.shape}")
    sigma = beta * prev.sigma + y @ y.T
    sigma = 0.5 * (sigma + sigma.T)
    return SuffStats(
        sigma=sigma,
        ybar=beta * prev.ybar + y,
        beta_pow_sum=beta * prev.beta_pow_sum + 1.0,
        t=prev.t + 1,
    )


def _x(susceptibility) -> np.ndarray:
    return susceptibility.values if isinstance(susceptibility, Susceptibility) else np.asarray(susceptibility, float)


def lipschitz_blocks(stats: SuffStats, susceptibility) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Blocks ``(sigma, ybar X^T, w X X^T)`` of the stacked Gram matrix.

    The cross block equals ``sum beta^(t-tau) Y_tau X^T`` because ``X`` is
    constant over the horizon.
    """
    x = _x(susceptibility)
    if x.shape != stats.ybar.shape:
        raise DimensionError(f"susceptibility shape {x.shape} does not match statistics {stats.ybar.shape}")
    return stats.sigma, stats.ybar @ x.T, stats.beta_pow_sum * (x @ x.T)


def lipschitz_matrix(stats: SuffStats, susceptibility) -> np.ndarray:
    """Dense ``2N x 2N`` matrix whose largest eigenvalue is ``L_f``."""
    s, c, d = lipschitz_blocks(stats, susceptibility)
    return np.block([[s, c], [c.T, d]])


def power_iteration(matvec, dim: int, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest eigenvalue of a symmetric PSD operator.

    Starts from a fixed vector (ones plus a small index ramp) so that results
    are reproducible, and stops when the Rayleigh quotient changes by less
    than ``tol`` relative.
    """
    v = 1.0 + 1e-3 * np.arange(1, dim + 1) / dim
    v /= np.linalg.norm(v)
    rq = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        rq_new = float(v @ w)
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0.0:
            raise PowerIterationError("power iteration hit a zero or non-finite vector (degenerate data?)")
        v = w / norm
        if rq_new > 0 and abs(rq_new - rq) <= tol * rq_new:
            return rq_new
        rq = rq_new
    raise PowerIterationError(f"power iteration did not converge in {max_iter} iterations")


def lipschitz_constant(stats: SuffStats, susceptibility) -> float:
    """Lipschitz constant of the gradient of the smooth cost; cached on ``stats``."""
    if stats.t < 1:
        raise DynsemError("lipschitz_constant needs at least one observed interval")
    if stats.lipschitz is not None and stats._lipschitz_key is susceptibility:
        return stats.lipschitz
    s, c, d = lipschitz_blocks(stats, susceptibility)
    n = s.shape[0]

    def matvec(v):
        top, bot = v[:n], v[n:]
        return np.concatenate([s @ top + c @ bot, c.T @ top + d @ bot])

    value = power_iteration(matvec, 2 * n)
    stats.lipschitz = value
    stats._lipschitz_key = susceptibility
    return value


@dataclass(frozen=True, eq=False)
class NodeView:
    """Statistics trimmed for the row subproblem of node ``node`` (0-based)."""

    sigma_minus_i: np.ndarray
    sigma_col_minus_i: np.ndarray
    ybar_minus_i: np.ndarray
    ybar_row_i: np.ndarray
    x_i: np.ndarray
    beta_pow_sum: float
    node: int


def node_view(stats: SuffStats, susceptibility, i: int) -> NodeView:
    x = _x(susceptibility)
    n = stats.n_nodes
    if not 0 <= i < n:
        raise IndexError(f"node index {i} out of range for {n} nodes")
    keep = np.r_[0:i, i + 1 : n]
    return NodeView(
        sigma_minus_i=stats.sigma[np.ix_(keep, keep)],
        sigma_col_minus_i=stats.sigma[keep, i],
        ybar_minus_i=stats.ybar[keep],
        ybar_row_i=stats.ybar[i].copy(),
        x_i=x[i].copy(),
        beta_pow_sum=stats.beta_pow_sum,
        node=i,
    )
