"""Synthetic dynamic networks and cascade observations.

Ground truth is built from a deterministic Kronecker power of a small 0/1
seed graph. Each supported edge follows a weight trajectory over the
horizon, and infection times are drawn from the SEM,

    Y_t = (I - A_t)^{-1} (B_t X + E_t),

with ``B_t`` a standard Gaussian diagonal and ``E_t`` i.i.d. Gaussian noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigError,
    DimensionError,
    DynamicNetwork,
    DynsemError,
    IntervalObservations,
    Susceptibility,
)

#: Seed graph used for the 64-node benchmark (power 3).
BENCHMARK_SEED = np.array(
    [
        [0, 0, 1, 1],
        [0, 0, 1, 1],
        [0, 1, 0, 1],
        [1, 0, 1, 0],
    ],
    dtype=float,
)

PATTERNS = ("bernoulli", "smooth", "nonsmooth")

SMOOTH_PROFILES = (
    lambda t: 0.5 + 0.5 * np.sin(0.1 * t),
    lambda t: 0.5 + 0.5 * np.cos(0.1 * t),
    lambda t: np.exp(-0.01 * t),
    lambda t: np.zeros_like(np.asarray(t, dtype=float)),
)

# Piecewise-constant levels on the four quarters of the horizon.
NONSMOOTH_LEVELS = np.array(
    [
        [1.0, 0.0, 1.0, 0.5],
        [0.0, 1.0, 0.5, 0.5],
        [0.5, 0.5, 0.0, 1.0],
        [1.0, 0.5, 0.5, 0.0],
    ]
)

SINGULAR_COND = 1e12


class SingularSystemError(DynsemError, ArithmeticError):
    code = "E_SINGULAR"


@dataclass(frozen=True)
class EdgePattern:
    kind: str = "smooth"
    p: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in PATTERNS:
            raise ConfigError(f"unknown edge pattern {self.kind!r}; choose from {PATTERNS}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"Bernoulli probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class SimConfig:
    seed_matrix: np.ndarray = field(default_factory=lambda: BENCHMARK_SEED.copy())
    kron_power: int = 3
    T: int = 1000
    C: int = 80
    pattern: str = "smooth"
    p: float = 0.5
    noise_std: float = 1.0
    x_low: float = 0.0
    x_high: float = 3.0
    rng_seed: int = 0

    def __post_init__(self):
        m = np.asarray(self.seed_matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"seed matrix must be square, got shape {m.shape}")
        if self.kron_power < 1 or self.T < 1 or self.C < 1:
            raise ConfigError("kron_power, T and C must be positive")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be nonnegative")
        if not 0 <= self.x_low <= self.x_high:
            raise ConfigError("susceptibility range must satisfy 0 <= x_low <= x_high")
        EdgePattern(self.pattern, self.p)

    @property
    def n_nodes(self) -> int:
        return int(np.asarray(self.seed_matrix).shape[0]) ** self.kron_power

    def to_dict(self) -> dict:
        return {
            "seed_matrix": np.asarray(self.seed_matrix).tolist(),
            "kron_power": self.kron_power,
            "T": self.T,
            "C": self.C,
            "pattern": self.pattern,
            "p": self.p,
            "noise_std": self.noise_std,
            "x_low": self.x_low,
            "x_high": self.x_high,
            "rng_seed": self.rng_seed,
        }


def kronecker_support(seed, power: int) -> np.ndarray:
    """``seed (x) seed (x) ...`` (``power`` factors) with self-loops removed."""
    seed = np.asarray(seed, dtype=float)
    if seed.ndim != 2 or seed.shape[0] != seed.shape[1]:
        raise DimensionError(f"seed matrix must be square, got shape {seed.shape}")
    if power < 1:
        raise ConfigError("Kronecker power must be at least 1")
    out = seed
    for _ in range(power - 1):
        out = np.kron(out, seed)
    out = (out != 0).astype(float)
    np.fill_diagonal(out, 0.0)
    return out


def nonsmooth_profile(index: int, t, T: int):
    """Level of nonsmooth profile ``index`` at interval(s) ``t`` (1-based)."""
    breaks = np.array([T // 4, T // 2, (3 * T) // 4])
    segment = np.searchsorted(breaks, np.asarray(t), side="left")
    return NONSMOOTH_LEVELS[index][segment]


def _is_singular(a: np.ndarray) -> bool:
    return bool(np.linalg.cond(np.eye(a.shape[0]) - a) > SINGULAR_COND)


def evolve_edges(support, pattern: EdgePattern, T: int, *, redraw_singular: bool = True) -> list[np.ndarray]:
    """Adjacency matrices ``A_1 .. A_T`` over the given support.

    Weights on a coarse grid occasionally make ``I - A`` exactly singular.
    With ``redraw_singular`` a singular Bernoulli interval is redrawn, and a
    profile assignment that is singular at any interval is replaced. Redraws
    come from the same stream, so results stay deterministic.
    """
    support = np.asarray(support, dtype=float)
    if np.any(np.diag(support) != 0):
        raise DimensionError("support must be hollow")
    rng = np.random.default_rng(pattern.rng_seed)
    mask = support != 0
    rows, cols = np.nonzero(mask)
    n = support.shape[0]
    ts = np.arange(1, T + 1)
    if pattern.kind == "bernoulli":
        out = []
        for _ in ts:
            for _attempt in range(100):
                a = np.zeros((n, n))
                a[rows, cols] = (rng.random(rows.size) < pattern.p).astype(float)
                if not (redraw_singular and _is_singular(a)):
                    break
            out.append(a)
        return out

    if pattern.kind == "smooth":
        table = np.stack([np.broadcast_to(f(ts.astype(float)), ts.shape) for f in SMOOTH_PROFILES])
    else:
        table = np.stack([nonsmooth_profile(k, ts, T) for k in range(4)])
    for _attempt in range(100):
        choice = rng.integers(0, 4, size=rows.size)
        weights = table[choice]  # edges x T
        out = []
        for k in range(T):
            a = np.zeros((n, n))
            a[rows, cols] = weights[:, k]
            out.append(a)
        if not (redraw_singular and any(_is_singular(a) for a in _distinct(out))):
            break
    return out


def _distinct(mats):
    prev = None
    for a in mats:
        if prev is None or not np.array_equal(a, prev):
            yield a
        prev = a


def make_network(support, pattern: EdgePattern, T: int, rng: np.random.Generator) -> DynamicNetwork:
    """Edge trajectories plus a standard Gaussian ``B_t`` diagonal per interval."""
    adjacency = evolve_edges(support, pattern, T)
    n = np.asarray(support).shape[0]
    influence = [rng.standard_normal(n) for _ in range(T)]
    return DynamicNetwork(tuple(adjacency), tuple(influence))


def draw_susceptibility(n: int, c: int, low: float, high: float, rng: np.random.Generator) -> Susceptibility:
    return Susceptibility(rng.uniform(low, high, size=(n, c)))


def synthesize_cascades(
    network: DynamicNetwork,
    susceptibility: Susceptibility,
    noise_std: float,
    rng: np.random.Generator,
    *,
    return_noise: bool = False,
):
    """Infection times ``Y_t = (I - A_t)^{-1} (B_t X + E_t)`` for every interval."""
    x = susceptibility.values
    n, c = x.shape
    if network.n_nodes != n:
        raise DimensionError(f"network has {network.n_nodes} nodes but X has {n} rows")
    eye = np.eye(n)
    observations, noises = [], []
    for t, (a, b) in enumerate(zip(network.adjacency_seq, network.influence_seq), start=1):
        e = noise_std * rng.standard_normal((n, c))
        m = eye - a
        if np.linalg.cond(m) > SINGULAR_COND:
            raise SingularSystemError(f"interval {t}: I - A is singular")
        y = np.linalg.solve(m, b[:, None] * x + e)
        observations.append(IntervalObservations(y, t))
        noises.append(e)
    if return_noise:
        return observations, noises
    return observations


def simulate(config: SimConfig):
    """Run the full protocol; returns ``(network, susceptibility, observations)``."""
    pattern_ss, influence_ss, x_ss, noise_ss = np.random.SeedSequence(config.rng_seed).spawn(4)
    pattern_seed = int(pattern_ss.generate_state(1, np.uint64)[0])
    support = kronecker_support(config.seed_matrix, config.kron_power)
    pattern = EdgePattern(config.pattern, config.p, pattern_seed)
    network = make_network(support, pattern, config.T, np.random.default_rng(influence_ss))
    x = draw_susceptibility(support.shape[0], config.C, config.x_low, config.x_high, np.random.default_rng(x_ss))
    obs = synthesize_cascades(network, x, config.noise_std, np.random.default_rng(noise_ss))
    return network, x, obs
