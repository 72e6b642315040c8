"""Seeded Monte Carlo oracle for rank probabilities, marginal effects and best responses.

Replications are cut into fixed-size blocks. Block ``k`` draws from
``Philox`` keyed by ``SeedSequence(seed, spawn_key=(k,))``, so each block's
stream depends only on ``(seed, k)``. Workers process disjoint sets of blocks
and the per-block integer tallies are summed in block order, which makes every
estimate identical for any number of workers.

Shocks are drawn by inverse transform, ``eps = F^{-1}(U)``. The focal agent is
agent 1 and wins exact ties (ties have probability zero).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .incentives import (
    TournamentDesign,
    marginal_weights,
    equilibrium_effort,
    utility_from_probabilities,
)
from .noise import NoiseDistribution
from .prizes import PrizeSchedule

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class SimulationConfig:
    samples: int = 1_000_000
    seed: int = 0
    fd_step: float = 1e-3
    block_size: int = BLOCK_SIZE
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1000:
            raise ValueError(f"need at least 1000 samples, got {self.samples}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.block_size < 1 or self.workers < 1:
            raise ValueError("block_size and workers must be positive")

    def blocks(self) -> list[tuple[int, int]]:
        full, rest = divmod(self.samples, self.block_size)
        sizes = [self.block_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _draw(dist: NoiseDistribution, n: int, seed: int, block: int, size: int) -> np.ndarray:
    """Shock matrix of shape ``(size, n)``; column 0 is the focal agent."""
    u = block_generator(seed, block).random((size, n))
    # random() is on [0, 1); keep clear of the quantile's endpoints
    u = np.clip(u, 2.0**-60, 1.0 - 2.0**-53)
    return dist.quantile(u)


def _map_blocks(fn, cfg: SimulationConfig) -> list:
    blocks = cfg.blocks()
    if cfg.workers == 1:
        return [fn(k, size) for k, size in blocks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda b: fn(*b), blocks))


def rank_cdf_counts(dist: NoiseDistribution, n: int, deltas: Sequence[float], cfg: SimulationConfig) -> np.ndarray:
    """Integer tallies ``C[r-1, g] = #{replications with rank <= r at lead deltas[g]}``.

    The focal rank at lead ``delta`` is ``1 + #{j : eps_j - eps_1 > delta}``, so
    ``rank <= r`` iff the ``(n-r)``-th smallest gap is ``<= delta``. Every lead
    reuses the same shocks.
    """
    deltas = np.asarray(deltas, dtype=float)

    def block(k, size):
        eps = _draw(dist, n, cfg.seed, k, size)
        gaps = np.sort(eps[:, 1:] - eps[:, :1], axis=1)
        counts = np.empty((n, deltas.size), dtype=np.int64)
        counts[n - 1] = size
        for r in range(1, n):
            col = np.sort(gaps[:, n - r - 1])
            counts[r - 1] = np.searchsorted(col, deltas, side="right")
        return counts

    return np.sum(_map_blocks(block, cfg), axis=0)


def mc_rank_probabilities(dist: NoiseDistribution, n: int, delta: float, cfg: SimulationConfig) -> list[McEstimate]:
    cum = rank_cdf_counts(dist, n, [delta], cfg)[:, 0]
    counts = np.diff(cum, prepend=0)
    N = cfg.samples
    out = []
    for c in counts:
        p = c / N
        out.append(McEstimate(float(p), math.sqrt(p * (1.0 - p) / N), N))
    return out


def _rank_shift_tallies(dist, n, cfg, weights=None):
    """Per-rank sums of ``D_r = 1[rank(+h) = r] - 1[rank(-h) = r]`` and of ``|D_r|``.

    With ``weights`` also returns the sum and sum of squares of ``w[rank(+h)] - w[rank(-h)]``.
    """
    h = cfg.fd_step

    def block(k, size):
        eps = _draw(dist, n, cfg.seed, k, size)
        gaps = eps[:, 1:] - eps[:, :1]
        up = 1 + np.count_nonzero(gaps > h, axis=1)
        down = 1 + np.count_nonzero(gaps > -h, axis=1)
        plus = np.bincount(up - 1, minlength=n)
        minus = np.bincount(down - 1, minlength=n)
        moved = up != down
        absd = np.bincount(up[moved] - 1, minlength=n) + np.bincount(down[moved] - 1, minlength=n)
        extra = None
        if weights is not None:
            dw = weights[up - 1] - weights[down - 1]
            extra = (float(dw.sum()), float(dw @ dw))
        return plus - minus, absd, extra

    parts = _map_blocks(block, cfg)
    sum_d = np.sum([p[0] for p in parts], axis=0)
    sum_abs = np.sum([p[1] for p in parts], axis=0)
    extra = None
    if weights is not None:
        extra = (sum(p[2][0] for p in parts), sum(p[2][1] for p in parts))
    return sum_d, sum_abs, extra


def mc_beta(dist: NoiseDistribution, n: int, cfg: SimulationConfig) -> list[McEstimate]:
    """Central difference of rank probabilities with common random numbers."""
    sum_d, sum_abs, _ = _rank_shift_tallies(dist, n, cfg)
    N, h = cfg.samples, cfg.fd_step
    out = []
    for s, a in zip(sum_d, sum_abs):
        mean = s / N
        var = max(a / N - mean * mean, 0.0) * N / (N - 1)
        out.append(McEstimate(float(mean / (2 * h)), math.sqrt(var / N) / (2 * h), N))
    return out


def mc_beta_independent(dist: NoiseDistribution, n: int, cfg: SimulationConfig) -> list[McEstimate]:
    """Same difference quotient from two independent runs (no common numbers); baseline only."""
    h, N = cfg.fd_step, cfg.samples
    plus = mc_rank_probabilities(dist, n, h, cfg)
    other = SimulationConfig(N, (cfg.seed + 1) % 2**64, h, cfg.block_size, cfg.workers)
    minus = mc_rank_probabilities(dist, n, -h, other)
    return [
        McEstimate((a.value - b.value) / (2 * h), math.hypot(a.std_error, b.std_error) / (2 * h), N)
        for a, b in zip(plus, minus)
    ]


def mc_marginal_benefit(design: TournamentDesign, v: PrizeSchedule, cfg: SimulationConfig) -> McEstimate:
    """Monte Carlo ``M(v, theta)`` with a per-replication standard error."""
    w = marginal_weights(v, design.theta)
    _, _, (s, ss) = _rank_shift_tallies(design.dist, design.n, cfg, weights=w)
    N, h = cfg.samples, cfg.fd_step
    mean = s / N
    var = max(ss / N - mean * mean, 0.0) * N / (N - 1)
    return McEstimate(mean / (2 * h), math.sqrt(var / N) / (2 * h), N)


@dataclass
class BestResponse:
    argmax: float
    grid: np.ndarray
    curve: np.ndarray
    effort_se: float
    """Standard error of the effort implied by the simulated first-order condition."""


def default_grid(design: TournamentDesign, points: int = 201) -> np.ndarray:
    return np.linspace(0.0, design.cost.x_bar, points)


def mc_best_response(design: TournamentDesign, v: PrizeSchedule, x_star: float, cfg: SimulationConfig,
                     grid: Optional[Sequence[float]] = None) -> BestResponse:
    """Grid maximiser of the simulated payoff against rivals at ``x_star``.

    The gain-loss term is evaluated on the estimated rank probabilities (the
    agent's expectations follow its own choice), not on realised prizes.
    """
    grid = default_grid(design) if grid is None else np.asarray(grid, dtype=float)
    xb = design.cost.x_bar
    if grid.size == 0 or grid.min() < 0.0 or grid.max() > xb * (1 + 1e-12):
        raise ValueError(f"grid must lie in [0, x_bar={xb}]")
    n = design.n
    cum = rank_cdf_counts(design.dist, n, grid - x_star, cfg)
    probs = np.diff(cum, axis=0, prepend=0) / cfg.samples
    curve = np.array([
        utility_from_probabilities(probs[:, g], v, design.theta) - design.cost.cost(x)
        for g, x in enumerate(grid)
    ])
    m = mc_marginal_benefit(design, v, cfg)
    se = m.std_error / design.cost.curvature(x_star)
    return BestResponse(float(grid[int(np.argmax(curve))]), grid, curve, se)


def equilibrium_residual(design: TournamentDesign, v: PrizeSchedule, cfg: SimulationConfig,
                         grid: Optional[Sequence[float]] = None) -> float:
    """``|simulated best response to x* - x*|`` with ``x*`` from the analytic first-order condition."""
    x_star = equilibrium_effort(design, v, concavity=False).x_star
    return abs(mc_best_response(design, v, x_star, cfg, grid).argmax - x_star)
