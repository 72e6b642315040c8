"""Rank probabilities and their effort derivatives at the symmetric equilibrium.

All integrals are taken in probability space: with ``u = F(t)`` the measure
``dF(t)`` becomes ``du`` on ``(0, 1)`` and ``f(t) dF(t)`` becomes
``g(u) du`` where ``g = f o F^{-1}`` is the density-quantile function.
Each rank is integrated on its own, so results do not depend on the order in
which ranks are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .noise import DomainError, NoiseDistribution, closed_form_B
from .quadrature import integrate, integrate_graded

ZERO_BAND = 1e-9


def _log_binom(n: int, k: int) -> float:
    return math.log(math.comb(n, k))


def _power_term(logc: float, a: int, x: np.ndarray, b: int, y: np.ndarray) -> np.ndarray:
    """``exp(logc) * x**a * y**b`` in log space; zero exponents never touch ``log``."""
    acc = np.full_like(x, logc)
    with np.errstate(divide="ignore"):
        if a:
            acc = acc + a * np.log(x)
        if b:
            acc = acc + b * np.log(y)
    return np.exp(acc)


@dataclass(frozen=True, eq=False)
class RankCoefficients:
    """Marginal rank probabilities ``beta``, cumulative ``B`` and per-prize ``bar_beta``.

    ``beta`` and ``B`` have length ``n`` (index ``r-1`` holds rank ``r``);
    ``bar_beta`` has length ``n-1``.
    """

    n: int
    beta: np.ndarray
    B: np.ndarray
    bar_beta: np.ndarray
    method: str

    @classmethod
    def from_beta(cls, beta, method: str) -> "RankCoefficients":
        beta = np.array(beta, dtype=float)
        n = beta.size
        B = np.cumsum(beta)
        bar = B[:-1] / np.arange(1, n)
        for arr in (beta, B, bar):
            arr.setflags(write=False)
        return cls(n, beta, B, bar, method)

    @classmethod
    def from_B(cls, B_head, method: str) -> "RankCoefficients":
        """Build from ``B_1..B_{n-1}``; ``B_n = 0``."""
        B = np.append(np.asarray(B_head, dtype=float), 0.0)
        beta = np.diff(B, prepend=0.0)
        n = B.size
        bar = B[:-1] / np.arange(1, n)
        for arr in (beta, B, bar):
            arr.setflags(write=False)
        return cls(n, beta, B, bar, method)

    def check(self, tol: float = 1e-10) -> None:
        """Raise ``ValueError`` if the structural sign and sum conditions fail."""
        if abs(self.beta.sum()) > tol:
            raise ValueError(f"sum of beta is {self.beta.sum():.3e}, expected 0")
        if not (self.beta[0] > 0 and self.beta[-1] < 0):
            raise ValueError("expected beta_1 > 0 and beta_n < 0")
        if abs(self.B[-1]) > tol or np.any(self.B[:-1] <= 0):
            raise ValueError("expected B_r > 0 for r < n and B_n = 0")


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise DomainError(f"number of agents must be an integer >= 2, got {n}")


def _kinks(dist: NoiseDistribution, delta: float) -> list[float]:
    """Points in ``(0,1)`` where ``F(delta + F^{-1}(u))`` leaves the support edges."""
    pts = []
    for edge in dist.support:
        if math.isfinite(edge):
            u = float(dist.cdf(edge - delta))
            if 0.0 < u < 1.0:
                pts.append(u)
    return sorted(set(pts))


def _integrate_pieces(func, breaks: list[float]) -> float:
    # a nonzero lead turns F(delta + F^{-1}(u)) into a fractional power of u near
    # the ends (u^{e^-delta} for Gumbel, sqrt(u) for Burr), hence the graded rule
    edges = [0.0, *breaks, 1.0]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += integrate_graded(func, a, b)[0]
    return total


def rank_probability(dist: NoiseDistribution, n: int, r: int, delta: float) -> float:
    """Probability of rank ``r`` for an agent whose output leads the others' by ``delta``.

    ``C(n-1, r-1) * integral F(delta+t)^(n-r) (1-F(delta+t))^(r-1) dF(t)``.
    """
    _check_n(n)
    if not 1 <= r <= n:
        raise DomainError(f"rank must satisfy 1 <= r <= n, got r={r}, n={n}")
    delta = float(delta)
    if not math.isfinite(delta):
        raise DomainError("delta must be finite")
    logc = _log_binom(n - 1, r - 1)

    def integrand(u):
        t = delta + dist.quantile(u)
        return _power_term(logc, n - r, dist.cdf(t), r - 1, dist.sf(t))

    value = _integrate_pieces(integrand, _kinks(dist, delta))
    return min(max(value, 0.0), 1.0)


def rank_probabilities(dist: NoiseDistribution, n: int, delta: float) -> np.ndarray:
    return np.array([rank_probability(dist, n, r, delta) for r in range(1, n + 1)])


def _beta_r(dist: NoiseDistribution, n: int, r: int) -> float:
    g = dist.density_quantile
    if r == 1:
        # (1-u)^{r-2} cancels against (n-1)(1-u)
        logc = math.log(n - 1)
        return integrate(lambda u: _power_term(logc, n - 2, u, 0, u) * g(u), 0.0, 1.0)[0]
    if r == n:
        # u^{n-r-1} cancels against -(n-1)u
        logc = math.log(n - 1)
        return -integrate(lambda u: _power_term(logc, 0, u, n - 2, 1.0 - u) * g(u), 0.0, 1.0)[0]
    logc = _log_binom(n - 1, r - 1)

    def integrand(u):
        return _power_term(logc, n - r - 1, u, r - 2, 1.0 - u) * (n - r - (n - 1) * u) * g(u)

    return integrate(integrand, 0.0, 1.0)[0]


@lru_cache(maxsize=256)
def compute_beta(dist: NoiseDistribution, n: int) -> RankCoefficients:
    """Quadrature of the marginal rank probabilities ``beta_1..beta_n``."""
    _check_n(n)
    beta = [_beta_r(dist, n, r) for r in range(1, n + 1)]
    return RankCoefficients.from_beta(beta, "quadrature")


def _B_r(dist: NoiseDistribution, n: int, r: int) -> float:
    g = dist.density_quantile
    logc = math.log(r) + _log_binom(n - 1, r)
    return integrate(lambda u: _power_term(logc, n - 1 - r, u, r - 1, 1.0 - u) * g(u), 0.0, 1.0)[0]


@lru_cache(maxsize=256)
def _compute_B_cached(dist: NoiseDistribution, n: int) -> tuple[float, ...]:
    return tuple(_B_r(dist, n, r) for r in range(1, n)) + (0.0,)


def compute_B(dist: NoiseDistribution, n: int) -> np.ndarray:
    """Direct quadrature of ``B_1..B_{n-1}`` with ``B_n = 0`` appended."""
    _check_n(n)
    return np.array(_compute_B_cached(dist, n))


def closed_form_coefficients(dist: NoiseDistribution, n: int) -> RankCoefficients | None:
    _check_n(n)
    head = [closed_form_B(dist, n, r) for r in range(1, n)]
    if any(b is None for b in head):
        return None
    return RankCoefficients.from_B(head, "closed_form")


def order_statistic_density(u: np.ndarray, k: int, n: int) -> np.ndarray:
    """Density of the ``k``-th smallest of ``n`` standard uniforms."""
    logc = math.log(n) + _log_binom(n - 1, k - 1)
    return _power_term(logc, k - 1, u, n - k, 1.0 - u)


def bar_beta_hazard(dist: NoiseDistribution, n: int, r: int) -> float:
    """``(1/n) E[h(X_(n-r:n))]``, evaluated through the hazard function itself."""
    _check_n(n)
    if not 1 <= r <= n - 1:
        raise DomainError(f"rank must satisfy 1 <= r <= n-1, got r={r}, n={n}")
    k = n - r

    def integrand(u):
        return dist.hazard(dist.quantile(u)) * order_statistic_density(u, k, n)

    return integrate(integrand, 0.0, 1.0)[0] / n


def r_hat(coeffs: RankCoefficients, band: float = ZERO_BAND) -> int:
    """Largest rank with ``beta_r > band``."""
    positive = np.nonzero(coeffs.beta > band)[0]
    return int(positive[-1]) + 1
