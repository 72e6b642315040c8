"""Marginal incentives, equilibrium effort and effort-maximising prizes.

Loss aversion enters every equilibrium object only through
``theta = eta * (lambda - 1)``. The marginal benefit of effort splits into a
monetary part ``R(v) = sum beta_r v_r`` and a psychological part
``theta * L(v)``; equilibrium effort solves ``c'(x*) = R + theta * L``.
The best prize schedule gives ``1/r`` to each of the top ``r*`` ranks where
``r*`` maximises ``A_r(theta) = [1 + theta (2r/n - 1)] B_r / r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .noise import NoiseDistribution
from .prizes import PrizeSchedule
from .ranks import RankCoefficients, compute_beta, rank_probabilities

AGREE_TOL = 1e-10
SIGN_BAND = 1e-10
TIE_RTOL = 1e-12


class RepresentationMismatch(ArithmeticError):
    """Two algebraically equal representations disagree numerically."""


class EffortRangeError(ValueError):
    """Marginal benefit exceeds the marginal cost at the effort cap."""


# -- preferences -------------------------------------------------------------

@dataclass(frozen=True)
class LossAversionParams:
    """``theta`` is canonical; ``eta`` and ``lam`` are optional sugar."""

    theta: float
    eta: Optional[float] = None
    lam: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if (self.eta is None) != (self.lam is None):
            raise ValueError("eta and lam must be given together")
        if self.eta is not None:
            if self.eta <= 0 or self.lam < 1:
                raise ValueError(f"need eta > 0 and lam >= 1, got eta={self.eta}, lam={self.lam}")
            if abs(self.eta * (self.lam - 1.0) - self.theta) > 1e-12:
                raise ValueError("theta is inconsistent with eta * (lam - 1)")

    @classmethod
    def from_eta_lambda(cls, eta: float, lam: float) -> "LossAversionParams":
        return cls(eta * (lam - 1.0), eta, lam)


def mu(value: float, lam: float) -> float:
    """Piecewise-linear gain-loss value: identity on gains, slope ``lam`` on losses."""
    if lam < 1:
        raise ValueError(f"lam must be >= 1, got {lam}")
    return value + (lam - 1.0) * value * (value < 0)


# -- cost --------------------------------------------------------------------

@dataclass(frozen=True)
class CostFunction:
    """Convex effort cost with ``c(0) = c'(0) = 0``.

    Use :meth:`quadratic` for ``c0 x^2 / 2`` or :meth:`custom` for anything
    else; a custom cost without an inverse marginal is inverted by root finding
    on ``[0, x_bar]``.
    """

    kind: str
    c0: float = 1.0
    _cost: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)
    _marginal: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)
    _inverse: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)

    @classmethod
    def quadratic(cls, c0: float = 1.0) -> "CostFunction":
        if not (c0 > 0 and math.isfinite(c0)):
            raise ValueError(f"c0 must be positive, got {c0}")
        return cls("quadratic", float(c0))

    @classmethod
    def custom(cls, cost, marginal, inverse_marginal=None) -> "CostFunction":
        fn = cls("custom", float("nan"), cost, marginal, inverse_marginal)
        if abs(cost(0.0)) > 1e-12 or abs(marginal(0.0)) > 1e-12:
            raise ValueError("cost must satisfy c(0) = c'(0) = 0")
        xs = np.linspace(0.0, fn.x_bar, 65)
        if np.any(np.diff([marginal(x) for x in xs]) <= 0):
            raise ValueError("cost must be strictly convex on [0, x_bar]")
        return fn

    def cost(self, x: float) -> float:
        if self.kind == "quadratic":
            return 0.5 * self.c0 * x * x
        return self._cost(x)

    def marginal(self, x: float) -> float:
        if self.kind == "quadratic":
            return self.c0 * x
        return self._marginal(x)

    def curvature(self, x: float) -> float:
        if self.kind == "quadratic":
            return self.c0
        h = 1e-6 * max(1.0, abs(x))
        return (self._marginal(x + h) - self._marginal(max(x - h, 0.0))) / (x + h - max(x - h, 0.0))

    @property
    def x_bar(self) -> float:
        """Effort whose cost exhausts the unit budget."""
        if self.kind == "quadratic":
            return math.sqrt(2.0 / self.c0)
        hi = 1.0
        while self._cost(hi) < 1.0:
            hi *= 2.0
            if hi > 1e12:
                raise ValueError("cost never reaches the unit budget")
        return brentq(lambda x: self._cost(x) - 1.0, 0.0, hi, xtol=1e-15)

    def inverse_marginal(self, m: float) -> float:
        xb = self.x_bar
        if m > self.marginal(xb) * (1 + 1e-12):
            raise EffortRangeError(f"marginal benefit {m!r} exceeds c'(x_bar) = {self.marginal(xb)!r}")
        if m <= 0:
            return 0.0
        if self.kind == "quadratic":
            return m / self.c0
        if self._inverse is not None:
            return self._inverse(m)
        return brentq(lambda x: self._marginal(x) - m, 0.0, xb, xtol=1e-15, rtol=1e-15)


def parse_cost(spec: str) -> CostFunction:
    """Parse ``quadratic`` or ``quadratic:c0=<real>``."""
    tag, _, rest = spec.strip().partition(":")
    if tag.strip().lower() != "quadratic":
        raise ValueError(f"unknown cost spec {spec!r}; only quadratic[:c0=<real>] is supported")
    c0 = 1.0
    if rest.strip():
        key, eq, value = rest.partition("=")
        if key.strip() != "c0" or not eq:
            raise ValueError(f"bad cost parameter {rest!r}; expected c0=<real>")
        try:
            c0 = float(value)
        except ValueError:
            raise ValueError(f"c0 is not a number: {value!r}") from None
    return CostFunction.quadratic(c0)


@dataclass(frozen=True)
class TournamentDesign:
    n: int
    dist: NoiseDistribution
    loss: LossAversionParams
    cost: CostFunction = field(default_factory=CostFunction.quadratic)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")

    @property
    def theta(self) -> float:
        return self.loss.theta

    def coefficients(self) -> RankCoefficients:
        return compute_beta(self.dist, self.n)


# -- utility -----------------------------------------------------------------

def _pairwise(v: np.ndarray) -> np.ndarray:
    """``diff[r, s] = v_r - v_s``."""
    return v[:, None] - v[None, :]


def anticipated_loss(p: np.ndarray, v: np.ndarray) -> float:
    """``sum_r sum_{s<r} p_r p_s (v_s - v_r)``: expected shortfall against better ranks."""
    lower = np.tril(np.outer(p, p) * -_pairwise(v), k=-1)
    return float(lower.sum())


def gain_loss_balance(p: np.ndarray, v: np.ndarray) -> float:
    """``sum_r p_r sum_{s != r} p_s (v_r - v_s)``; zero for any ``p`` and ``v``."""
    return float((np.outer(p, p) * _pairwise(v)).sum())


def utility_from_probabilities(p, v, theta: float) -> float:
    """Expected prize minus ``theta`` times anticipated losses (cost excluded)."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v.v if isinstance(v, PrizeSchedule) else v, dtype=float)
    return float(p @ v) - theta * anticipated_loss(p, v)


def utility_reference_dependent(p, v, eta: float, lam: float) -> float:
    """Expected prize plus ``eta`` times gain-loss utility over every ordered pair of prizes."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v.v if isinstance(v, PrizeSchedule) else v, dtype=float)
    diff = _pairwise(v)
    gl = diff + (lam - 1.0) * diff * (diff < 0)
    np.fill_diagonal(gl, 0.0)
    return float(p @ v) + eta * float((np.outer(p, p) * gl).sum())


def utility(design: TournamentDesign, v: PrizeSchedule, x: float, x_star: float) -> float:
    """Payoff of effort ``x`` when every rival exerts ``x_star``."""
    _check_n(design.n, v)
    xb = design.cost.x_bar
    for name, val in (("x", x), ("x_star", x_star)):
        if not 0.0 <= val <= xb * (1 + 1e-12):
            raise ValueError(f"{name}={val} outside [0, x_bar={xb}]")
    p = rank_probabilities(design.dist, design.n, x - x_star)
    return utility_from_probabilities(p, v, design.theta) - design.cost.cost(x)


# -- marginal benefit --------------------------------------------------------

def _check_n(n: int, v: PrizeSchedule) -> None:
    if v.n != n:
        raise ValueError(f"schedule has {v.n} prizes but the tournament has n={n}")


def _agree(a: float, b: float, what: str) -> None:
    if abs(a - b) > AGREE_TOL * max(1.0, abs(a), abs(b)):
        raise RepresentationMismatch(f"{what}: {a!r} vs {b!r}")


def monetary_marginal_R_differential(coeffs: RankCoefficients, v: PrizeSchedule) -> float:
    d = -np.diff(v.v)
    return float(coeffs.B[:-1] @ d) + float(coeffs.B[-1] * v.v[-1])


def monetary_marginal_R(coeffs: RankCoefficients, v: PrizeSchedule) -> float:
    _check_n(coeffs.n, v)
    value = float(coeffs.beta @ v.v)
    _agree(value, monetary_marginal_R_differential(coeffs, v), "R(v) beta form vs differential form")
    return value


def L_by_differentials(coeffs: RankCoefficients, v: PrizeSchedule) -> float:
    """Weights ``2r/n - 1`` on ``B_r d_r``: negative in the top half, positive in the bottom half."""
    n = coeffs.n
    r = np.arange(1, n)
    d = -np.diff(v.v)
    return float(((2.0 * r / n - 1.0) * coeffs.B[:-1]) @ d)


def L_by_pairs(coeffs: RankCoefficients, v: PrizeSchedule) -> float:
    """``-(1/n) sum_r sum_{s<r} (beta_r + beta_s)(v_s - v_r)``."""
    beta = coeffs.beta
    w = beta[:, None] + beta[None, :]
    gap = -_pairwise(v.v)  # v_s - v_r at [r, s]
    return -float(np.tril(w * gap, k=-1).sum()) / coeffs.n


def L_by_prizes(coeffs: RankCoefficients, v: PrizeSchedule) -> float:
    """``(1/n) sum_r [2 B_{r-1} - (n - 2r) beta_r] v_r`` with ``B_0 = 0``."""
    n = coeffs.n
    r = np.arange(1, n + 1)
    B_prev = np.concatenate(([0.0], coeffs.B[:-1]))
    return float(((2.0 * B_prev - (n - 2.0 * r) * coeffs.beta) @ v.v) / n)


def psychological_marginal_L(coeffs: RankCoefficients, v: PrizeSchedule) -> float:
    _check_n(coeffs.n, v)
    value = L_by_differentials(coeffs, v)
    _agree(value, L_by_pairs(coeffs, v), "L(v) differential vs pairwise form")
    _agree(value, L_by_prizes(coeffs, v), "L(v) differential vs per-prize form")
    return value


def marginal_benefit_M(coeffs: RankCoefficients, v: PrizeSchedule, theta: float) -> float:
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return monetary_marginal_R(coeffs, v) + theta * psychological_marginal_L(coeffs, v)


def marginal_weights(v: PrizeSchedule, theta: float) -> np.ndarray:
    """Weights ``w`` with ``M = sum_k beta_k w_k`` (``M`` is linear in ``beta``)."""
    n = v.n
    k = np.arange(1, n + 1)
    tail = np.concatenate((np.cumsum(v.v[::-1])[::-1][1:], [0.0]))  # sum_{r>k} v_r
    return v.v + theta * (2.0 * tail - (n - 2.0 * k) * v.v) / n


# -- optimal prizes ----------------------------------------------------------

def A_r(coeffs: RankCoefficients, theta: float) -> np.ndarray:
    """Marginal benefit of ``r`` equal top prizes, ``r = 1..n-1``."""
    n = coeffs.n
    r = np.arange(1, n)
    return (1.0 + theta * (2.0 * r / n - 1.0)) * coeffs.bar_beta


def A_r_convex_form(coeffs: RankCoefficients, theta: float) -> np.ndarray:
    return (1.0 - theta) * coeffs.bar_beta + (2.0 * theta / coeffs.n) * coeffs.B[:-1]


@dataclass(frozen=True)
class OptimalChoice:
    theta: float
    r_star: int
    ties: tuple[int, ...]
    A: np.ndarray = field(repr=False)

    @property
    def M_star(self) -> float:
        return float(self.A[self.r_star - 1])


def _argmax_set(A: np.ndarray) -> tuple[int, ...]:
    top = A.max()
    band = TIE_RTOL * max(abs(top), 1e-300)
    return tuple(int(i) + 1 for i in np.nonzero(A >= top - band)[0])


def optimal_prizes(coeffs: RankCoefficients, theta: float) -> OptimalChoice:
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    A = A_r(coeffs, theta)
    ties = _argmax_set(A)
    return OptimalChoice(float(theta), ties[0], ties, A)


def optimal_r_star(coeffs: RankCoefficients, theta: float) -> int:
    """Effort-maximising number of equal top prizes; ties go to the smallest ``r``."""
    return optimal_prizes(coeffs, theta).r_star


def M_star(coeffs: RankCoefficients, theta: float) -> float:
    return float(A_r(coeffs, theta).max())


@dataclass(frozen=True)
class StepFunction:
    """``steps[0] = (0, r*(0))``; each later ``(theta_k, r_k)`` means ``r* = r_k`` just above ``theta_k``.

    At a jump point itself the tie rule picks the smaller rank, i.e. the value
    on the left.
    """

    steps: tuple[tuple[float, int], ...]

    @property
    def jumps(self) -> tuple[tuple[float, int], ...]:
        return self.steps[1:]

    def __call__(self, theta: float) -> int:
        value = self.steps[0][1]
        for t, r in self.steps[1:]:
            if theta > t:
                value = r
        return value


def r_star_breakpoints(coeffs: RankCoefficients) -> StepFunction:
    """Exact jump points of ``r*(theta)`` on ``[0, 1]``.

    Each ``A_r`` is linear in ``theta``, so candidate jumps are the pairwise
    crossings; the maximiser is re-checked over all ranks on every interval
    between consecutive candidates.
    """
    n = coeffs.n
    r = np.arange(1, n)
    a = coeffs.bar_beta
    s = coeffs.bar_beta * (2.0 * r / n - 1.0)
    cands = set()
    for i in range(n - 1):
        for j in range(i + 1, n - 1):
            ds = s[j] - s[i]
            if ds != 0.0:
                t = (a[i] - a[j]) / ds
                if 0.0 < t < 1.0:
                    cands.add(float(t))
    edges = [0.0, *sorted(cands), 1.0]
    steps = [(0.0, optimal_r_star(coeffs, 0.0))]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 1e-15:
            continue
        rr = optimal_r_star(coeffs, 0.5 * (lo + hi))
        prev = steps[-1][1]
        if rr != prev:
            i, j = prev - 1, rr - 1
            t = (a[i] - a[j]) / (s[j] - s[i]) if s[j] != s[i] else lo
            steps.append((float(t), rr))
    return StepFunction(tuple(steps))


def vn_coefficient(coeffs: RankCoefficients, theta: float) -> float:
    """Coefficient on the bottom prize in ``R + theta L``; negative, so ``v_n = 0`` is optimal."""
    n = coeffs.n
    compact = (1.0 + theta * (n - 2.0) / n) * coeffs.beta[-1]
    direct = coeffs.beta[-1] - theta * (2.0 * (n - 1) / n - 1.0) * coeffs.B[-2]
    _agree(compact, direct, "v_n coefficient")
    return float(compact)


def effort_sensitivity_sign(coeffs: RankCoefficients, v: PrizeSchedule) -> str:
    """Direction in which equilibrium effort moves with ``theta``.

    Returns ``increasing``, ``decreasing``, ``zero`` or ``ambiguous-numeric``
    (the numeric sign of ``L`` contradicts a structural guarantee).
    """
    L = psychological_marginal_L(coeffs, v)
    sign = "zero" if abs(L) <= SIGN_BAND else ("increasing" if L > 0 else "decreasing")
    n = coeffs.n
    if v.positive_count() <= n // 2 and sign == "increasing":
        return "ambiguous-numeric"
    if v.top_tie_count() >= -(-n // 2) and sign == "decreasing":
        return "ambiguous-numeric"
    return sign


# -- equilibrium -------------------------------------------------------------

@dataclass
class EquilibriumReport:
    theta: float
    R: float
    L: float
    M: float
    x_star: float
    corner: bool
    r_star: Optional[int]
    A: np.ndarray = field(repr=False)
    concave: Optional[bool] = None
    u_xx: Optional[np.ndarray] = field(default=None, repr=False)
    foc_residual: Optional[float] = None


def _sampled_curvature(design: TournamentDesign, v: PrizeSchedule, x_star: float, points: int = 21):
    xb = design.cost.x_bar
    xs = np.linspace(0.0, xb, points)
    h = 1e-3 * xb

    def u(x):
        return utility(design, v, min(max(x, 0.0), xb), x_star)

    out = []
    for x in xs:
        if x - h < 0.0:
            out.append((u(x) - 2 * u(x + h) + u(x + 2 * h)) / h**2)
        elif x + h > xb:
            out.append((u(x) - 2 * u(x - h) + u(x - 2 * h)) / h**2)
        else:
            out.append((u(x - h) - 2 * u(x) + u(x + h)) / h**2)
    return xs, np.array(out)


def _effort(cost: CostFunction, M: float) -> float:
    # within round-off of zero (e.g. flat prizes, where R = sum(beta) / n) there is no incentive
    return 0.0 if M <= SIGN_BAND else cost.inverse_marginal(M)


def equilibrium_effort(design: TournamentDesign, v: PrizeSchedule, concavity: bool = True,
                       simulation=None) -> EquilibriumReport:
    """Symmetric equilibrium effort from ``c'(x*) = M``.

    ``M <= 0`` (up to round-off) gives the corner ``x* = 0``, flagged rather than raised.
    ``concavity`` samples ``u_xx(x; x*)`` at 21 points in ``[0, x_bar]``;
    passing a :class:`~prizeopt.simulate.SimulationConfig` as ``simulation``
    adds a Monte Carlo best-response residual.
    """
    _check_n(design.n, v)
    coeffs = design.coefficients()
    theta = design.theta
    R = monetary_marginal_R(coeffs, v)
    L = psychological_marginal_L(coeffs, v)
    M = R + theta * L
    corner = M <= SIGN_BAND
    x_star = _effort(design.cost, M)
    report = EquilibriumReport(theta, R, L, M, x_star, corner, optimal_r_star(coeffs, theta), A_r(coeffs, theta))
    if concavity:
        _, uxx = _sampled_curvature(design, v, x_star)
        report.u_xx = uxx
        report.concave = bool(np.all(uxx < 0.0))
    if simulation is not None:
        from .simulate import equilibrium_residual

        report.foc_residual = equilibrium_residual(design, v, simulation)
    return report


def effort_curve(coeffs: RankCoefficients, v: Optional[PrizeSchedule], thetas, cost: CostFunction):
    """Rows ``(theta, r, R, L, M, x_star)``; ``v=None`` re-optimises prizes at each ``theta``."""
    from .prizes import make_top_s

    rows = []
    for theta in thetas:
        if v is None:
            r = optimal_r_star(coeffs, theta)
            sched = make_top_s(coeffs.n, r)
        else:
            r, sched = None, v
        R = monetary_marginal_R(coeffs, sched)
        L = psychological_marginal_L(coeffs, sched)
        M = R + theta * L
        rows.append((float(theta), r, R, L, M, _effort(cost, M)))
    return rows
