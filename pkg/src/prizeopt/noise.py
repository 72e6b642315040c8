"""Noise distributions for the additive output shocks.

Every family exposes vectorised ``cdf``, ``sf``, ``pdf``, ``quantile`` and
``hazard`` plus ``density_quantile(u) = pdf(quantile(u))``, which is what the
rank integrals need once they are written in probability space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, ClassVar, Optional

import numpy as np
from scipy import special


class DomainError(ValueError):
    """Argument outside the domain of the requested function."""


class SingularityError(ArithmeticError):
    """Hazard rate requested where the survival function vanishes."""


@dataclass(frozen=True)
class NoiseDistribution:
    """Base class; subclasses are immutable and hashable."""

    kind: ClassVar[str] = ""

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def params(self) -> dict[str, float]:
        return {}

    def cdf(self, t):
        raise NotImplementedError

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def pdf(self, t):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def density_quantile(self, u):
        return self.pdf(self.quantile(u))

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.pdf(t) / self.sf(t)

    def spec(self) -> str:
        """Spec string accepted by :func:`parse_distribution`."""
        if not self.params:
            return self.kind
        body = ",".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}:{body}"


@dataclass(frozen=True)
class Uniform(NoiseDistribution):
    """Uniform on ``[-b/2, b/2]``."""

    b: float = 1.0
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise DomainError(f"uniform width b must be positive, got {self.b}")

    @property
    def support(self):
        return (-0.5 * self.b, 0.5 * self.b)

    @property
    def params(self):
        return {"b": self.b}

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) + 0.5 * self.b) / self.b, 0.0, 1.0)

    def sf(self, t):
        return np.clip((0.5 * self.b - np.asarray(t, dtype=float)) / self.b, 0.0, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= -0.5 * self.b) & (t <= 0.5 * self.b)
        return np.where(inside, 1.0 / self.b, 0.0)

    def quantile(self, u):
        return self.b * (np.asarray(u, dtype=float) - 0.5)

    def density_quantile(self, u):
        return np.full_like(np.asarray(u, dtype=float), 1.0 / self.b)


@dataclass(frozen=True)
class Gumbel(NoiseDistribution):
    """Standard Gumbel, ``F(t) = exp(-exp(-t))``.

    This is the convention under which ``B_r = (1 - r/n)(H_n - H_{n-r})``.
    The failure rate ``s / (e^s - 1)`` with ``s = e^{-t}`` is increasing.
    """

    kind: ClassVar[str] = "gumbel"

    @property
    def support(self):
        return (-math.inf, math.inf)

    # exp(-t) overflows far in the left tail; the limits (0 and 1) are still right
    def cdf(self, t):
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(-np.asarray(t, dtype=float)))

    def sf(self, t):
        with np.errstate(over="ignore"):
            return -np.expm1(-np.exp(-np.asarray(t, dtype=float)))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(-t - np.exp(-t))

    def quantile(self, u):
        return -np.log(-np.log(np.asarray(u, dtype=float)))

    def density_quantile(self, u):
        u = np.asarray(u, dtype=float)
        return -u * np.log(u)


@dataclass(frozen=True)
class Pareto(NoiseDistribution):
    """Pareto with ``F(t) = 1 - 1/t`` on ``[1, inf)``; decreasing failure rate ``1/t``."""

    kind: ClassVar[str] = "pareto"

    @property
    def support(self):
        return (1.0, math.inf)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t > 1.0, 1.0 - 1.0 / np.maximum(t, 1.0), 0.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 / np.maximum(t, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 1.0, 1.0 / np.maximum(t, 1.0) ** 2, 0.0)

    def quantile(self, u):
        return 1.0 / (1.0 - np.asarray(u, dtype=float))

    def density_quantile(self, u):
        return (1.0 - np.asarray(u, dtype=float)) ** 2


@dataclass(frozen=True)
class Burr(NoiseDistribution):
    """Burr with ``F(t) = 1 - 1/(1 + t^2)`` on ``[0, inf)``; failure rate rises then falls."""

    kind: ClassVar[str] = "burr"

    @property
    def support(self):
        return (0.0, math.inf)

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return t * t / (1.0 + t * t)

    def sf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return 1.0 / (1.0 + t * t)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, 2.0 * t / (1.0 + t * t) ** 2, 0.0)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return np.sqrt(u / (1.0 - u))

    def density_quantile(self, u):
        u = np.asarray(u, dtype=float)
        return 2.0 * np.sqrt(u) * (1.0 - u) ** 1.5


@dataclass(frozen=True)
class Normal(NoiseDistribution):
    """Centred normal with standard deviation ``sigma``. No closed-form ``B_r``."""

    sigma: float = 1.0
    kind: ClassVar[str] = "normal"

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"normal sigma must be positive, got {self.sigma}")

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def params(self):
        return {"sigma": self.sigma}

    def cdf(self, t):
        return special.ndtr(np.asarray(t, dtype=float) / self.sigma)

    def sf(self, t):
        return special.ndtr(-np.asarray(t, dtype=float) / self.sigma)

    def pdf(self, t):
        z = np.asarray(t, dtype=float) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def quantile(self, u):
        return self.sigma * special.ndtri(np.asarray(u, dtype=float))


# -- scalar evaluation ------------------------------------------------------

_WHICH = ("cdf", "pdf", "quantile", "hazard", "sf")


def evaluate(dist: NoiseDistribution, which: str, t: float) -> float:
    """Evaluate one of ``cdf``, ``pdf``, ``quantile``, ``hazard`` (or ``sf``) at a scalar."""
    if which not in _WHICH:
        raise DomainError(f"unknown function {which!r}; expected one of {_WHICH}")
    t = float(t)
    if math.isnan(t):
        raise DomainError("argument is NaN")
    if which == "quantile":
        if not 0.0 < t < 1.0:
            raise DomainError(f"quantile requires 0 < u < 1, got {t}")
        return float(dist.quantile(t))
    if which == "hazard":
        lo, _ = dist.support
        if t < lo:
            raise DomainError(f"hazard requested below the support ({t} < {lo})")
        s = float(dist.sf(t))
        if s <= 0.0:
            raise SingularityError(f"hazard undefined at t={t}: survival function is zero")
        return float(dist.pdf(t)) / s
    return float(getattr(dist, which)(t))


# -- closed-form B_r ----------------------------------------------------------

def _harmonic(k: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def _gumbel_B(dist, n: int, r: int) -> float:
    return float((1 - Fraction(r, n)) * (_harmonic(n) - _harmonic(n - r)))


def _pareto_B(dist, n: int, r: int) -> float:
    return float(Fraction(r * (r + 1), n * (n + 1)))


def _burr_B(dist, n: int, r: int) -> float:
    # exact rational prefactor; pi enters with a single rounding
    q = Fraction((n - r) * r * (r + 1) * math.comb(2 * n - 2 * r - 1, n - r) * math.comb(2 * r + 1, r),
                 2 ** (2 * n - 1) * n * (n + 1))
    return float(q) * math.pi


def _uniform_B(dist, n: int, r: int) -> float:
    return 1.0 / dist.b


@dataclass(frozen=True)
class FamilyCatalogEntry:
    """Structural facts about a family. Monotone shapes count as unimodal."""

    tag: str
    factory: Callable[..., NoiseDistribution]
    closed_form: Optional[Callable[[NoiseDistribution, int, int], float]] = None
    ifr: bool = False
    dfr: bool = False
    unimodal_failure_rate: bool = False
    unimodal_density: bool = False
    param_names: tuple[str, ...] = field(default=())


CATALOG: dict[str, FamilyCatalogEntry] = {}


def register_family(entry: FamilyCatalogEntry) -> None:
    """Add a family to the catalogue (and hence to the spec-string parser)."""
    if entry.tag in CATALOG:
        raise ValueError(f"family {entry.tag!r} is already registered")
    CATALOG[entry.tag] = entry


register_family(FamilyCatalogEntry("uniform", Uniform, _uniform_B, ifr=True,
                                   unimodal_failure_rate=True, unimodal_density=True, param_names=("b",)))
register_family(FamilyCatalogEntry("gumbel", Gumbel, _gumbel_B, ifr=True,
                                   unimodal_failure_rate=True, unimodal_density=True))
register_family(FamilyCatalogEntry("pareto", Pareto, _pareto_B, dfr=True,
                                   unimodal_failure_rate=True, unimodal_density=True))
register_family(FamilyCatalogEntry("burr", Burr, _burr_B,
                                   unimodal_failure_rate=True, unimodal_density=True))
register_family(FamilyCatalogEntry("normal", Normal, None, ifr=True,
                                   unimodal_failure_rate=True, unimodal_density=True, param_names=("sigma",)))


def catalog_entry(dist: NoiseDistribution) -> FamilyCatalogEntry:
    return CATALOG[dist.kind]


def closed_form_B(dist: NoiseDistribution, n: int, r: int) -> Optional[float]:
    """Catalogued closed form of ``B_r`` for ``1 <= r <= n-1``, or ``None``."""
    if n < 2 or not 1 <= r <= n - 1:
        raise DomainError(f"closed-form B_r needs 1 <= r <= n-1 with n >= 2, got n={n}, r={r}")
    entry = CATALOG.get(dist.kind)
    if entry is None or entry.closed_form is None:
        return None
    return entry.closed_form(dist, n, r)


def parse_distribution(spec: str) -> NoiseDistribution:
    """Parse ``"uniform:b=1"``, ``"gumbel"``, ``"pareto"``, ``"burr"``, ``"normal:sigma=2"``."""
    tag, _, rest = spec.strip().partition(":")
    tag = tag.strip().lower()
    if tag not in CATALOG:
        raise DomainError(f"unknown distribution {tag!r}; known: {sorted(CATALOG)}")
    entry = CATALOG[tag]
    kwargs = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in entry.param_names:
                raise DomainError(f"bad parameter {item!r} for {tag}; allowed: {entry.param_names}")
            try:
                kwargs[key] = float(value)
            except ValueError:
                raise DomainError(f"parameter {key} of {tag} is not a number: {value!r}") from None
    return entry.factory(**kwargs)


def hazard_shape(dist: NoiseDistribution, grid: np.ndarray, tol: float = 1e-12) -> str:
    """Classify sampled hazard as ``increasing``, ``decreasing``, ``unimodal`` or ``other``."""
    h = dist.hazard(grid)
    steps = np.diff(h)
    signs = np.sign(np.where(np.abs(steps) <= tol * np.maximum(1.0, np.abs(h[:-1])), 0.0, steps))
    signs = signs[signs != 0]
    if signs.size == 0 or np.all(signs > 0):
        return "increasing"
    if np.all(signs < 0):
        return "decreasing"
    changes = np.count_nonzero(np.diff(signs))
    if changes == 1 and signs[0] > 0:
        return "unimodal"
    return "other"
