"""Data behind the three-family, n = 15 illustration: curves, steps and optimal-prize effort."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .incentives import M_star, marginal_benefit_M, optimal_r_star, r_star_breakpoints
from .noise import Burr, Gumbel, NoiseDistribution, Pareto
from .prizes import PrizeSchedule, PrizeValidationError
from .ranks import RankCoefficients, compute_beta, r_hat

N_AGENTS = 15
FAMILIES: dict[str, NoiseDistribution] = {"gumbel": Gumbel(), "pareto": Pareto(), "burr": Burr()}

# six graded prizes as originally published; the sixth entry breaks both constraints
GRADED_SIX_AS_PUBLISHED = (Fraction(2, 7), Fraction(5, 21), Fraction(4, 21), Fraction(1, 7),
                           Fraction(2, 21), Fraction(1, 7)) + (Fraction(0),) * 9
GRADED_SIX = GRADED_SIX_AS_PUBLISHED[:5] + (Fraction(1, 21),) + (Fraction(0),) * 9
NINE_PLUS_FIVE = (Fraction(1, 10),) * 9 + (Fraction(1, 50),) * 5 + (Fraction(0),)

# published r_hat values that disagree with the published B_r formula
PUBLISHED_R_HAT = {"gumbel": 8, "pareto": 14, "burr": 11}


def graded_six_schedule() -> PrizeSchedule:
    """Six positive prizes with equal steps of 1/21 (the corrected published schedule)."""
    return PrizeSchedule([float(x) for x in GRADED_SIX])


def nine_plus_five_schedule() -> PrizeSchedule:
    """Nine prizes of 1/10, five of 1/50, nothing for last place."""
    return PrizeSchedule([float(x) for x in NINE_PLUS_FIVE])


def published_schedule_errors() -> list[str]:
    """Why the published six-prize schedule is rejected (empty list if it were valid)."""
    try:
        PrizeSchedule([float(x) for x in GRADED_SIX_AS_PUBLISHED])
    except PrizeValidationError as exc:
        total = sum(GRADED_SIX_AS_PUBLISHED)
        return [f"published six-prize schedule rejected ({exc}); exact sum {total}; "
                f"sixth prize 1/7 replaced by 1/21"]
    return []


def errata(coeffs_by_family: dict[str, RankCoefficients]) -> list[str]:
    notes = published_schedule_errors()
    for name, coeffs in coeffs_by_family.items():
        computed = r_hat(coeffs)
        published = PUBLISHED_R_HAT.get(name)
        if published is not None and computed != published:
            notes.append(
                f"{name} n={coeffs.n}: published r_hat={published} is inconsistent with the B_r formula "
                f"(B_{computed}={float(coeffs.B[computed - 1]):.7f} > B_{computed - 1}={float(coeffs.B[computed - 2]):.7f}); "
                f"using r_hat={computed}")
    notes.append("gumbel: published cdf 1-exp(-exp(-t)) is decreasing; exp(-exp(-t)) used, which reproduces the published B_r")
    return notes


def panels(dist: NoiseDistribution, thetas, n: int = N_AGENTS):
    """Three tables ``(columns, rows)``: M for both schedules, r* steps on the grid, M*."""
    coeffs = compute_beta(dist, n)
    v1, v2 = graded_six_schedule(), nine_plus_five_schedule()
    schedules = (
        ("theta", "M_graded_six", "M_nine_plus_five"),
        [(t, marginal_benefit_M(coeffs, v1, t), marginal_benefit_M(coeffs, v2, t)) for t in thetas],
    )
    steps = ("theta", "r_star"), [(t, optimal_r_star(coeffs, t)) for t in thetas]
    mstar = ("theta", "r_star", "M_star"), [(t, optimal_r_star(coeffs, t), M_star(coeffs, t)) for t in thetas]
    return {"schedules": schedules, "r_star": steps, "M_star": mstar}, coeffs


def theta_grid(start: float = 0.0, stop: float = 1.0, step: float = 0.01) -> np.ndarray:
    if step <= 0:
        raise ValueError("theta grid step must be positive")
    if not (0.0 <= start <= 1.0 and 0.0 <= stop <= 1.0) or stop < start:
        raise ValueError(f"theta grid {start}:{stop}:{step} must lie within [0, 1] with start <= stop")
    k = int(np.floor((stop - start) / step + 1e-9))
    return np.round(start + step * np.arange(k + 1), 12)


def breakpoint_table(dist: NoiseDistribution, n: int = N_AGENTS):
    return r_star_breakpoints(compute_beta(dist, n)).steps
