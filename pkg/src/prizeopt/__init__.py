"""Optimal prizes in rank-order tournaments with expectation-based loss-averse agents."""

from .incentives import (
    A_r,
    CostFunction,
    EquilibriumReport,
    LossAversionParams,
    M_star,
    TournamentDesign,
    effort_sensitivity_sign,
    equilibrium_effort,
    marginal_benefit_M,
    monetary_marginal_R,
    mu,
    optimal_prizes,
    optimal_r_star,
    psychological_marginal_L,
    r_star_breakpoints,
    utility,
    vn_coefficient,
)
from .noise import Burr, Gumbel, NoiseDistribution, Normal, Pareto, Uniform, closed_form_B, parse_distribution
from .prizes import PrizeSchedule, make_equidistant, make_top_s, parse_prizes
from .ranks import RankCoefficients, bar_beta_hazard, compute_B, compute_beta, r_hat, rank_probability

__version__ = "0.1.0"
