import numpy as np
import pytest

from prizeopt.incentives import CostFunction, LossAversionParams, TournamentDesign, equilibrium_effort, marginal_benefit_M
from prizeopt.noise import Burr, Gumbel, Pareto, Uniform
from prizeopt.prizes import make_flat, make_top_s
from prizeopt.ranks import compute_beta
from prizeopt.simulate import (
    SimulationConfig,
    block_generator,
    default_grid,
    equilibrium_residual,
    mc_best_response,
    mc_beta,
    mc_beta_independent,
    mc_marginal_benefit,
    mc_rank_probabilities,
    rank_cdf_counts,
)

SMALL = SimulationConfig(samples=100_000, seed=3)


def values(estimates):
    return np.array([e.value for e in estimates])


def test_config_validation():
    for bad in (dict(samples=999), dict(seed=-1), dict(seed=2**64), dict(fd_step=0.0), dict(workers=0)):
        with pytest.raises(ValueError):
            SimulationConfig(**bad)
    assert SimulationConfig().fd_step == 1e-3
    assert SimulationConfig(samples=150_000, block_size=65_536).blocks() == [(0, 65_536), (1, 65_536), (2, 18_928)]


def test_streams_depend_only_on_seed_and_block():
    a = block_generator(5, 2).random(4)
    b = block_generator(5, 2).random(4)
    c = block_generator(5, 3).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_same_seed_same_output():
    a = mc_rank_probabilities(Gumbel(), 5, 0.1, SMALL)
    b = mc_rank_probabilities(Gumbel(), 5, 0.1, SMALL)
    assert a == b
    other = mc_rank_probabilities(Gumbel(), 5, 0.1, SimulationConfig(samples=100_000, seed=4))
    assert a != other


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_invariance(workers):
    base = SimulationConfig(samples=300_000, seed=11, block_size=50_000)
    par = SimulationConfig(samples=300_000, seed=11, block_size=50_000, workers=workers)
    assert mc_beta(Burr(), 6, base) == mc_beta(Burr(), 6, par)
    assert mc_rank_probabilities(Pareto(), 4, -0.2, base) == mc_rank_probabilities(Pareto(), 4, -0.2, par)


def test_cdf_counts_are_cumulative():
    counts = rank_cdf_counts(Gumbel(), 6, [-0.5, 0.0, 0.5], SMALL)
    assert counts.dtype == np.int64
    assert np.all(np.diff(counts, axis=0) >= 0)
    assert np.all(np.diff(counts, axis=1) >= 0)
    assert np.all(counts[-1] == SMALL.samples)


def test_equal_chances_at_zero_lead():
    cfg = SimulationConfig(samples=1_000_000, seed=1)
    for dist, n in ((Burr(), 5), (Gumbel(), 15)):
        for est in mc_rank_probabilities(dist, n, 0.0, cfg):
            assert abs(est.value - 1 / n) <= 3 * est.std_error


def test_uniform_two_player_lead():
    # hand integration gives 1 - (1 - 0.25)^2 / 2 = 0.71875
    est = mc_rank_probabilities(Uniform(1.0), 2, 0.25, SimulationConfig(samples=1_000_000, seed=2))[0]
    assert abs(est.value - 0.71875) <= 3 * est.std_error


def test_uniform_beta():
    est = mc_beta(Uniform(1.0), 4, SimulationConfig(samples=1_000_000, seed=42))
    for e, exact in zip(est, (1.0, 0.0, 0.0, -1.0)):
        assert abs(e.value - exact) <= 3 * e.std_error + 1e-12
    assert values(est).sum() == pytest.approx(0.0, abs=1e-12)


def test_common_random_numbers_reduce_noise():
    crn = mc_beta(Gumbel(), 5, SMALL)
    naive = mc_beta_independent(Gumbel(), 5, SMALL)
    for a, b in zip(crn, naive):
        assert a.std_error < b.std_error / 5


def test_marginal_benefit_matches_quadrature():
    cfg = SimulationConfig(samples=1_000_000, seed=9)
    for dist, s, theta in ((Burr(), 7, 0.5), (Pareto(), 14, 1.0), (Gumbel(), 3, 0.3)):
        design = TournamentDesign(15, dist, LossAversionParams(theta))
        est = mc_marginal_benefit(design, make_top_s(15, s), cfg)
        exact = marginal_benefit_M(compute_beta(dist, 15), make_top_s(15, s), theta)
        assert abs(est.value - exact) <= 3 * est.std_error


def test_best_response_flat_prizes():
    design = TournamentDesign(5, Gumbel(), LossAversionParams(0.0))
    br = mc_best_response(design, make_flat(5), 0.0, SMALL)
    assert br.argmax == 0.0
    assert equilibrium_residual(design, make_flat(5), SMALL) == 0.0


def test_best_response_reproducible():
    design = TournamentDesign(15, Pareto(), LossAversionParams(0.0))
    a = mc_best_response(design, make_top_s(15, 14), 1 / 16, SMALL)
    b = mc_best_response(design, make_top_s(15, 14), 1 / 16, SMALL)
    np.testing.assert_array_equal(a.curve, b.curve)
    assert a.argmax == b.argmax


def test_best_response_grid_checked():
    design = TournamentDesign(4, Gumbel(), LossAversionParams(0.0))
    with pytest.raises(ValueError):
        mc_best_response(design, make_top_s(4, 1), 0.1, SMALL, grid=[0.0, 5.0])


BEST_RESPONSE_DESIGNS = [
    (Pareto(), 15, 14, 0.0, 1.0),
    (Burr(), 15, 7, 0.5, 1.0),
    (Uniform(1.0), 2, 1, 0.0, 1.0),
]


@pytest.mark.parametrize("dist,n,s,theta,c0", BEST_RESPONSE_DESIGNS)
def test_best_response_near_analytic_effort(dist, n, s, theta, c0):
    design = TournamentDesign(n, dist, LossAversionParams(theta), CostFunction.quadratic(c0))
    v = make_top_s(n, s)
    x_star = equilibrium_effort(design, v, concavity=False).x_star
    grid = default_grid(design)
    br = mc_best_response(design, v, x_star, SimulationConfig(samples=1_000_000, seed=0), grid)
    assert abs(br.argmax - x_star) <= (grid[1] - grid[0]) + 3 * br.effort_se


def test_residual_attached_to_report():
    design = TournamentDesign(15, Pareto(), LossAversionParams(0.0))
    rep = equilibrium_effort(design, make_top_s(15, 14), concavity=False, simulation=SMALL)
    assert rep.x_star == pytest.approx(1 / 16)
    assert rep.foc_residual <= default_grid(design)[1] + 0.05


@pytest.mark.slow
def test_gumbel_ninth_rank_gains_from_effort():
    # beta_9 = B_9 - B_8 = 0.00878 at n = 15; separating it from zero needs ~10^7 draws
    est = mc_beta(Gumbel(), 15, SimulationConfig(samples=10_000_000, seed=0, fd_step=1e-2))[8]
    assert est.value > 3 * est.std_error
