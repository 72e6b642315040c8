import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prizeopt.noise import Burr, DomainError, Gumbel, Normal, Pareto, Uniform, catalog_entry, closed_form_B
from prizeopt.ranks import (
    RankCoefficients,
    bar_beta_hazard,
    closed_form_coefficients,
    compute_B,
    compute_beta,
    order_statistic_density,
    r_hat,
    rank_probabilities,
    rank_probability,
)
from prizeopt.quadrature import integrate

from conftest import ALL_FAMILIES, CLOSED_FORM_FAMILIES

SMOOTH = ("gumbel", "burr", "normal")
EDGE_DENSITY = ("uniform", "pareto")  # density jumps at the lower edge of the support


def harmonic(k):
    return sum(Fraction(1, j) for j in range(1, k + 1))


def central_difference(dist, n, h):
    return (rank_probabilities(dist, n, h) - rank_probabilities(dist, n, -h)) / (2 * h)


# -- rank probabilities --------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 7, 15])
def test_equal_chances_at_zero_lead(family, n):
    np.testing.assert_allclose(rank_probabilities(family, n, 0.0), np.full(n, 1.0 / n), atol=1e-12)


@pytest.mark.parametrize("delta", [-0.3, 0.0, 0.7])
@pytest.mark.parametrize("n", [2, 5, 15])
def test_partition_of_unity(family, n, delta):
    p = rank_probabilities(family, n, delta)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)


@given(delta=st.floats(-2.0, 2.0), n=st.integers(2, 9), name=st.sampled_from(sorted(ALL_FAMILIES)))
@settings(max_examples=40, deadline=None)
def test_partition_of_unity_random(delta, n, name):
    assert rank_probabilities(ALL_FAMILIES[name], n, delta).sum() == pytest.approx(1.0, abs=1e-9)


def test_uniform_two_player_lead():
    # P(d + e1 > e2) with e ~ U[-1/2, 1/2]: 1 - (1 - d)^2 / 2 for 0 <= d <= 1
    d = 0.25
    assert rank_probability(Uniform(1.0), 2, 1, d) == pytest.approx(1 - (1 - d) ** 2 / 2, abs=1e-12)
    assert rank_probability(Uniform(1.0), 2, 1, d) == pytest.approx(0.71875, abs=1e-12)
    assert rank_probability(Uniform(1.0), 2, 1, 1.5) == pytest.approx(1.0, abs=1e-12)
    assert rank_probability(Uniform(1.0), 2, 1, -1.5) == pytest.approx(0.0, abs=1e-12)


def test_rank_probability_rejects_bad_input():
    with pytest.raises(DomainError):
        rank_probability(Gumbel(), 4, 5, 0.0)
    with pytest.raises(DomainError):
        rank_probability(Gumbel(), 1, 1, 0.0)
    with pytest.raises(DomainError):
        rank_probability(Gumbel(), 4, 1, float("inf"))


def test_leading_raises_chance_of_first_place(family):
    p = [rank_probability(family, 6, 1, d) for d in (-0.2, 0.0, 0.2)]
    assert p[0] < p[1] < p[2]


# -- beta, B, bar_beta ---------------------------------------------------------

def test_uniform_beta():
    c = compute_beta(Uniform(1.0), 4)
    np.testing.assert_allclose(c.beta, [1.0, 0.0, 0.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(compute_B(Uniform(1.0), 6)[:5], np.ones(5), atol=1e-12)
    np.testing.assert_allclose(compute_beta(Uniform(2.0), 5).beta, [0.5, 0, 0, 0, -0.5], atol=1e-12)


def test_gumbel_partial_sums():
    c = compute_beta(Gumbel(), 15)
    exact = {r: float((1 - Fraction(r, 15)) * (harmonic(15) - harmonic(15 - r))) for r in (8, 9)}
    assert c.B[7] == pytest.approx(exact[8], abs=1e-12)
    assert c.B[8] == pytest.approx(exact[9], abs=1e-12)
    assert c.B[7] == pytest.approx(0.3385069, abs=5e-8)
    # exact value is 0.34729160 (the commonly quoted 0.3472917 is off in the last digit)
    assert c.B[8] == pytest.approx(0.3472916, abs=5e-8)
    assert c.B[8] == pytest.approx(0.3472917, abs=2e-7)


def test_pareto_B():
    r = np.arange(1, 15)
    np.testing.assert_allclose(compute_B(Pareto(), 15)[:14], r * (r + 1) / 240, rtol=1e-10)


def test_burr_B7():
    # the binomial formula gives 0.45231800; 0.4523157 / 7 would not match M*(0) = 0.0646169 either
    b7 = compute_B(Burr(), 15)[6]
    assert b7 == pytest.approx(closed_form_B(Burr(), 15, 7), rel=1e-12)
    assert b7 == pytest.approx(0.4523180, abs=5e-8)
    assert b7 / 7 == pytest.approx(0.0646169, abs=5e-8)


@pytest.mark.parametrize("n", range(2, 16))
def test_quadrature_matches_closed_forms(closed_family, n):
    B = compute_B(closed_family, n)
    exact = np.array([closed_form_B(closed_family, n, r) for r in range(1, n)])
    np.testing.assert_allclose(B[:-1], exact, rtol=1e-8)
    np.testing.assert_allclose(compute_beta(closed_family, n).B[:-1], exact, rtol=1e-8)


@pytest.mark.parametrize("n", [2, 3, 6, 15])
def test_structural_conditions(family, n):
    c = compute_beta(family, n)
    c.check(1e-10)
    assert c.B[-2] == pytest.approx(-c.beta[-1], abs=1e-12)
    assert c.method == "quadrature"


@pytest.mark.parametrize("n", [2, 4, 9, 15])
def test_cumulative_consistency(family, n):
    np.testing.assert_allclose(compute_B(family, n), compute_beta(family, n).B, atol=1e-9)


@pytest.mark.parametrize("name", SMOOTH)
def test_finite_difference_smooth_families(name):
    dist = ALL_FAMILIES[name]
    for n in range(2, 16):
        fd = central_difference(dist, n, 1e-4)
        np.testing.assert_allclose(fd, compute_beta(dist, n).beta, atol=1e-5, err_msg=f"{name} n={n}")


@pytest.mark.parametrize("name", EDGE_DENSITY)
def test_finite_difference_edge_density_families(name):
    # the density jumps at the support edge, so p_r(delta) is C^1 but its second
    # derivative jumps at 0 and the central difference carries an O(h) bias
    dist = ALL_FAMILIES[name]
    for n in range(2, 16):
        beta = compute_beta(dist, n).beta
        e4 = np.abs(central_difference(dist, n, 1e-4) - beta).max()
        e5 = np.abs(central_difference(dist, n, 1e-5) - beta).max()
        assert e4 / e5 == pytest.approx(10.0, rel=0.01)
        np.testing.assert_allclose(central_difference(dist, n, 1e-6), beta, atol=1e-5)
        richardson = 2 * central_difference(dist, n, 5e-5) - central_difference(dist, n, 1e-4)
        np.testing.assert_allclose(richardson, beta, atol=1e-6)


def test_uniform_finite_difference_bias_is_exact():
    # n = 2: [1 - (1-h)^2/2 - (1-h)^2/2] / (2h) = 1 - h/2
    h = 1e-3
    fd = central_difference(Uniform(1.0), 2, h)
    assert fd[0] == pytest.approx(1 - h / 2, abs=1e-10)


def test_bar_beta_examples():
    assert bar_beta_hazard(Pareto(), 15, 14) == pytest.approx(1 / 16, rel=1e-10)
    assert bar_beta_hazard(Uniform(1.0), 3, 1) == pytest.approx(1.0, rel=1e-10)
    assert bar_beta_hazard(Gumbel(), 15, 1) == pytest.approx(14 / 225, rel=1e-10)


@pytest.mark.parametrize("n", [2, 5, 15])
def test_bar_beta_hazard_path(family, n):
    c = compute_beta(family, n)
    for r in range(1, n):
        assert bar_beta_hazard(family, n, r) == pytest.approx(c.bar_beta[r - 1], rel=1e-7)


def test_bar_beta_hazard_range():
    with pytest.raises(DomainError):
        bar_beta_hazard(Gumbel(), 5, 5)


def test_order_statistic_density_integrates_to_one():
    for k in (1, 3, 8):
        assert integrate(lambda u: order_statistic_density(u, k, 8), 0.0, 1.0)[0] == pytest.approx(1.0, abs=1e-12)


def _switches(x):
    s = np.sign(np.diff(x))
    s = s[s != 0]
    return s, np.count_nonzero(np.diff(s))


@pytest.mark.parametrize("n", range(3, 16))
def test_unimodality(family, n):
    entry = catalog_entry(family)
    c = compute_beta(family, n)
    if entry.unimodal_density:
        s, k = _switches(np.round(c.B[:-1], 12))
        assert k <= 1 and (k == 0 or s[0] > 0)
    if entry.unimodal_failure_rate:
        s, k = _switches(np.round(c.bar_beta, 12))
        assert k <= 1 and (k == 0 or s[0] > 0)


@pytest.mark.parametrize("n", range(2, 16))
def test_pareto_bar_beta_increasing(n):
    bar = compute_beta(Pareto(), n).bar_beta
    assert np.all(bar > 0)
    assert np.all(np.diff(bar) > 0)


def test_r_hat():
    for n in (2, 5, 15):
        assert r_hat(compute_beta(Uniform(1.0), n)) == 1
    assert r_hat(compute_beta(Pareto(), 15)) == 14
    assert r_hat(compute_beta(Burr(), 15)) == 11
    g = compute_beta(Gumbel(), 15)
    assert g.beta[8] > 1e-3 and g.beta[9] < 0
    assert r_hat(g) == 9


def test_closed_form_coefficients():
    c = closed_form_coefficients(Pareto(), 6)
    assert c.method == "closed_form"
    np.testing.assert_allclose(c.beta, compute_beta(Pareto(), 6).beta, atol=1e-12)
    assert closed_form_coefficients(Normal(1.0), 6) is None


def test_coefficients_are_read_only():
    c = compute_beta(Gumbel(), 5)
    with pytest.raises(ValueError):
        c.beta[0] = 1.0


def test_from_beta_and_from_B_agree():
    beta = [0.6, 0.1, -0.2, -0.5]
    a = RankCoefficients.from_beta(beta, "test")
    b = RankCoefficients.from_B(a.B[:-1], "test")
    np.testing.assert_allclose(a.beta, b.beta, atol=1e-15)
    np.testing.assert_allclose(a.bar_beta, [0.6, 0.35, 0.5 / 3])


def test_check_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        RankCoefficients.from_beta([0.5, -0.4], "test").check()
    with pytest.raises(ValueError):
        RankCoefficients.from_beta([-0.5, 0.5], "test").check()


def test_normal_scale():
    # a scaled copy divides every coefficient by the scale
    np.testing.assert_allclose(compute_beta(Normal(2.0), 7).beta, compute_beta(Normal(1.0), 7).beta / 2, rtol=1e-9)
    assert math.isclose(compute_beta(Normal(1.0), 2).beta[0], 1 / (2 * math.sqrt(math.pi)), rel_tol=1e-10)
