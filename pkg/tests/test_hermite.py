import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import hermite_e
from scipy import integrate, stats

from gausskk.bodies import ball, cube, cube_half_width, full_space, halfspace, slab
from gausskk.density import gaussian_volume
from gausskk.errors import ContractViolation
from gausskk.hermite import (HermiteIndex, Pm1Function, as_pm1, ball_correlation, ball_correlation_grid,
                             cube_degree2_coeff, cube_low_weight_exact, find_r_star, hermite_coeff,
                             hermite_univariate, low_level_weight, noise_stability, product_of_signs,
                             psi1_stability_exact, sheppard, sign_function)
from gausskk.sampling import RngStream, chi_quantile, solve_slab_width

# level <= 2 weight of the half-volume cube in the +-1 convention, from a
# quadrature evaluation of the degree-2 coefficient of 1{|x| <= c}
CUBE_W = {64: 0.20300151241146472, 256: 0.09122567834400902, 1024: 0.03625145409018276,
          4096: 0.013264974671752226}


# ---------------------------------------------------------------- basis

@pytest.mark.parametrize("d", range(7))
def test_hermite_matches_numpy_probabilists(d):
    x = np.linspace(-4, 4, 41)
    coef = np.zeros(d + 1)
    coef[d] = 1
    ref = hermite_e.hermeval(x, coef) / math.sqrt(math.factorial(d))
    assert np.allclose(hermite_univariate(d, x), ref, rtol=1e-12, atol=1e-12)


def test_hermite_orthonormal_by_quadrature():
    x, w = hermite_e.hermegauss(40)
    w = w / math.sqrt(2 * math.pi)
    gram = np.array([[np.sum(w * hermite_univariate(i, x) * hermite_univariate(j, x)) for j in range(8)]
                     for i in range(8)])
    assert np.allclose(gram, np.eye(8), atol=1e-12)


def test_hermite_scalar_and_errors():
    assert hermite_univariate(0, 3.0) == 1.0
    assert hermite_univariate(2, 1.0) == 0.0
    with pytest.raises(ContractViolation):
        hermite_univariate(-1, 0.0)
    with pytest.raises(ContractViolation):
        HermiteIndex(((0, 1), (0, 2)))
    assert HermiteIndex(((3, 1), (1, 2))).degree == 3


def test_coefficient_estimates():
    f = sign_function(3)
    c1 = hermite_coeff(f, HermiteIndex(((0, 1),)), 400_000, RngStream(1))
    assert abs(c1.z(math.sqrt(2 / math.pi))) <= 4
    c0 = hermite_coeff(f, HermiteIndex(), 400_000, RngStream(2))
    assert abs(c0.z(0.0)) <= 4
    with pytest.raises(ContractViolation):
        hermite_coeff(f, HermiteIndex(((0, 5),)), 10, RngStream(0))


def test_symmetric_body_odd_coefficients_vanish():
    body = slab(4, 0.7)
    for i, idx in enumerate([((0, 1),), ((1, 3),), ((0, 1), (1, 2))]):
        e = hermite_coeff(body, HermiteIndex(idx), 200_000, RngStream(5, i))
        assert abs(e.mean) <= 4 * e.std_error


# ---------------------------------------------------------------- weights

def test_sign_weight_is_two_over_pi():
    rep = low_level_weight(sign_function(6), 200_000, RngStream(3))
    assert abs(rep.w1 - 2 / math.pi) <= 4 * rep.w1_se + 1e-3
    assert abs(rep.w0) <= 4 * rep.w0_se + 1e-6
    assert abs(rep.w2) <= 4 * rep.w2_se + 1e-3


def test_halfspace_weight_matches_sign():
    rep = low_level_weight(halfspace(np.eye(5)[0], 0.0), 200_000, RngStream(4))
    assert abs(rep.w1 - 2 / math.pi) <= 4 * rep.w1_se + 1e-3


def test_parseval_sanity():
    rep = low_level_weight(slab(8, 0.7), 100_000, RngStream(6))
    assert rep.total <= 1 + 3 * rep.total_se


def test_weight_dimension_cap():
    with pytest.raises(ContractViolation):
        low_level_weight(ball(600, 1.0), 10, RngStream(0))


def test_cube_weight_estimate():
    n = 16
    rep = low_level_weight(cube(n, cube_half_width(n)), 400_000, RngStream(7))
    exact = cube_low_weight_exact(n).w_pm1
    assert abs(rep.w2 - exact) <= 4 * rep.w2_se + 2e-3


# ---------------------------------------------------------------- cube closed form

def test_cube_degree2_coeff_against_quadrature():
    for c in (0.3, 0.6745, 1.5, 3.0):
        ref = integrate.quad(lambda x: (x * x - 1) / math.sqrt(2) * stats.norm.pdf(x), -c, c)[0]
        assert cube_degree2_coeff(c) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("n", sorted(CUBE_W))
def test_cube_closed_form_values(n):
    assert cube_low_weight_exact(n).w_pm1 == pytest.approx(CUBE_W[n], rel=1e-10)


def test_cube_one_dimension_monte_carlo():
    cw = cube_low_weight_exact(1)
    assert cw.a0 == 0.5
    e = hermite_coeff(cube(1, cw.c), HermiteIndex(((0, 2),)), 2_000_000, RngStream(8))
    assert abs(e.z(2 * cw.a2)) <= 4


def test_cube_scaled_weight_window():
    vals = [cube_low_weight_exact(n).w_pm1 * n / math.log(n) ** 2 for n in CUBE_W]
    assert max(vals) / min(vals) <= 10


# ---------------------------------------------------------------- stability

def test_sheppard_values():
    assert sheppard(0.0) == pytest.approx(1.0)
    assert sheppard(math.log(2)) == pytest.approx(1 / 3, rel=1e-14)
    assert psi1_stability_exact(16, math.log(2)) == pytest.approx(1 / 9, rel=1e-14)


def test_psi1_warns_for_non_fourth_power():
    with pytest.warns(RuntimeWarning):
        psi1_stability_exact(20, 1.0)


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_sheppard_monte_carlo(t):
    e = noise_stability(sign_function(1), t, 400_000, RngStream(9, int(10 * t)))
    assert abs(e.z(sheppard(t))) <= 4


def test_psi1_monte_carlo():
    e = noise_stability(product_of_signs(256, 4), 1.0, 1_000_000, RngStream(10))
    assert abs(e.z(psi1_stability_exact(256, 1.0))) <= 4


def test_stability_at_zero_noise_is_one():
    assert noise_stability(slab(5, 0.5), 0.0, 1000, RngStream(0)).mean == 1.0
    with pytest.raises(ContractViolation):
        noise_stability(slab(5, 0.5), -1.0, 10, RngStream(0))


def test_stability_decreases_in_t():
    body = ball(8, chi_quantile(8, 0.5))
    vals = [noise_stability(body, t, 200_000, RngStream(11, i)) for i, t in enumerate((0.25, 0.5, 1.0, 2.0))]
    for a, b in zip(vals, vals[1:]):
        assert b.mean <= a.mean + 3 * math.hypot(a.std_error, b.std_error)


@pytest.mark.parametrize("body", [slab(8, 0.6745), ball(8, chi_quantile(8, 0.5))], ids=["slab", "ball"])
def test_stability_lower_bound(body):
    rep = low_level_weight(body, 100_000, RngStream(12))
    for t in (0.5, 1.0, 2.0):
        st_ = noise_stability(body, t, 200_000, RngStream(13, int(4 * t)))
        bound = math.exp(-2 * t) * rep.total
        assert st_.mean >= bound - 3 * math.hypot(st_.std_error, math.exp(-2 * t) * rep.total_se)


def test_as_pm1_rejects_other_types():
    with pytest.raises(TypeError):
        as_pm1(3)
    f = Pm1Function(2, lambda x: np.ones(x.shape[0]))
    assert as_pm1(f) is f


# ---------------------------------------------------------------- r* and ball correlation

def test_r_star_of_median_ball():
    n = 16
    r0 = chi_quantile(n, 0.5)
    rs = find_r_star(ball(n, r0), tol=1e-2, rng=RngStream(14))
    assert abs(rs.r_star - r0) <= 1e-2 + 1e-9


def test_r_star_of_half_slab_matches_exact_profile():
    # for the volume-1/2 slab the root solves 1 - 2 cap(n, d / r) = 1/2 exactly
    n = 64
    d = 0.6744897501960817
    rs = find_r_star(slab(n, d), tol=1e-2, rng=RngStream(15))
    r_exact = d * math.sqrt(n) / solve_slab_width(n, 0.5)
    assert rs.r_star == pytest.approx(r_exact, abs=0.15)
    assert n / 4 <= rs.r_star ** 2 <= 4 * n


def test_ball_correlation_full_space_is_zero():
    bc = ball_correlation(full_space(8), 3.0, 100, RngStream(0))
    assert bc.estimate == 0.0 and bc.std_error == 0.0
    with pytest.raises(ContractViolation):
        ball_correlation(ball(3, 1.0), 0.0, 10, RngStream(0))


def test_ball_correlation_estimators_agree_on_slab():
    n = 64
    body = slab(n, 0.6744897501960817)
    vol = gaussian_volume(body, 200_000, RngStream(16))
    rs = find_r_star(body, rng=RngStream(17), volume=vol)
    mc = ball_correlation(body, rs.r_star, 300_000, RngStream(18))
    gr = ball_correlation_grid(body, rs.r_star, RngStream(19), vol, grid_points=128, samples_per_point=4000)
    assert mc.estimate >= 0.1 + 3 * mc.std_error
    assert abs(mc.estimate - gr.estimate) <= 3 * math.hypot(mc.std_error, gr.std_error) + gr.discretization
    assert mc.weight_bound == pytest.approx(mc.estimate ** 2 / (2 * n))


def test_ball_correlation_of_median_ball_closed_form():
    # for the ball itself the product is |r*^2 - |g|^2| / 2, whose mean follows from chi-square moments
    n = 10
    r0 = chi_quantile(n, 0.5)
    mc = ball_correlation(ball(n, r0), r0, 400_000, RngStream(20))
    chi2 = stats.chi2(n)
    below = integrate.quad(lambda s: (r0 ** 2 - s) * chi2.pdf(s), 0, r0 ** 2)[0]
    above = integrate.quad(lambda s: (s - r0 ** 2) * chi2.pdf(s), r0 ** 2, np.inf)[0]
    assert abs(mc.estimate - (below + above) / 2) <= 4 * mc.std_error
