import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kaclab import clt
from kaclab.densities import Density, delta_schedule, sigma2
from kaclab.errors import (ConvergenceError, DomainError, IndeterminateSignError,
                           UnsupportedOrderError)

from oracles import chi2_pdf, log_chi2_pdf, log_conv_mixture

# log h^{*n}(u) from the hypergeometric oracle (40 digits)
MIXTURE_ORACLE = [
    (5, 2.0, 0.3, -1.8828234707290747),
    (8, 8.0, 0.1, -2.9166499730141466),
    (16, 12.0, 0.1, -2.847292305877372),
    (64, 64.0, 0.05, -4.420258165678915),
    (128, 100.0, 0.2, -4.696287925201435),
    (32, 200.0, 0.05, -11.606966421298466),
]


@pytest.mark.parametrize("n,u,d,expect", MIXTURE_ORACLE)
def test_mixture_against_frozen_oracle(n, u, d, expect):
    assert clt.log_conv_power(Density.kac(d), n, u) == pytest.approx(expect, abs=1e-12)


@pytest.mark.parametrize("n,u,d", [(6, 3.3, 0.25), (40, 55.0, 0.02)])
def test_mixture_against_live_oracle(n, u, d):
    assert clt.log_conv_power(Density.kac(d), n, u) == pytest.approx(
        log_conv_mixture(n, u, d), abs=1e-12)


def test_small_examples():
    g = Density.gaussian()
    assert clt.conv_power(g, 4, 4.0) == pytest.approx(math.exp(-2), rel=1e-12)  # u e^{-u/2} / 4
    assert clt.conv_power(g, 4, 4.0) == pytest.approx(0.1353352832366127, rel=1e-12)
    assert clt.conv_power(g, 16, 16.0) == pytest.approx(chi2_pdf(16, 16.0), rel=1e-12)
    # delta = 1/2 is chi-square(8) at its mean
    assert clt.conv_power(Density.kac(0.5), 8, 8.0) == pytest.approx(0.09768340740658221, rel=1e-12)


@pytest.mark.parametrize("n", [5, 8, 16, 64, 128])
def test_chi_square_bulk(n):
    lo, hi = clt.bulk_interval(n, 2.0)
    u = np.linspace(max(lo, 1e-3), hi, 257)
    np.testing.assert_allclose(clt.log_conv_power(Density.gaussian(), n, u),
                               log_chi2_pdf(n, u), atol=1e-12)


def test_far_tails_keep_relative_accuracy():
    for n, u in [(16, 0.05), (16, 400.0), (128, 2000.0), (64, 1.0)]:
        assert clt.log_conv_power(Density.gaussian(), n, u) == pytest.approx(
            log_chi2_pdf(n, u), abs=1e-10)


@pytest.mark.parametrize("n,d", [(8, 0.1), (16, 0.3), (24, 0.05)])
def test_real_axis_route_agrees(n, d):
    dens = Density.kac(d)
    u = np.linspace(0.6 * n, 1.6 * n, 9)
    a = clt.evaluate_conv_power(dens, n, u, clt.FourierPlan(method="real_axis"))
    b = clt.evaluate_conv_power(dens, n, u)
    assert a.method == "real_axis" and b.method == "contour"
    np.testing.assert_allclose(a.values, b.values, rtol=1e-8)


def test_real_axis_reports_required_cutoff():
    plan = clt.FourierPlan(method="real_axis", cutoff=1.0)
    with pytest.raises(ConvergenceError, match="need cutoff"):
        clt.conv_power(Density.kac(0.1), 8, 8.0, plan)


def test_order_and_domain_errors():
    with pytest.raises(UnsupportedOrderError):
        clt.conv_power(Density.kac(0.1), 4, 4.0)
    with pytest.raises(DomainError):
        clt.conv_power(Density.kac(0.1), 8, 0.0)
    with pytest.raises(DomainError):
        clt.FourierPlan(panels=32)
    # the Gaussian has a closed-form density for every order
    assert clt.conv_power(Density.gaussian(), 2, 1.0) == pytest.approx(chi2_pdf(2, 1.0), rel=1e-12)


def test_contour_failure_is_reported():
    plan = clt.FourierPlan(max_panels=2)
    with pytest.raises((ConvergenceError, IndeterminateSignError)):
        clt.conv_power(Density.kac(0.01), 200, 5.0, plan)


def test_conv_power_integrates_to_one():
    dens = Density.kac(0.1)
    n = 20
    u = np.linspace(1e-6, 200, 20001)
    h = clt.conv_power(dens, n, u)
    assert np.trapezoid(h, u) == pytest.approx(1.0, abs=1e-6)
    assert np.trapezoid(u * h, u) == pytest.approx(n, rel=1e-6)


def test_gaussian_llt_and_lambda():
    assert clt.gaussian_llt(10, 2.0, 10.0) == pytest.approx(1 / math.sqrt(2 * math.pi * 20))
    dens = Density.gaussian()
    n = 64
    u = np.array([50.0, 64.0, 80.0])
    lam = clt.lambda_dev(dens, n, 0, u)
    expect = math.sqrt(2 * n) * chi2_pdf(n, u) - np.exp(-((u - n) ** 2) / (4 * n)) / math.sqrt(2 * math.pi)
    np.testing.assert_allclose(lam, expect, atol=1e-12)


def test_measured_eps_gaussian_oracle():
    from scipy import optimize
    n = 64
    lo, hi = clt.bulk_interval(n, 2.0)
    grid = np.linspace(lo, hi, 200001)

    def lam(u):
        return abs(math.sqrt(2 * n) * chi2_pdf(n, u) - math.exp(-((u - n) ** 2) / (4 * n)) / math.sqrt(2 * math.pi))

    k = int(np.argmax([lam(x) for x in grid[::100]])) * 100
    res = optimize.minimize_scalar(lambda x: -lam(x), bounds=(grid[k - 100], grid[k + 100]),
                                   method="bounded", options={"xatol": 1e-12})
    eps = clt.measured_eps(Density.gaussian(), n, 0)
    assert eps.value == pytest.approx(-res.fun, abs=1e-8)


def _brute_sup(d, lo, hi, m=400001):
    xs = np.geomspace(lo, hi, m)
    return float(np.max(np.abs(clt.char_fn(Density.kac(d), xs))))


@pytest.mark.parametrize("d", [0.1, 0.05, 0.01])
def test_alpha_measurements(d):
    c = clt.C_DEFAULT
    alpha = clt.alpha_outside(d)
    assert alpha == pytest.approx(1 - _brute_sup(d, c * d, 1e4 * c * d), abs=1e-9)
    lead = d * (1 - 0.8 ** 0.25)
    assert 0.9 * lead <= alpha <= 2 * lead
    ab = clt.alpha_annulus(d, 0.1)
    assert ab == pytest.approx(1 - _brute_sup(d, c * d ** 1.1, c * d), abs=1e-9)
    assert ab >= 0.5 * d ** 1.2 / 16
    # the annulus sits closer to the origin, so its gap is smaller
    assert ab <= alpha


def test_alpha_requires_sub_half():
    with pytest.raises(DomainError):
        clt.alpha_outside(0.5)


def test_defect_series_matches_direct():
    d, s2 = 0.1, sigma2(0.1)
    xi = np.array([1e-3, 3e-3, 7e-3])
    direct = (clt.char_fn(Density.kac(d), xi) - clt._gamma1(s2, xi)) / xi ** 3
    np.testing.assert_allclose(clt._defect_series(d, s2, xi), direct, rtol=1e-7)


def test_m_constants_scaling():
    m = [clt.m_constants(d) for d in (0.1, 0.05, 0.025)]
    scaled = [x.M * x.delta ** 2 for x in m]
    assert max(scaled) / min(scaled) < 4
    for x in m:
        assert x.M >= x.limit
        assert x.M0 == pytest.approx(x.M * x.delta ** 2)
        assert x.composite == pytest.approx(x.M)
    # closed-form small-xi limit
    d = 0.1
    m3 = 15 / 8 * (1 / d ** 2 + 1 / (1 - d) ** 2)
    assert m[0].limit == pytest.approx(4 * math.pi ** 3 / 3 * abs(m3 - 1 - 3 * sigma2(d)))


@pytest.mark.parametrize("d,n", [(0.1, 49), (0.05, 31), (0.3, 10)])
def test_tail_integral_lemma(d, n):
    t = clt.tail_integral(d, n)
    alpha = clt.alpha_outside(d)
    assert t <= 2 * (1 - alpha) ** n / math.pi + 2 / (math.pi * (n - 3))
    # brute force on a log grid
    xs = np.geomspace(clt.C_DEFAULT * d, 1e7, 400001)
    brute = 2 * np.trapezoid(np.abs(clt.char_fn(Density.kac(d), xs)) ** n, xs)
    assert t == pytest.approx(brute, rel=1e-5)


@pytest.mark.parametrize("N", [32, 128])
def test_certificate_dominates_measurement(N):
    d = delta_schedule(N, 0.1)
    cert = clt.clt_certificate(d, N, 0.1)
    assert cert.holds
    assert cert.total.value == pytest.approx(cert.outside.value + cert.inside.value)
    eps = clt.measured_eps(Density.kac(d), N, 0)
    assert eps.value <= math.sqrt(N * sigma2(d)) * cert.total.value


def test_certificate_terms_sum():
    out = clt.bound_outside(64, 0.1, clt.C_DEFAULT, 7.0, 0.01, 0.02)
    assert out.value == pytest.approx(sum(out.terms))
    assert out.terms[0] == pytest.approx(0.04)
    ins = clt.bound_inside(64, 0.1, clt.C_DEFAULT, 0.1, 7.0, 0.005, 0.7, 0.0, 0.0)
    assert ins.value == pytest.approx(sum(ins.terms))
    assert ins.terms[0] == pytest.approx(clt.C_DEFAULT ** 4 * 0.01 * 0.7 / 2)


def test_appendix_grid_holds():
    rows = clt.appendix_checks()
    assert len(rows) == 51
    assert all(lhs <= rhs for _, lhs, rhs in rows)


def test_printed_lower_bound_fails_below_one():
    # the printed window lower bound with an unsquared a overshoots for a < 1
    b = clt.gaussian_integral_bounds(0.5, 2.0)
    assert not b.printed_lower_applies
    assert b.lower > b.middle
    assert b.holds


@given(st.floats(1.0, 10.0), st.floats(0.01, 10.0))
def test_gaussian_integral_bounds_property(a, eta):
    assert clt.gaussian_integral_bounds(a, eta).holds


@given(st.floats(0.05, 5.0), st.integers(0, 200), st.integers(1, 2000))
def test_special_sum_bounds_property(a, k0, extra):
    assert clt.special_sum_bounds(a, k0, k0 + extra).holds


@pytest.mark.parametrize("d", [0.1, 0.05, 0.01])
def test_special_property_rows(d):
    assert all(lhs <= rhs for _, lhs, rhs in clt.special_property_checks(d, 0.1))
