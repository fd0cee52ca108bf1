import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from kaclab import clt
from kaclab.densities import Density
from kaclab.errors import DomainError
from kaclab.normalization import (LogConvTable, LogValue, conv_table, log_sphere_area, log_sum,
                                  log_Z, log_Z_gaussian, log_Z_ratio, method_difference)

from oracles import gaussian_log_Z

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda x: abs(x) > 1e-300)


def test_sphere_areas():
    assert math.exp(log_sphere_area(2).log) == pytest.approx(2 * math.pi, rel=1e-15)
    assert math.exp(log_sphere_area(3).log) == pytest.approx(4 * math.pi, rel=1e-15)
    assert math.exp(log_sphere_area(4).log) == pytest.approx(2 * math.pi ** 2, rel=1e-15)
    # far past double overflow of Gamma
    assert math.isfinite(log_sphere_area(10 ** 6).log)
    for bad in (0, -1, 2.5):
        with pytest.raises(DomainError):
            log_sphere_area(bad)


@given(finite, finite)
def test_logvalue_arithmetic(x, y):
    X, Y = LogValue.of(x), LogValue.of(y)
    assert float(X * Y) == pytest.approx(x * y, rel=1e-13)
    assert float(X / Y) == pytest.approx(x / y, rel=1e-13)
    s = x + y
    assume(abs(s) > 1e-9 * max(abs(x), abs(y)))
    assert float(X + Y) == pytest.approx(s, rel=1e-12 * max(abs(x), abs(y)) / abs(s) + 1e-14)
    assert float(X - Y) == pytest.approx(x - y, rel=1e-12 * max(abs(x), abs(y)) / max(abs(x - y), 1e-300) + 1e-14)


def test_logvalue_edge_cases():
    z = LogValue.zero()
    assert float(z) == 0.0
    assert float(LogValue.of(3.0) - LogValue.of(3.0)) == 0.0
    assert float(LogValue.of(-2.0) ** 2) == pytest.approx(4.0)
    assert float(LogValue.of(-2.0) ** 3) == pytest.approx(-8.0)
    with pytest.raises(DomainError):
        LogValue.of(-2.0) ** 0.5
    with pytest.raises(ZeroDivisionError):
        LogValue.of(1.0) / z
    # values far outside double range
    big = LogValue(5000.0)
    assert (big * big).log == 10000.0
    assert (big / big).log == 0.0


def test_log_sum_is_stable():
    vals = [LogValue(1000.0 + k) for k in range(5)]
    expect = 1000.0 + math.log(sum(math.exp(k) for k in range(5)))
    assert log_sum(vals).log == pytest.approx(expect, rel=1e-15)


@pytest.mark.parametrize("N", [8, 16, 64, 128])
@pytest.mark.parametrize("frac", [0.5, 1.0, 2.0])
def test_gaussian_Z_oracle(N, frac):
    u = frac * N
    assert abs(log_Z(Density.gaussian(), N, u).logZ.log - gaussian_log_Z(N, u)) <= 1e-8


def test_small_N_gaussian():
    # N = 3, u = 1: sphere integral of the standard normal product
    assert log_Z(Density.gaussian(), 3, 1.0).logZ.log == pytest.approx(
        -1.5 * math.log(2 * math.pi) - 0.5, abs=1e-12)


def test_Z_ratio_gaussian():
    N, j, u = 32, 2, 20.0
    r = log_Z_ratio(Density.gaussian(), N, j, u)
    assert r.log == pytest.approx(gaussian_log_Z(N - j, u) - gaussian_log_Z(N, N), abs=1e-10)
    with pytest.raises(DomainError):
        log_Z_ratio(Density.gaussian(), N, j, N + 1.0)


@pytest.mark.parametrize("N,d", [(64, 0.1), (256, 0.05)])
def test_method_difference_identity(N, d):
    dens = Density.kac(d)
    s2 = dens.sigma2
    for u in (0.9 * N, float(N)):
        lam = clt.lambda_dev(dens, N, 0, u)
        expect = math.log1p(math.sqrt(2 * math.pi) * lam * math.exp((u - N) ** 2 / (2 * N * s2)))
        assert method_difference(dens, N, 0, u) == pytest.approx(expect, abs=1e-10)


def test_llt_Z_gaussian_closed_form():
    # for the Gaussian the LLT approximation is the normal density at u
    N, u = 40, 40.0
    z = log_Z_gaussian(Density.gaussian(), N, 0, u).logZ.log
    z_exact = log_Z(Density.gaussian(), N, u).logZ.log
    assert abs(z - z_exact) < 0.05


def test_table_matches_direct_inversion():
    dens = Density.kac(0.1)
    tab = LogConvTable(dens, 64, 1)
    assert tab.check_error <= 1e-7
    u = np.linspace(tab.lo, 64.0, 37)
    np.testing.assert_allclose(tab(u), clt.log_conv_power(dens, 63, u), atol=1e-7)
    below = np.array([1e-3, 0.5 * tab.lo])
    np.testing.assert_allclose(tab(below), clt.log_conv_power(dens, 63, below), atol=1e-13)
    assert conv_table(dens, 64, 1) is conv_table(dens, 64, 1)


def test_table_budget_violation_raises():
    from kaclab.errors import InconsistencyError
    with pytest.raises(InconsistencyError):
        LogConvTable(Density.kac(0.1), 64, 1, nodes=4, budget=1e-7)
