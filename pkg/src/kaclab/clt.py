"""Convolution powers of ``h``, the Gaussian local limit, and the Fourier-split bounds.

``h^{*n}`` is recovered from ``g^n`` by Fourier inversion.  The default route
deforms the inversion line onto a steepest-descent wedge through the saddle
point of ``g(xi)^n exp(2 pi i xi u)``; on the wedge the integrand decays
exponentially, so no frequency cutoff is involved and relative accuracy holds
far into the tails.  The literal real-axis integral ``2 int_0^Xi Re(...)`` is
kept as a second, independent route for moderate ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .densities import Delta, Density, as_delta, as_density, char_fn, sigma2
from .errors import (ConvergenceError, DomainError, InconsistencyError,
                     IndeterminateSignError, UnsupportedOrderError)
from .quadrature import integrate, panel_nodes

C_DEFAULT = 1.0 / (4.0 * math.pi)
MIN_ORDER = 5
GRID_PER_DECADE = 4096
REFINE_PASSES = 3


@dataclass(frozen=True)
class FourierPlan:
    """Inversion settings.

    ``method="contour"`` (default) uses the saddle-point wedge; ``tail_tol``
    is then the relative size of the truncated wedge tail.  ``"real_axis"``
    integrates on ``[0, cutoff]`` with at least ``panels`` panels, choosing the
    cutoff from the ``|g| <= C |xi|^-1/2`` envelope unless one is given.
    """

    method: str = "contour"
    tail_tol: float = 1e-14
    panels: int = 64
    cutoff: float | None = None
    max_cutoff: float = 1e4
    angle: float = math.pi / 8
    growth: float = 1.25
    max_panels: int = 4000

    def __post_init__(self):
        if self.method not in ("contour", "real_axis"):
            raise DomainError(f"unknown inversion method {self.method!r}")
        if self.panels < 64:
            raise DomainError("a plan needs at least 64 panels")
        if not self.tail_tol > 0:
            raise DomainError("tail tolerance must be positive")
        if self.cutoff is not None and not self.cutoff > 0:
            raise DomainError("cutoff must be positive")
        if not 0 < self.angle < math.pi / 2:
            raise DomainError("wedge angle must lie in (0, pi/2)")


DEFAULT_PLAN = FourierPlan()


@dataclass
class ConvolutionPowerEvaluation:
    n: int
    u: np.ndarray
    values: np.ndarray
    log_values: np.ndarray
    rel_error: np.ndarray
    method: str
    panels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def error(self) -> float:
        """Largest absolute error estimate over the grid."""
        return float(np.max(self.rel_error * self.values)) if self.values.size else 0.0


def _min_order(density: Density) -> int:
    # chi-square powers are fine for any order; the mixture needs margin
    return 1 if density.kind == "gaussian" else MIN_ORDER


def evaluate_conv_power(density, n: int, u, plan: FourierPlan | None = None) -> ConvolutionPowerEvaluation:
    density = as_density(density)
    plan = plan or DEFAULT_PLAN
    n = int(n)
    if n < _min_order(density):
        raise UnsupportedOrderError(
            f"convolution order n={n} unsupported for {density.kind}; need n >= {_min_order(density)}")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(~(u > 0)):
        raise DomainError("convolution powers are evaluated at u > 0 only")
    if plan.method == "real_axis":
        return _real_axis(density, n, u, plan)
    logv, rel, panels, status = kernels.log_conv_power_kernel(
        n, u, density.mix, angle=plan.angle, growth=plan.growth, tol=plan.tail_tol,
        max_panels=plan.max_panels)
    if np.any(status == kernels.NONPOSITIVE):
        bad = u[status == kernels.NONPOSITIVE][0]
        raise IndeterminateSignError(f"h^*{n}({bad:.6g}) not resolved above its error estimate")
    if np.any(status != kernels.OK):
        bad = u[status != kernels.OK][0]
        raise ConvergenceError(
            f"contour inversion for n={n} at u={bad:.6g} did not converge within "
            f"{plan.max_panels} panels")
    return ConvolutionPowerEvaluation(n, u, np.exp(logv), logv, rel, "contour", panels)


def _real_axis(density: Density, n: int, u: np.ndarray, plan: FourierPlan) -> ConvolutionPowerEvaluation:
    d = density.mix
    if n <= 2:
        raise UnsupportedOrderError("real-axis inversion needs n >= 3 for an integrable tail")
    env = (d ** 1.5 + (1 - d) ** 1.5) / math.sqrt(2 * math.pi)
    p = n / 2 - 1
    # 2 int_Xi^inf (env xi^-1/2)^n = 2 env^n Xi^-p / p  <=  tail_tol
    log_req = (math.log(2.0) + n * math.log(env) - math.log(p) - math.log(plan.tail_tol)) / p
    required = max(math.exp(log_req), 1e-3)
    cutoff = plan.cutoff if plan.cutoff is not None else required
    if cutoff < required or required > plan.max_cutoff:
        raise ConvergenceError(
            f"tail tolerance {plan.tail_tol:g} unreachable: need cutoff Xi >= {required:.6g} "
            f"(configured {cutoff:.6g}, limit {plan.max_cutoff:g})")
    width = min(cutoff / plan.panels, 1.0 / (16.0 * float(u.max())))
    npan = int(math.ceil(cutoff / width))
    xi, w = panel_nodes(np.linspace(0.0, cutoff, npan + 1))
    g = char_fn(density, xi)
    gn = np.exp(n * np.log(g))
    tail = 2 * env ** n * cutoff ** (-p) / p
    vals = np.empty(u.shape)
    for s in range(0, u.size, 8):
        ph = np.exp(2j * np.pi * np.outer(u[s:s + 8], xi))
        vals[s:s + 8] = 2.0 * (ph * (w * gn)).real.sum(axis=1)
    absum = 2.0 * float(np.sum(w * np.abs(gn)))
    abserr = tail + 64 * np.finfo(float).eps * absum
    if np.any(vals <= abserr):
        raise IndeterminateSignError("real-axis inversion below its error estimate; use the contour route")
    return ConvolutionPowerEvaluation(n, u, vals, np.log(vals), abserr / vals, "real_axis",
                                      np.full(u.shape, npan))


def log_conv_power(density, n: int, u, plan: FourierPlan | None = None):
    ev = evaluate_conv_power(density, n, u, plan)
    return ev.log_values if np.ndim(u) else float(ev.log_values[0])


def conv_power(density, n: int, u, plan: FourierPlan | None = None):
    """``h^{*n}(u)``, the density of a sum of ``n`` independent copies of ``V**2``."""
    ev = evaluate_conv_power(density, n, u, plan)
    return ev.values if np.ndim(u) else float(ev.values[0])


# ---------------------------------------------------------------------------
# Gaussian comparator and pointwise deviation
# ---------------------------------------------------------------------------

def gaussian_llt(n: int, sigma2_: float, u):
    """Normal density with mean ``n`` and variance ``n sigma2_``."""
    if n < 1 or not sigma2_ > 0:
        raise DomainError("need n >= 1 and sigma2 > 0")
    u = np.asarray(u, dtype=float)
    s = math.sqrt(n * sigma2_)
    out = np.exp(-((u - n) ** 2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))
    return out if out.ndim else float(out)


def lambda_dev(density, N: int, j: int, u, plan: FourierPlan | None = None):
    """``sqrt(n) Sigma h^{*n}(u) - phi((u - n)/(sqrt(n) Sigma))`` with ``n = N - j``."""
    density = as_density(density)
    n = N - j
    if n < MIN_ORDER:
        raise UnsupportedOrderError(f"N - j = {n} < {MIN_ORDER}")
    s2 = density.sigma2
    ua = np.asarray(u, dtype=float)
    h = conv_power(density, n, ua, plan)
    scale = math.sqrt(n * s2)
    out = scale * h - np.exp(-((ua - n) ** 2) / (2 * n * s2)) / math.sqrt(2 * math.pi)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class EpsilonMeasurement:
    N: int
    j: int
    value: float
    u_at: float
    lo: float
    hi: float


def bulk_interval(n: int, s2: float, width: float = 8.0) -> tuple[float, float]:
    half = width * math.sqrt(n * s2)
    return max(n - half, 1e-9 * n), n + half


def measured_eps(density, N: int, j: int = 0, plan: FourierPlan | None = None,
                 points: int = 1601) -> EpsilonMeasurement:
    """Measured ``eps_j(N) = sup |lambda_j(N - j, u)|`` over the bulk window."""
    density = as_density(density)
    n = N - j
    lo, hi = bulk_interval(n, density.sigma2)
    grid = np.linspace(lo, hi, points)
    lam = np.abs(lambda_dev(density, N, j, grid, plan))
    k = int(np.argmax(lam))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, points - 1)]
    best_u, best = grid[k], lam[k]
    res = optimize.minimize_scalar(lambda x: -abs(lambda_dev(density, N, j, x, plan)),
                                   bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-10 * n})
    if -res.fun > best:
        best_u, best = float(res.x), float(-res.fun)
    return EpsilonMeasurement(N, j, float(best), float(best_u), lo, hi)


# ---------------------------------------------------------------------------
# measured constants of the frequency-domain split
# ---------------------------------------------------------------------------

def _require_sub_half(d: Delta):
    if not d.value < 0.5:
        raise DomainError("this measurement needs delta < 1/2")


def _abs_g(d: float, xi):
    return np.abs(char_fn(Density.kac(d), xi))


def _envelope(d: float, xi):
    # |g| <= sum of component moduli, decreasing in |xi|
    x = 2 * np.pi * np.asarray(xi)
    return d * (1 + (x / d) ** 2) ** -0.25 + (1 - d) * (1 + (x / (1 - d)) ** 2) ** -0.25


def _grid_max(fn, lo: float, hi: float, per_decade: int = GRID_PER_DECADE,
              passes: int = REFINE_PASSES):
    decades = max(math.log10(hi / lo), 1e-3)
    m = max(int(per_decade * decades) + 1, per_decade + 1)
    xs = np.geomspace(lo, hi, m)
    vals = fn(xs)
    k = int(np.argmax(vals))
    best_x, best = xs[k], vals[k]
    for _ in range(passes):
        a, b = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
        xs = np.linspace(a, b, 1025)
        vals = fn(xs)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best_x, best = xs[k], vals[k]
    return float(best), float(best_x)


def alpha_outside(d, c: float = C_DEFAULT) -> float:
    """``1 - sup_{|xi| > c delta} |g(xi)|`` by grid maximization."""
    d = as_delta(d)
    _require_sub_half(d)
    dv = d.value
    lo = c * dv
    floor = float(_abs_g(dv, lo))
    hi = 10 * lo
    while _envelope(dv, hi) >= floor:
        hi *= 10
    best, _ = _grid_max(lambda x: _abs_g(dv, x), lo, hi)
    alpha = 1.0 - best
    if not alpha > 0:
        raise InconsistencyError(f"measured alpha={alpha:g} is not positive")
    return alpha


def alpha_annulus(d, beta: float, c: float = C_DEFAULT) -> float:
    """``1 - sup |g|`` over ``c delta^(1+beta) < |xi| < c delta``."""
    d = as_delta(d)
    _require_sub_half(d)
    if not beta > 0:
        raise DomainError("beta must be positive")
    dv = d.value
    best, _ = _grid_max(lambda x: _abs_g(dv, x), c * dv ** (1 + beta), c * dv)
    alpha = 1.0 - best
    if not alpha > 0:
        raise InconsistencyError(f"measured annulus alpha={alpha:g} is not positive")
    return alpha


def _defect_series(dv: float, s2: float, xi, terms: int = 80):
    """``(g - gamma_1)(xi) / xi^3`` from the moment series, exact down to ``xi -> 0``.

    Converges for ``|xi| < delta/(2 pi)``; moments of ``h`` are
    ``(2k-1)!! (delta a^k + (1-delta) b^k)`` and those of ``gamma_1`` are the
    moments of N(1, s2).
    """
    xi = np.asarray(xi, dtype=float)
    a, b = 1 / (2 * dv), 1 / (2 * (1 - dv))
    z = -2j * np.pi * xi
    # running z^k m_k / k!, split per component
    ta = np.ones_like(z)
    tb = np.ones_like(z)
    # Gaussian moments via Hermite-type recursion mu_k = mu_{k-1} + (k-1) s2 mu_{k-2}
    mu_prev, mu = 1.0, 1.0
    zk = np.ones_like(z)
    fact = 1.0
    acc = np.zeros_like(z)
    for k in range(1, terms + 1):
        ta = ta * z * (2 * k - 1) * a / k
        tb = tb * z * (2 * k - 1) * b / k
        if k >= 2:
            mu_prev, mu = mu, mu + (k - 1) * s2 * mu_prev
        zk = zk * z
        fact *= k
        if k >= 3:
            acc = acc + (dv * ta + (1 - dv) * tb) - mu * zk / fact
    return acc / (xi ** 3)


@dataclass(frozen=True)
class MConstants:
    M: float
    xi_at: float
    limit: float
    delta: float

    @property
    def M0(self) -> float:
        # the whole measured constant sits on the delta^-2 slot
        return self.M * self.delta ** 2

    M1: float = 0.0
    M2: float = 0.0

    @property
    def composite(self) -> float:
        return self.M0 / self.delta ** 2 + self.M1 / self.delta + self.M2


def m_constants(d, c: float = C_DEFAULT) -> MConstants:
    """``sup_{0<|xi|<c delta} |g - gamma_1| / |xi|^3`` and its ``xi -> 0`` limit."""
    d = as_delta(d)
    dv = d.value
    if not c * dv < dv / (2 * math.pi):
        raise DomainError("analytic region must lie inside the moment-series radius")
    s2 = sigma2(d)
    m3 = 15.0 / 8.0 * (1 / dv ** 2 + 1 / (1 - dv) ** 2)
    limit = 4 * math.pi ** 3 / 3 * abs(m3 - 1 - 3 * s2)
    best, at = _grid_max(lambda x: np.abs(_defect_series(dv, s2, x)), 1e-6 * c * dv, c * dv)
    if limit > best:
        best, at = limit, 0.0
    return MConstants(best, at, limit, dv)


def _outer_integral(fn, lo: float, n: int, rtol: float = 1e-10):
    """``2 int_lo^inf fn(xi) dxi`` through ``xi = lo e^s``; fn decays at least like ``xi^-n/2``."""
    decay = max(n / 2 - 1, 0.5)
    smax = 40.0 / decay + 2.0
    edges = np.linspace(0.0, smax, int(math.ceil(smax / 0.25)) + 1)
    val, _ = integrate(lambda s: fn(lo * np.exp(s)) * lo * np.exp(s), edges, rtol=rtol, atol=1e-300)
    return 2.0 * val


def tail_integral(d, n: int, c: float = C_DEFAULT) -> float:
    """``int_{|xi| > c delta} |g|^n``."""
    d = as_delta(d)
    if n < MIN_ORDER:
        raise UnsupportedOrderError(f"tail integral needs n >= {MIN_ORDER}")
    dv = d.value
    return _outer_integral(lambda x: _abs_g(dv, x) ** n, c * dv, n)


def _gamma1(s2: float, xi):
    xi = np.asarray(xi, dtype=float)
    return np.exp(-2j * np.pi * xi - 2 * np.pi ** 2 * xi ** 2 * s2)


def measured_region_integrals(d, N: int, c: float = C_DEFAULT) -> tuple[float, float]:
    """``(inside, outside)`` values of ``int |g^N - gamma_1^N|`` split at ``c delta``."""
    d = as_delta(d)
    dv = d.value
    s2 = sigma2(d)
    dens = Density.kac(d)

    def diff(x):
        return np.abs(np.exp(N * np.log(char_fn(dens, x))) - _gamma1(s2, x) ** N)

    edges = np.linspace(0.0, c * dv, 65)
    inside, _ = integrate(diff, edges, rtol=1e-10, atol=1e-300)
    outside = _outer_integral(diff, c * dv, N)
    return 2.0 * inside, outside


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCertificate:
    region: str
    params: dict
    value: float
    terms: tuple = ()

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise InconsistencyError(f"certificate value {self.value!r} is not a finite nonnegative number")


def bound_outside(N: int, d, c: float, sigma2_: float, alpha: float, tail: float) -> BoundCertificate:
    """Right-hand side of the bound on ``int_{|xi|>c delta} |g^N - gamma_1^N|``."""
    dv = as_delta(d).value
    den = math.pi * c * dv * sigma2_
    t1 = 2.0 * tail
    t2 = (1.0 - alpha) ** (N / 2 - 1) / den
    t3 = math.exp(-(1 + N) * math.pi ** 2 * c ** 2 * dv ** 2 * sigma2_) / den
    params = dict(N=N, delta=dv, c=c, sigma2=sigma2_, alpha=alpha, tail=tail)
    return BoundCertificate("outside", params, t1 + t2 + t3, (t1, t2, t3))


def bound_inside(N: int, d, c: float, beta: float, sigma2_: float, alpha_beta: float,
                 M0: float, M1: float, M2: float) -> BoundCertificate:
    """Four-term right-hand side of the bound on ``int_{|xi|<c delta} |g^N - gamma_1^N|``."""
    dv = as_delta(d).value
    ms = M0 + M1 * dv + M2 * dv ** 2
    t1 = c ** 4 * dv ** 2 * ms / 2
    t2 = c ** 3 * dv * math.sqrt(N) * ms * (1 - alpha_beta) ** (N / 2 - 1) / math.sqrt(math.pi * sigma2_)
    t3 = (c ** 3 * dv ** (1 - beta) * ms
          * math.exp(-math.pi ** 2 * (N - 1) * c ** 2 * dv ** (2 + 2 * beta) * sigma2_)
          / (2 * math.pi * c * dv * sigma2_
             * math.sqrt(-math.expm1(-2 * math.pi ** 2 * N * c ** 2 * dv ** 2 * sigma2_))))
    t4 = 2 * c ** 3 * ms * math.sqrt(N) * dv ** (1 + 3 * beta) / math.sqrt(2 * math.pi * sigma2_)
    params = dict(N=N, delta=dv, c=c, beta=beta, sigma2=sigma2_, alpha_beta=alpha_beta,
                  M0=M0, M1=M1, M2=M2)
    return BoundCertificate("inside", params, t1 + t2 + t3 + t4, (t1, t2, t3, t4))


def total_certificate(outside: BoundCertificate, inside: BoundCertificate) -> BoundCertificate:
    params = {**inside.params, **outside.params}
    return BoundCertificate("total", params, outside.value + inside.value,
                            (outside.value, inside.value))


@dataclass(frozen=True)
class CLTCertificate:
    outside: BoundCertificate
    inside: BoundCertificate
    total: BoundCertificate
    measured_outside: float
    measured_inside: float

    @property
    def holds(self) -> bool:
        return (self.measured_outside <= self.outside.value
                and self.measured_inside <= self.inside.value)


def clt_certificate(d, N: int, beta: float, c: float = C_DEFAULT) -> CLTCertificate:
    """Both region bounds with measured constants, next to the measured left-hand sides."""
    d = as_delta(d)
    s2 = sigma2(d)
    alpha = alpha_outside(d, c)
    tail = tail_integral(d, N - 1, c)
    ab = alpha_annulus(d, beta, c)
    mc = m_constants(d, c)
    out = bound_outside(N, d, c, s2, alpha, tail)
    ins = bound_inside(N, d, c, beta, s2, ab, mc.M0, mc.M1, mc.M2)
    mi, mo = measured_region_integrals(d, N, c)
    return CLTCertificate(out, ins, total_certificate(out, ins), mo, mi)


# ---------------------------------------------------------------------------
# appendix inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianIntegralBounds:
    a: float
    eta: float
    lower: float
    middle: float
    upper: float
    tail_bound: float
    tail_exact: float
    lower_squared: float

    @property
    def printed_lower_applies(self) -> bool:
        # the printed exponent a*eta^2/2 is below a^2 eta^2/2 only when a >= 1
        return self.a >= 1.0

    def checks(self) -> list[tuple[str, float, float]]:
        """Named ``(label, lhs, rhs)`` pairs meant to satisfy ``lhs <= rhs``."""
        rows = [("lower_squared<=middle", self.lower_squared, self.middle),
                ("middle<=upper", self.middle, self.upper),
                ("tail_exact<=tail_bound", self.tail_exact, self.tail_bound)]
        if self.printed_lower_applies:
            rows.insert(0, ("lower<=middle", self.lower, self.middle))
        return rows

    @property
    def holds(self) -> bool:
        return all(l <= r for _, l, r in self.checks())


def gaussian_integral_bounds(a: float, eta: float) -> GaussianIntegralBounds:
    """Window and tail estimates for ``int exp(-a^2 x^2 / 2)``, next to exact values."""
    if not (a > 0 and eta > 0):
        raise DomainError("a and eta must be positive")
    full = math.sqrt(2 * math.pi) / a
    middle = full * math.erf(a * eta / math.sqrt(2))
    tail_exact = full * math.erfc(a * eta / math.sqrt(2))
    return GaussianIntegralBounds(
        a=a, eta=eta,
        lower=full * math.sqrt(-math.expm1(-a * eta ** 2 / 2)),
        middle=middle,
        upper=full * math.sqrt(-math.expm1(-(a ** 2) * eta ** 2)),
        tail_bound=full * math.exp(-(a ** 2) * eta ** 2 / 2),
        tail_exact=tail_exact,
        lower_squared=full * math.sqrt(-math.expm1(-(a ** 2) * eta ** 2 / 2)),
    )


@dataclass(frozen=True)
class SpecialSumBounds:
    sum1: float
    bound1: float
    sum2: float
    bound2: float

    @property
    def holds(self) -> bool:
        return self.sum1 <= self.bound1 and self.sum2 <= self.bound2


def special_sum_bounds(a: float, k0: int, m: int) -> SpecialSumBounds:
    """Partial sums over ``k0 < k <= m`` of ``exp(-a^2 k/2)/sqrt(k)`` and ``1/sqrt(k)``."""
    if not a > 0 or not 0 <= k0 < m:
        raise DomainError("need a > 0 and 0 <= k0 < m")
    k = np.arange(k0 + 1, m + 1, dtype=float)
    sum1 = float(math.fsum(np.exp(-(a ** 2) * k / 2) / np.sqrt(k)))
    sum2 = float(math.fsum(1 / np.sqrt(k)))
    return SpecialSumBounds(sum1, math.sqrt(2 * math.pi) * math.exp(-(a ** 2) * k0 / 2) / a,
                            sum2, 2 * math.sqrt(m))


# ---------------------------------------------------------------------------
# check suites: each row is (label, lhs, rhs) with lhs <= rhs expected
# ---------------------------------------------------------------------------

APPENDIX_A = (0.5, 1.0, 2.0)
APPENDIX_ETA = (0.5, 1.0, 2.0)
APPENDIX_SUMS = ((0, 10), (1, 100), (10, 10000))
ALPHA_SLACK = 0.9
ANNULUS_SLACK = 0.5
TAIL_SLACK = 2.0


def appendix_checks(a_grid=APPENDIX_A, eta_grid=APPENDIX_ETA, sums=APPENDIX_SUMS):
    rows = []
    for a in a_grid:
        for eta in eta_grid:
            for label, lhs, rhs in gaussian_integral_bounds(a, eta).checks():
                rows.append((f"A1[a={a:g},eta={eta:g}]:{label}", lhs, rhs))
        for k0, m in sums:
            s = special_sum_bounds(a, k0, m)
            rows.append((f"A2[a={a:g},k0={k0},m={m}]:exp_sum", s.sum1, s.bound1))
            rows.append((f"A2[a={a:g},k0={k0},m={m}]:root_sum", s.sum2, s.bound2))
    return rows


def special_property_checks(d, beta: float = 0.1, n: int = 49, c: float = C_DEFAULT):
    """Measured ``alpha``, ``alpha_beta`` and tail integral against the leading terms.

    Rows are phrased as ``lhs <= rhs``: the measured gaps must exceed a slack
    fraction of their leading terms, and the tail integral must sit below
    ``slack (1 - alpha)^n / pi + 2/(pi (n - 3))``.
    """
    d = as_delta(d)
    dv = d.value
    alpha = alpha_outside(d, c)
    ab = alpha_annulus(d, beta, c)
    lead = dv * (1 - (4 / 5) ** 0.25)
    lead_b = dv ** (1 + 2 * beta) / 16
    tail = tail_integral(d, n, c)
    tail_rhs = TAIL_SLACK * (1 - alpha) ** n / math.pi + 2 / (math.pi * (n - 3))
    tag = f"delta={dv:g}"
    return [(f"(i)[{tag}]:alpha", ALPHA_SLACK * lead, alpha),
            (f"(iii)[{tag},beta={beta:g}]:alpha_beta", ANNULUS_SLACK * lead_b, ab),
            (f"(v)[{tag},n={n}]:tail", tail, tail_rhs)]
