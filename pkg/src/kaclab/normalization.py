"""Normalization function ``Z_N(f, sqrt(u))`` and sphere areas, in log domain.

``Z_N(f, sqrt u) = 2 h^{*N}(u) / (|S^{N-1}| u^{N/2-1})`` turns the sphere
integral of a product density into a one-dimensional convolution power.
Sphere areas overflow a double past a few hundred dimensions, so everything
here is carried as :class:`LogValue`.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import clt
from .densities import Density, as_density
from .errors import DomainError, IndeterminateSignError, InconsistencyError

LOG_2PI = math.log(2 * math.pi)
TABLE_NODES = 512
TABLE_BUDGET = 1e-7
TABLE_CHECKS = 32
U_FLOOR = 1e-8  # relative to N: smallest squared radius a kernel table covers


@dataclass(frozen=True)
class LogValue:
    """``sign * exp(log)``; ``sign`` is -1, 0 or +1."""

    log: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if self.sign == 0:
            object.__setattr__(self, "log", -math.inf)

    @classmethod
    def of(cls, x: float) -> "LogValue":
        if x == 0:
            return cls(-math.inf, 0)
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(-math.inf, 0)

    def __float__(self):
        return self.sign * math.exp(self.log) if self.sign else 0.0

    def __mul__(self, other):
        other = _lift(other)
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.log + other.log, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.log - other.log, self.sign * other.sign)

    def __pow__(self, p: float):
        if self.sign == 0:
            return LogValue.zero() if p > 0 else LogValue(math.inf)
        if self.sign < 0 and p != int(p):
            raise DomainError("fractional power of a negative LogValue")
        sign = -1 if (self.sign < 0 and int(p) % 2) else 1
        return LogValue(self.log * p, sign)

    def __neg__(self):
        return LogValue(self.log, -self.sign)

    def __add__(self, other):
        other = _lift(other)
        if other.sign == 0:
            return self
        if self.sign == 0:
            return other
        hi, lo = (self, other) if self.log >= other.log else (other, self)
        r = math.exp(lo.log - hi.log)
        if hi.sign == lo.sign:
            return LogValue(hi.log + math.log1p(r), hi.sign)
        if r == 1.0:
            return LogValue.zero()
        return LogValue(hi.log + math.log1p(-r), hi.sign)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_lift(other))


def _lift(x) -> LogValue:
    return x if isinstance(x, LogValue) else LogValue.of(float(x))


def log_sum(values) -> LogValue:
    """Stable sum of LogValues (largest term first)."""
    acc = LogValue.zero()
    for v in sorted(values, key=lambda z: -z.log):
        acc = acc + v
    return acc


def log_sphere_area(n: int) -> LogValue:
    """``|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)``, surface area of the unit sphere in R^n."""
    if int(n) != n or n <= 0:
        raise DomainError(f"sphere dimension must be a positive integer, got {n!r}")
    return LogValue(math.log(2.0) + 0.5 * n * math.log(math.pi) - float(gammaln(n / 2)))


@dataclass(frozen=True)
class ZEvaluation:
    N: int
    u: float
    logZ: LogValue
    method: str
    rel_error: float = 0.0


def log_Z(density, N: int, u: float, plan: clt.FourierPlan | None = None) -> ZEvaluation:
    """``Z_N(f, sqrt u)`` by inversion of the convolution power."""
    density = as_density(density)
    if not u > 0:
        raise DomainError("squared radius must be positive")
    ev = clt.evaluate_conv_power(density, N, float(u), plan)
    rel = float(ev.rel_error[0])
    if not rel < 1.0:
        raise IndeterminateSignError(f"h^*{N}({u:g}) is below its error estimate")
    logz = (math.log(2.0) + float(ev.log_values[0]) - log_sphere_area(N).log
            - (N / 2 - 1) * math.log(u))
    return ZEvaluation(N, float(u), LogValue(logz), "inversion", rel)


def log_Z_gaussian(density, N: int, j: int, u: float) -> ZEvaluation:
    """Local-limit approximation of ``Z_{N-j}(f, sqrt u)`` (deviation term set to zero)."""
    density = as_density(density)
    n = N - j
    if n < clt.MIN_ORDER:
        raise DomainError(f"N - j = {n} < {clt.MIN_ORDER}")
    s2 = density.sigma2
    logz = (math.log(2.0) - 0.5 * math.log(n) - 0.5 * math.log(s2) - 0.5 * LOG_2PI
            - (u - n) ** 2 / (2 * n * s2) - log_sphere_area(n).log - (n / 2 - 1) * math.log(u))
    return ZEvaluation(n, float(u), LogValue(logz), "gaussian_llt")


def method_difference(density, N: int, j: int, u: float, plan=None) -> float:
    """``log Z_inversion - log Z_gaussian``; equals ``log(1 + sqrt(2 pi) lambda_j e^{(u-n)^2/(2 n Sigma^2)})``."""
    a = log_Z(density, N - j, u, plan).logZ.log
    b = log_Z_gaussian(density, N, j, u).logZ.log
    return a - b


def log_Z_ratio(density, N: int, j: int, u: float, plan: clt.FourierPlan | None = None) -> LogValue:
    """``Z_{N-j}(sqrt u) / Z_N(sqrt N)``."""
    if not 0 < u <= N:
        raise DomainError("ratio needs 0 < u <= N")
    if N - j < clt.MIN_ORDER:
        raise DomainError(f"N - j = {N - j} < {clt.MIN_ORDER}")
    return log_Z(density, N - j, u, plan).logZ / log_Z(density, N, N, plan).logZ


# ---------------------------------------------------------------------------
# cached interpolation tables of log h^{*n}
# ---------------------------------------------------------------------------

class LogConvTable:
    """Chebyshev interpolant of ``log h^{*(N-j)}(u)`` on ``[lo, N]``.

    The smooth part ``log h^{*n}(u) - (n/2 - 1) log u`` is sampled at 512
    Chebyshev points and evaluated by Clenshaw recursion.  Construction checks
    the interpolant against direct inversion at random off-grid points.
    Points below ``lo`` fall back to direct evaluation.
    """

    def __init__(self, density: Density, N: int, j: int, plan: clt.FourierPlan | None = None,
                 nodes: int = TABLE_NODES, budget: float = TABLE_BUDGET, seed: int = 0):
        self.density = density
        self.N, self.j, self.n = N, j, N - j
        self.plan = plan
        n = self.n
        self.lo = max(U_FLOOR * N, n - 10.0 * math.sqrt(n * density.sigma2))
        self.hi = float(N)
        self.power = n / 2 - 1
        self.cheb = np.polynomial.Chebyshev.interpolate(
            lambda u: clt.log_conv_power(density, n, u, plan) - self.power * np.log(u),
            nodes - 1, domain=[self.lo, self.hi])
        rng = np.random.default_rng(seed)
        probe = rng.uniform(self.lo, self.hi, TABLE_CHECKS)
        direct = clt.log_conv_power(density, n, probe, plan)
        self.check_error = float(np.max(np.abs(self(probe) - direct)))
        if self.check_error > budget:
            raise InconsistencyError(
                f"interpolation error {self.check_error:.3g} exceeds budget {budget:g} "
                f"for n={n} on [{self.lo:.4g}, {self.hi:.4g}]")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        flat = np.atleast_1d(u).ravel()
        out = np.empty(flat.shape)
        inside = flat >= self.lo
        out[inside] = self.cheb(flat[inside]) + self.power * np.log(flat[inside])
        if np.any(~inside):
            out[~inside] = clt.log_conv_power(self.density, self.n, flat[~inside], self.plan)
        return out.reshape(u.shape) if u.ndim else float(out[0])


@functools.lru_cache(maxsize=64)
def conv_table(density: Density, N: int, j: int, plan: clt.FourierPlan | None = None) -> LogConvTable:
    """Shared table per ``(density, N, j, plan)``; contents are deterministic."""
    return LogConvTable(density, N, j, plan)


@functools.lru_cache(maxsize=256)
def log_conv_at_peak(density: Density, N: int, plan: clt.FourierPlan | None = None) -> float:
    """``log h^{*N}(N)``, the denominator of every marginal kernel."""
    return clt.log_conv_power(density, N, float(N), plan)
