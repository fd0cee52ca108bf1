"""One-particle density family: two-temperature Maxwellian mixtures.

``f_delta`` puts weight ``delta`` on a hot Maxwellian of variance ``1/(2 delta)``
and the rest on a cold one of variance ``1/(2 (1 - delta))``, so the second
moment is always 1.  ``h_delta`` is the law of ``V**2`` and ``char_fn`` its
characteristic function ``E exp(-2 pi i xi V**2)``.

The standard Gaussian is carried alongside as an exact oracle.  It coincides
with the ``delta = 1/2`` member, which is how the numerical kernels treat it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .quadrature import graded_edges, integrate
from .kernels import logf_mixture

BETA_MAX = 1.0 / 6.0


@dataclass(frozen=True)
class Delta:
    """Mixing weight of the hot component, ``0 < value <= 1/2``.

    ``N`` and ``beta`` are set when the weight comes from :func:`delta_schedule`.
    """

    value: float
    N: int | None = None
    beta: float | None = None

    def __post_init__(self):
        v = float(self.value)
        if not (0.0 < v <= 0.5) or not math.isfinite(v):
            raise DomainError(f"delta must lie in (0, 1/2], got {self.value!r}")
        object.__setattr__(self, "value", v)

    @property
    def provenance(self) -> str:
        if self.N is None:
            return "explicit"
        return f"schedule(N={self.N}, beta={self.beta})"

    def condition_monomials(self) -> tuple[float, float] | None:
        """``(delta^(1+2 beta) N, delta^(1+3 beta) N)`` for a scheduled weight.

        Along the schedule the first should grow and the second shrink with N.
        """
        if self.N is None:
            return None
        d, b, n = self.value, self.beta, self.N
        return d ** (1 + 2 * b) * n, d ** (1 + 3 * b) * n

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class Density:
    """A supported one-particle density: ``kind`` is ``"kac"`` or ``"gaussian"``."""

    kind: str
    delta: Delta = field(default_factory=lambda: Delta(0.5))

    def __post_init__(self):
        if self.kind not in ("kac", "gaussian"):
            raise DomainError(f"unknown density kind {self.kind!r}")
        if self.kind == "gaussian" and self.delta.value != 0.5:
            raise DomainError("the standard Gaussian has no free mixing weight")

    @classmethod
    def kac(cls, delta) -> "Density":
        return cls("kac", as_delta(delta))

    @classmethod
    def gaussian(cls) -> "Density":
        return cls("gaussian", Delta(0.5))

    @property
    def mix(self) -> float:
        """Mixing weight handed to the numerical kernels (1/2 for the Gaussian)."""
        return self.delta.value

    @property
    def is_collapsed(self) -> bool:
        """True when the product density is rotation invariant (Gaussian)."""
        return abs(self.mix - 0.5) <= 1e-12

    @property
    def label(self) -> str:
        return "gaussian" if self.kind == "gaussian" else f"kac(delta={self.mix:.17g})"

    def pdf(self, v):
        return np.exp(self.logpdf(v))

    def logpdf(self, v):
        if self.kind == "gaussian":
            v = np.asarray(v, dtype=float)
            return -0.5 * v * v - 0.5 * math.log(2 * math.pi)
        return logf_mixture(v, self.mix)

    def h(self, u):
        return h_delta(self, u)

    def char_fn(self, xi):
        return char_fn(self, xi)

    @property
    def sigma2(self) -> float:
        return 2.0 if self.kind == "gaussian" else sigma2(self.delta)

    @property
    def fourth_moment(self) -> float:
        return 3.0 if self.kind == "gaussian" else fourth_moment(self.delta)


def as_delta(d) -> Delta:
    if isinstance(d, Delta):
        return d
    if isinstance(d, Density):
        return d.delta
    return Delta(float(d))


def as_density(d) -> Density:
    """Accept a Density, a Delta or a bare float weight."""
    if isinstance(d, Density):
        return d
    return Density.kac(as_delta(d))


def maxwellian(a, v):
    """Centered Gaussian density with variance ``a``."""
    a = float(a)
    if not a > 0:
        raise DomainError(f"Maxwellian variance must be positive, got {a!r}")
    v = np.asarray(v, dtype=float)
    return np.exp(-v * v / (2 * a)) / math.sqrt(2 * math.pi * a)


def f_delta(d, v):
    d = as_delta(d).value
    return d * maxwellian(1 / (2 * d), v) + (1 - d) * maxwellian(1 / (2 * (1 - d)), v)


def h_delta(d, u):
    """Density of ``V**2`` for ``V ~ f_delta``: ``f(sqrt u) / sqrt u`` (two signs of V)."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise DomainError("h_delta is defined for u > 0 only")
    dens = d if isinstance(d, Density) else Density.kac(d)
    r = np.sqrt(u)
    return np.exp(dens.logpdf(r)) / r


def char_fn(density, xi):
    """Characteristic function of ``h``, evaluated with the principal square root.

    ``1 + 2 pi i xi / delta`` has real part 1, so it never meets the branch
    cut of the principal root; the value at ``xi = 0`` is exactly 1.
    """
    density = density if isinstance(density, Density) else Density.kac(density)
    xi = np.asarray(xi, dtype=float)
    if density.kind == "gaussian":
        return 1.0 / np.sqrt(1 + 4j * np.pi * xi)
    d = density.mix
    return d / np.sqrt(1 + 2j * np.pi * xi / d) + (1 - d) / np.sqrt(1 + 2j * np.pi * xi / (1 - d))


def sigma2(d) -> float:
    """Variance of ``h_delta``: ``3/(4 delta (1 - delta)) - 1``."""
    d = as_delta(d).value
    return 3.0 / (4.0 * d * (1.0 - d)) - 1.0


def fourth_moment(d) -> float:
    d = as_delta(d).value
    return 3.0 / (4.0 * d * (1.0 - d))


def delta_schedule(N: int, beta: float) -> Delta:
    """``delta_N = N^-(1 - 2 beta)`` for ``0 < beta < 1/6`` and ``N >= 5``."""
    if int(N) != N or N < 5:
        raise DomainError(f"schedule needs an integer N >= 5, got {N!r}")
    if not (0.0 < beta < BETA_MAX):
        raise DomainError(f"beta must lie in (0, 1/6), got {beta!r}")
    value = float(N) ** (-(1.0 - 2.0 * beta))
    if value > 0.5:
        raise DomainError(f"schedule gives delta={value:.6g} > 1/2 for N={N}")
    return Delta(value, N=int(N), beta=float(beta))


def moment_half_width(d) -> float:
    """Integration half-width holding at least 12 standard deviations of both components."""
    d = as_delta(d).value
    return max(12.0, 12.0 / math.sqrt(2.0 * d))


def invariant_suite(d, rtol: float = 1e-10) -> list[tuple[str, float, float, float]]:
    """Rows ``(name, value, expected, tol)`` for the moment and transform identities of ``f`` and ``h``."""
    dens = d if isinstance(d, Density) else Density.kac(d)
    dv = dens.mix
    L = moment_half_width(dv)
    ve = graded_edges(0.0, L, [math.sqrt(1 / (2 * (1 - dv))), math.sqrt(1 / (2 * dv))])

    def even(fn):
        return 2 * integrate(lambda v: fn(v) * dens.pdf(v), ve, rtol=rtol, atol=1e-300)[0]

    def on_h(fn):
        # u = v^2 moves the u^-1/2 endpoint singularity of h out of the integrand
        return integrate(lambda v: fn(v * v) * h_delta(dens, v * v) * 2 * v, ve,
                         rtol=rtol, atol=1e-300)[0]

    m4 = dens.fourth_moment
    pos = np.geomspace(1e-4, 1e4, 201)
    xi = np.concatenate((-pos[::-1], [0.0], pos))
    g = dens.char_fn(xi)
    rows = [
        ("int f", even(np.ones_like), 1.0, 1e-9),
        ("int v^2 f", even(lambda v: v * v), 1.0, 1e-9),
        ("int v^4 f", even(lambda v: v ** 4), m4, 1e-9 * m4),
        ("int h", on_h(np.ones_like), 1.0, 1e-9),
        ("int u h", on_h(lambda u: u), 1.0, 1e-9),
        ("var h", on_h(lambda u: (u - 1) ** 2), dens.sigma2, 1e-9 * m4),
        ("g(0)", float(abs(dens.char_fn(0.0) - 1)), 0.0, 0.0),
        ("max |g| - 1", float(max(np.max(np.abs(g)) - 1, 0.0)), 0.0, 1e-15),
        ("hermitian", float(np.max(np.abs(g[::-1] - np.conj(g)))), 0.0, 1e-15),
    ]
    return rows
