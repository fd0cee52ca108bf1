"""Marginals of the conditioned product state on the energy sphere.

With ``F_N = prod f(v_i) / Z_N(f, sqrt N)`` on ``S^{N-1}(sqrt N)``, the
``j``-particle marginal is ``P_j(v) = K_j(|v|^2) prod_{i<=j} f(v_i)`` where the
sphere-area and radius factors cancel down to

    K_j(s) = h^{*(N-j)}(N - s) / h^{*N}(N).

The literal product of areas, radial power and Z-ratio is kept in
:func:`marginal_log_weight_literal` as an independent route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import clt, kernels
from .densities import Density, as_density
from .errors import DomainError, UnreliableEstimateError
from .normalization import LogValue, conv_table, log_conv_at_peak, log_sphere_area, log_Z
from .quadrature import gauss_legendre, graded_edges, integrate

RNG_NAME = "Philox-4x64 (numpy.random.Philox), seed xor chain index"
CHUNK = 1 << 14
MIN_ESS = 100.0
MIN_SAMPLES = 10_000
MAX_IS_N = 64


def make_rng(seed: int, chain: int = 0) -> np.random.Generator:
    """Counter-based generator for ``seed ^ chain`` (both taken mod 2**64)."""
    key = (int(seed) ^ int(chain)) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key))


# ---------------------------------------------------------------------------
# radial kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginalKernel:
    density: Density
    N: int
    j: int
    plan: clt.FourierPlan | None = None

    def __post_init__(self):
        if self.j not in (1, 2):
            raise DomainError("marginal kernels exist for j in {1, 2}")
        if self.N < self.j + clt.MIN_ORDER:
            raise DomainError(f"need N >= j + {clt.MIN_ORDER}")

    @property
    def s_max(self) -> float:
        # quadrature nodes stay at N - s >= 1e-8 N
        return self.N * (1 - 1e-8)

    def log_weight(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s >= self.N) or np.any(s < 0):
            raise DomainError("kernel argument must satisfy 0 <= s < N")
        table = conv_table(self.density, self.N, self.j, self.plan)
        return table(self.N - s) - log_conv_at_peak(self.density, self.N, self.plan)

    def weight(self, s):
        return np.exp(self.log_weight(s))


def marginal_kernel(density, N: int, j: int, plan=None) -> MarginalKernel:
    return MarginalKernel(as_density(density), int(N), int(j), plan)


def marginal_log_weight(N: int, j: int, s: float, density, plan=None) -> LogValue:
    """``K_j(s)`` as a LogValue."""
    return LogValue(float(marginal_kernel(density, N, j, plan).log_weight(s)))


def marginal_log_weight_literal(N: int, j: int, s: float, density, plan=None) -> LogValue:
    """Same kernel from sphere areas, the radial power and the Z-ratio, term by term."""
    if not 0 <= s < N:
        raise DomainError("kernel argument must satisfy 0 <= s < N")
    n = N - j
    area = log_sphere_area(n) / (log_sphere_area(N) * LogValue((N - 2) / 2 * math.log(N)))
    radial = LogValue((n - 2) / 2 * math.log(N - s))
    ratio = log_Z(density, n, N - s, plan).logZ / log_Z(density, N, N, plan).logZ
    return area * radial * ratio


def p1(v, kernel: MarginalKernel):
    v = np.asarray(v, dtype=float)
    return np.exp(kernel.density.logpdf(v) + kernel.log_weight(v * v))


def p2(v1, v2, kernel: MarginalKernel):
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    lp = kernel.density.logpdf(v1) + kernel.density.logpdf(v2)
    return np.exp(lp + kernel.log_weight(v1 * v1 + v2 * v2))


def radial_edges(density: Density, N: int, r_max: float | None = None, per_gap: int = 4):
    """Breakpoints on ``[0, r_max]`` graded around the cold, hot and sphere scales."""
    d = density.mix
    r_top = math.sqrt(N * (1 - 1e-8))
    hi = r_top if r_max is None else min(r_max, r_top)
    scales = [math.sqrt(1 / (2 * (1 - d))), math.sqrt(1 / (2 * d)), math.sqrt(N) / 4]
    return graded_edges(0.0, hi, scales, per_gap)


def marginal_integral_1d(fn, kernel: MarginalKernel, rtol: float = 1e-10):
    """``int phi(v) P_1(v) dv`` for an even observable ``phi``."""
    edges = radial_edges(kernel.density, kernel.N)
    val, _ = integrate(lambda v: fn(v) * p1(v, kernel), edges, rtol=rtol, atol=1e-300)
    return 2.0 * val


def p1_normalization(density, N: int, plan=None) -> float:
    kern = marginal_kernel(density, N, 1, plan)
    return marginal_integral_1d(lambda v: np.ones_like(v), kern)


def _angular_product(density: Density, r, m: int):
    phi = 2 * np.pi * np.arange(m) / m
    x = np.multiply.outer(r, np.cos(phi))
    y = np.multiply.outer(r, np.sin(phi))
    return np.exp(density.logpdf(x) + density.logpdf(y)).mean(axis=-1) * 2 * np.pi


def p2_normalization(density, N: int, plan=None, phi_points: int = 256,
                     rtol: float = 1e-10) -> float:
    """``int int P_2`` in polar coordinates: trapezoid in angle, panels in radius."""
    density = as_density(density)
    kern = marginal_kernel(density, N, 2, plan)
    edges = radial_edges(density, N)
    prev = None
    m = phi_points
    for _ in range(4):
        val, _ = integrate(lambda r: r * kern.weight(r * r) * _angular_product(density, r, m),
                           edges, rtol=rtol, atol=1e-300)
        if prev is not None and abs(val - prev) <= 1e-9 * abs(val):
            return val
        prev = val
        m *= 2
    return val


def marginalization_gap(density, N: int, v1, plan=None) -> np.ndarray:
    """``int P_2(v1, v2) dv2 - P_1(v1)`` at each ``v1``."""
    density = as_density(density)
    k1 = marginal_kernel(density, N, 1, plan)
    k2 = marginal_kernel(density, N, 2, plan)
    out = []
    for a in np.atleast_1d(v1):
        top = math.sqrt(max(N * (1 - 1e-8) - a * a, 0.0))
        edges = radial_edges(density, N, r_max=top)
        edges = edges[edges <= top]
        if edges[-1] < top:
            edges = np.append(edges, top)
        val, _ = integrate(lambda v: p2(a, v, k2), edges, rtol=1e-10, atol=1e-300)
        out.append(2.0 * val - float(p1(a, k1)))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# low-dimensional sphere integration identities
# ---------------------------------------------------------------------------

def sphere_average_projected(fn3, r: float, order: int = 48):
    """Uniform average over ``S^2(r)`` via the graph parametrization over the disc.

    Both hemispheres ``v3 = +-sqrt(r^2 - v1^2 - v2^2)`` are summed with the
    ``1/v3`` area element; ``v2 = sqrt(r^2 - v1^2) sin t`` removes the edge
    singularity, leaving a smooth tensor-product integral.
    """
    x, w = gauss_legendre(order)
    v1 = r * x
    w1 = r * w
    t = 0.5 * np.pi * x
    wt = 0.5 * np.pi * w
    c = np.sqrt(r * r - v1 * v1)
    V1, T = np.meshgrid(v1, t, indexing="ij")
    C = c[:, None]
    V2 = C * np.sin(T)
    V3 = C * np.cos(T)
    vals = fn3(V1, V2, V3) + fn3(V1, V2, -V3)
    total = np.einsum("i,j,ij->", w1, wt, vals)
    return total / (4 * math.pi * r)


def sphere_average_reduced(fn2, N: int, r: float, order: int = 48, phi_points: int = 256):
    """Uniform average over ``S^{N-1}(r)`` of a function of ``(v1, v2)`` only.

    Integrates ``|S^{N-3}| / (|S^{N-1}| r^{N-2}) fn2 (r^2 - rho^2)^{(N-4)/2}`` over
    the disc, with ``rho = r sin(psi)`` to absorb the boundary factor.
    """
    if N < 3:
        raise DomainError("need N >= 3")
    x, w = gauss_legendre(order)
    psi = 0.25 * np.pi * (x + 1)
    wp = 0.25 * np.pi * w
    rho = r * np.sin(psi)
    phi = 2 * np.pi * np.arange(phi_points) / phi_points
    R, P = np.meshgrid(rho, phi, indexing="ij")
    ang = fn2(R * np.cos(P), R * np.sin(P)).mean(axis=1) * 2 * np.pi
    # d(rho) rho (r^2 - rho^2)^{(N-4)/2} = r cos(psi) r sin(psi) (r cos psi)^{N-4} d(psi)
    radial = r * np.sin(psi) * (r * np.cos(psi)) ** (N - 3)
    total = float(np.dot(wp, radial * ang))
    pref = math.exp(log_sphere_area(N - 2).log - log_sphere_area(N).log - (N - 2) * math.log(r))
    return pref * total


def uniform_sphere_moment(N: int, r: float, p: int, q: int) -> float:
    """``E[v1^(2p) v2^(2q)]`` under the uniform law on ``S^{N-1}(r)``."""
    logm = (2 * (p + q) * math.log(r) + gammaln(p + 0.5) + gammaln(q + 0.5) - 2 * gammaln(0.5)
            + gammaln(N / 2) - gammaln(N / 2 + p + q))
    return math.exp(logm)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalSample:
    velocities: np.ndarray
    radius: float

    @property
    def N(self) -> int:
        return self.velocities.shape[-1]


def _project(x: np.ndarray, radius: float) -> np.ndarray:
    return x * (radius / np.linalg.norm(x, axis=-1, keepdims=True))


def _uniform_block(rng: np.random.Generator, N: int, size: int, radius: float) -> np.ndarray:
    x = rng.standard_normal((size, N))
    bad = ~(np.linalg.norm(x, axis=1) > 0)
    while np.any(bad):
        x[bad] = rng.standard_normal((int(bad.sum()), N))
        bad = ~(np.linalg.norm(x, axis=1) > 0)
    return _project(x, radius)


def uniform_sphere_sample(N: int, radius: float, seed: int, size: int | None = None,
                          chain: int = 0) -> SphericalSample:
    """Uniform point(s) on ``S^{N-1}(radius)`` from normalized Gaussian vectors."""
    if N < 2:
        raise DomainError("need N >= 2")
    rng = make_rng(seed, chain)
    block = _uniform_block(rng, N, 1 if size is None else size, radius)
    return SphericalSample(block[0] if size is None else block, float(radius))


def _augmented_block(rng: np.random.Generator, N: int, size: int, d: float):
    """Angular-Gaussian draws with a random hot set, and their log importance weights.

    Hot coordinates (probability ``d``) get variance ``1/(2d)``, cold ones
    ``1/(2(1-d))``.  Treating the hot set as an auxiliary variable, the weight of
    ``(v, S)`` against the extended target is ``q^{N/2} e^{-N q / 2}`` up to a
    constant, with ``q = sum v_i^2 / (N D_i)``.
    """
    hot = rng.random((size, N)) < d
    var = np.where(hot, 1 / (2 * d), 1 / (2 * (1 - d)))
    x = rng.standard_normal((size, N)) * np.sqrt(var)
    v = _project(x, math.sqrt(N))
    q = (v * v / var).sum(axis=1) / N
    return v, 0.5 * N * (np.log(q) - q)


@dataclass(frozen=True)
class ISResult:
    estimate: float
    stderr: float
    ess: float
    samples: int
    proposal: str


def _log_weights_uniform(v: np.ndarray, density: Density) -> np.ndarray:
    return density.logpdf(v).sum(axis=1)


def importance_expectation(observable, N: int, d, samples: int, seed: int,
                           proposal: str = "uniform", blocks: int = 100) -> ISResult:
    """Self-normalized importance-sampling estimate of ``E_{F_N}[observable]``.

    ``observable`` maps an ``(m, N)`` array of sphere points to ``m`` values.
    ``proposal="uniform"`` draws from the uniform sphere and weights by
    ``prod f(v_i)``; ``"augmented"`` uses the hot-set angular Gaussian.
    The standard error is a delete-one-block jackknife over ``blocks`` blocks.
    """
    density = as_density(d)
    if N > MAX_IS_N:
        raise DomainError(f"importance sampling is restricted to N <= {MAX_IS_N}")
    if samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples")
    if proposal not in ("uniform", "augmented"):
        raise DomainError(f"unknown proposal {proposal!r}")
    lw_parts, val_parts = [], []
    for chain, start in enumerate(range(0, samples, CHUNK)):
        m = min(CHUNK, samples - start)
        rng = make_rng(seed, chain)
        if proposal == "uniform":
            v = _uniform_block(rng, N, m, math.sqrt(N))
            lw = _log_weights_uniform(v, density)
        else:
            v, lw = _augmented_block(rng, N, m, density.mix)
        lw_parts.append(lw)
        val_parts.append(np.asarray(observable(v), dtype=float))
    lw = np.concatenate(lw_parts)
    vals = np.concatenate(val_parts)
    w = np.exp(lw - lw.max())
    ess = float(w.sum() ** 2 / np.dot(w, w))
    if ess < MIN_ESS:
        raise UnreliableEstimateError(
            f"effective sample size {ess:.1f} < {MIN_ESS:g} ({proposal} proposal, N={N})")
    est = float(np.dot(w, vals) / w.sum())
    bw = np.add.reduceat(w, np.linspace(0, w.size, blocks, endpoint=False).astype(int))
    bwv = np.add.reduceat(w * vals, np.linspace(0, w.size, blocks, endpoint=False).astype(int))
    loo = (bwv.sum() - bwv) / (bw.sum() - bw)
    se = math.sqrt((blocks - 1) / blocks * float(np.sum((loo - loo.mean()) ** 2)))
    return ISResult(est, se, ess, samples, proposal)


def pair_rotation_gap(v: np.ndarray, delta: float, theta_points: int = 128) -> np.ndarray:
    """Per-sample mean over disjoint pairs of ``G(pair) - avg_theta G(R_theta pair)``.

    ``G`` is the log product density of the pair; the angle average is a
    ``theta_points`` trapezoid rule.
    """
    m, N = v.shape
    npairs = N // 2
    a = v[:, 0:2 * npairs:2].ravel()
    b = v[:, 1:2 * npairs:2].ravel()
    thetas = 2 * np.pi * np.arange(theta_points) / theta_points
    rot = kernels.rotated_logf_mean(a, b, delta, thetas)
    here = kernels.logf_mixture(a, delta) + kernels.logf_mixture(b, delta)
    return (here - rot).reshape(m, npairs).mean(axis=1)
