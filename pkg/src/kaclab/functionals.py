"""Entropy, entropy-production numerator and their ratio for the conditioned product state."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import clt, kernels
from .densities import Density, as_delta, as_density
from .errors import (CertificateUnavailable, DomainError, InconsistencyError, InsufficientDataError,
                     RefinementError, UndefinedRatioError)
from .normalization import log_Z
from .quadrature import panel_nodes, split_edges
from .sphere import (ISResult, importance_expectation, marginal_integral_1d,
                     marginal_kernel, pair_rotation_gap)

LOG2_HALF = math.log(2.0) / 2
REFINE_RTOL = 1e-4
MAX_DOUBLINGS = 2


@dataclass(frozen=True)
class PolarGrid:
    """Trapezoid points in the rotation angle and the polar angle, GL points in radius."""

    theta: int = 256
    phi: int = 256
    r: int = 128

    def __post_init__(self):
        if self.theta < 4 or self.phi < 4:
            raise DomainError("angular grids need at least 4 points")
        if self.r < 16 or self.r % 16:
            raise DomainError("radial points must be a positive multiple of 16")

    def doubled(self) -> "PolarGrid":
        return PolarGrid(2 * self.theta, 2 * self.phi, 2 * self.r)


@dataclass(frozen=True)
class EntropyReport:
    N: int
    delta: float
    H: float
    per_particle: float
    limit_gap: float
    p1_mass: float


@dataclass(frozen=True)
class ProductionReport:
    N: int
    delta: float
    numerator: float
    per_particle: float
    paper_bound: float
    ratio: float
    entropy: float
    eps0: float
    eps1: float
    eps2: float
    lambda0: float

    @property
    def lower_bound(self) -> float:
        return 2.0 / (self.N - 1)


def entropy(N: int, d, plan: clt.FourierPlan | None = None, rtol: float = 1e-10) -> EntropyReport:
    """``H_N = N int P_1 log f - log Z_N(f, sqrt N)``."""
    density = as_density(d)
    if N < 6:
        raise DomainError("entropy needs N >= 6")
    kern = marginal_kernel(density, N, 1, plan)
    cross = marginal_integral_1d(density.logpdf, kern, rtol=rtol)
    mass = marginal_integral_1d(np.ones_like, kern, rtol=rtol)
    H = N * cross - log_Z(density, N, float(N), plan).logZ.log
    if H < -1e-9:
        raise InconsistencyError(f"negative relative entropy {H:.3g}")
    return EntropyReport(N, density.mix, H, H / N, abs(H / N - LOG2_HALF), mass)


def _radial_edges(r_max: float, panels: int = 8):
    # dyadic grading toward the origin, where the cold component lives
    return np.concatenate(([0.0], r_max * 2.0 ** -np.arange(panels - 1, -1, -1.0)))


def _numerator_once(density: Density, N: int, plan, grid: PolarGrid, r_max: float) -> float:
    kern = marginal_kernel(density, N, 2, plan)
    edges = _radial_edges(r_max)
    while len(edges) - 1 < grid.r // 16:
        edges = split_edges(edges)
    r, wr = panel_nodes(edges, 16)
    L = math.lcm(grid.theta, grid.phi)
    ang = 2 * np.pi * np.arange(L) / L
    x = np.multiply.outer(r, np.cos(ang))
    y = np.multiply.outer(r, np.sin(ang))
    G = density.logpdf(x) + density.logpdf(y)
    g = np.exp(G)
    phi_idx = np.arange(grid.phi) * (L // grid.phi)
    theta_idx = np.arange(grid.theta) * (L // grid.theta)
    S = kernels.angular_double_sum(G, g, phi_idx, theta_idx)
    cell = (2 * np.pi / grid.theta) * (2 * np.pi / grid.phi)
    return float(N / (4 * np.pi) * cell * np.dot(wr, r * kern.weight(r * r) * S))


def numerator_r_max(density: Density, N: int) -> float:
    return min(math.sqrt(N * (1 - 1e-8)), math.sqrt(40.0 / (2.0 * density.mix)))


def production_numerator(N: int, d, plan: clt.FourierPlan | None = None,
                         grid: PolarGrid | None = None) -> float:
    """``<log F_N, N (I - Q) F_N>`` by polar quadrature of the symmetrized two-particle form."""
    density = as_density(d)
    if N < 7:
        raise DomainError("production numerator needs N >= 7")
    grid = grid or PolarGrid()
    r_max = numerator_r_max(density, N)
    prev = _numerator_once(density, N, plan, grid, r_max)
    for _ in range(MAX_DOUBLINGS):
        grid = grid.doubled()
        cur = _numerator_once(density, N, plan, grid, r_max)
        if abs(cur - prev) <= REFINE_RTOL * abs(cur) + 1e-12:
            break
        prev = cur
    else:
        raise RefinementError(
            f"numerator still moving by {abs(cur - prev) / abs(cur):.3g} after "
            f"{MAX_DOUBLINGS} doublings (N={N})")
    if cur < -1e-10:
        raise InconsistencyError(f"negative entropy production {cur:.3g}")
    return cur


def mc_numerator(N: int, d, samples: int, seed: int, proposal: str = "augmented",
                 theta_points: int = 128) -> ISResult:
    """Monte Carlo estimate of the numerator from ``N E[G(v) - avg_theta G(R_theta v)]``.

    The bracket is averaged over the ``N/2`` disjoint coordinate pairs of each
    sample, all of which share the two-particle marginal.
    """
    density = as_density(d)
    delta = density.mix

    def obs(v):
        return N * pair_rotation_gap(v, delta, theta_points)

    return importance_expectation(obs, N, density, samples, seed, proposal=proposal)


def paper_numerator_bound(N: int, d, eps2: float, lambda0: float) -> float:
    """Per-particle bound on the numerator in terms of ``-delta log delta``."""
    dv = as_delta(d).value
    denom = 1 + math.sqrt(2 * math.pi) * lambda0
    if not denom > 0:
        raise CertificateUnavailable(f"1 + sqrt(2 pi) lambda0 = {denom:.3g} <= 0")
    ld = math.log(dv)
    shape = 1.5 - math.log(math.pi) / (2 * ld) - 1 / (2 * ld) - dv / (2 * ld)
    pref = 4 * (1 + math.sqrt(2 * math.pi) * eps2) / (math.sqrt(1 - 2 / N) * denom)
    return pref * shape * (-dv * ld)


def gamma_ratio(N: int, d, plan: clt.FourierPlan | None = None,
                grid: PolarGrid | None = None) -> ProductionReport:
    """Numerator over entropy, with the measured local-limit constants and the closed-form numerator bound."""
    density = as_density(d)
    if density.is_collapsed:
        raise UndefinedRatioError("equilibrium state: entropy and production both vanish")
    ent = entropy(N, density, plan)
    if ent.H < 1e-9:
        raise UndefinedRatioError(f"entropy {ent.H:.3g} too small for a ratio")
    num = production_numerator(N, density, plan, grid)
    ratio = num / ent.H
    if ratio < 2 / (N - 1) - 1e-9:
        raise InconsistencyError(f"ratio {ratio:.6g} below the 2/(N-1) floor")
    eps = [clt.measured_eps(density, N, j, plan).value for j in (0, 1, 2)]
    lam0 = clt.lambda_dev(density, N, 0, float(N), plan)
    bound = paper_numerator_bound(N, density, eps[2], lam0)
    return ProductionReport(N, density.mix, num, num / N, bound, ratio, ent.H,
                            eps[0], eps[1], eps[2], lam0)


@dataclass(frozen=True)
class ScalingCheck:
    slope: float
    spread: float
    normalized: tuple
    decreasing: bool


def villani_scaling_check(points, beta: float) -> ScalingCheck:
    """Fit ``log(ratio / log N)`` against ``log N`` and normalize by ``log N / N^(1-2 beta)``.

    ``points`` holds ``(N, ratio)`` pairs or objects with ``N`` and ``ratio``.
    """
    pairs = [(p.N, p.ratio) if hasattr(p, "ratio") else (p[0], p[1]) for p in points]
    if len(pairs) < 5:
        raise InsufficientDataError(f"need at least 5 sweep points, got {len(pairs)}")
    Ns = np.array([p[0] for p in pairs], dtype=float)
    ratios = np.array([p[1] for p in pairs], dtype=float)
    if np.any(np.diff(Ns) <= 0):
        raise InsufficientDataError("sweep points must have increasing N")
    x = np.log(Ns)
    y = np.log(ratios / np.log(Ns))
    slope = float(np.polyfit(x, y, 1)[0])
    norm = ratios * Ns ** (1 - 2 * beta) / np.log(Ns)
    return ScalingCheck(slope, float(norm.max() / norm.min()), tuple(norm.tolist()),
                        bool(np.all(np.diff(ratios) < 0)))
