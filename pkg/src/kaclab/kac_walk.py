"""Particle simulation of Kac's master equation.

Each collision picks an unordered pair uniformly, rotates it by a uniform
angle, and advances physical time by an exponential variate of rate ``N``.
Random draws are generated in fixed chunks keyed on ``(seed, chunk index)``,
so a trajectory never depends on the record stride.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .densities import as_delta
from .errors import ConfigError, DomainError
from .sphere import make_rng, uniform_sphere_sample

STEP_CHUNK = 1 << 16
ENERGY_BUDGET = 1e-9  # relative to N

OBSERVABLES = {
    "energy": lambda v: float(np.dot(v, v)),
    "moment4": lambda v: float(np.sum(v ** 4) / v.size),
    "max_abs": lambda v: float(np.max(np.abs(v))),
    "v1_sq": lambda v: float(v[0] ** 2),
    "v1_quad": lambda v: float(v[0] ** 4),
    "const": lambda v: 1.0,
}
DEFAULT_OBSERVABLES = ("energy", "moment4", "max_abs", "v1_sq", "v1_quad")


@dataclass
class ParticleState:
    velocities: np.ndarray
    collisions: int = 0
    time: float = 0.0
    reprojections: int = 0

    @property
    def N(self) -> int:
        return self.velocities.size

    @property
    def energy(self) -> float:
        return float(np.dot(self.velocities, self.velocities))


def rotate_pair(state: ParticleState, i: int, j: int, theta: float) -> ParticleState:
    """``(v_i, v_j) -> (v_i cos t + v_j sin t, -v_i sin t + v_j cos t)`` in place."""
    N = state.N
    if i == j:
        raise DomainError("a collision needs two distinct particles")
    if not (0 <= i < N and 0 <= j < N):
        raise DomainError(f"particle index out of range for N={N}")
    v = state.velocities
    c, s = math.cos(theta), math.sin(theta)
    x, y = v[i], v[j]
    v[i] = c * x + s * y
    v[j] = -s * x + c * y
    return state


def _draw_pairs(rng: np.random.Generator, N: int, size: int):
    i = rng.integers(0, N, size)
    j = rng.integers(0, N - 1, size)
    j += j >= i
    return i, j


def step(state: ParticleState, rng: np.random.Generator) -> ParticleState:
    """One collision with a uniformly chosen unordered pair."""
    N = state.N
    if N < 2:
        raise DomainError("need at least two particles")
    i, j = _draw_pairs(rng, N, 1)
    theta = rng.uniform(0.0, 2 * np.pi)
    rotate_pair(state, int(i[0]), int(j[0]), theta)
    state.time += rng.exponential(1.0 / N)
    state.collisions += 1
    return state


@dataclass(frozen=True)
class WalkConfig:
    N: int
    steps: int
    seed: int = 0
    init: str = "uniform"
    delta: float | None = None
    observables: tuple = DEFAULT_OBSERVABLES
    stride: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError("N must be at least 2")
        if self.steps < 0:
            raise ConfigError("steps must be nonnegative")
        if self.stride < 1:
            raise ConfigError("stride must be at least 1")
        if self.init not in ("uniform", "product"):
            raise ConfigError(f"unknown initial state {self.init!r}")
        if self.init == "product" and self.delta is None:
            raise ConfigError("product initial state needs delta")
        unknown = [o for o in self.observables if o not in OBSERVABLES]
        if unknown:
            raise ConfigError(f"unknown observables {unknown}")
        object.__setattr__(self, "observables", tuple(self.observables))


@dataclass
class ObservableTrace:
    columns: tuple
    rows: list = field(default_factory=list)
    reprojections: int = 0

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float)

    def column(self, name: str) -> np.ndarray:
        return self.as_array()[:, self.columns.index(name)]


def initial_state(config: WalkConfig) -> ParticleState:
    N = config.N
    if config.init == "uniform":
        v = uniform_sphere_sample(N, math.sqrt(N), config.seed, chain=0).velocities
    else:
        # i.i.d. draw from the mixture, rescaled onto the energy sphere
        d = as_delta(config.delta).value
        rng = make_rng(config.seed, 0)
        hot = rng.random(N) < d
        scale = np.where(hot, math.sqrt(1 / (2 * d)), math.sqrt(1 / (2 * (1 - d))))
        v = scale * rng.standard_normal(N)
        v *= math.sqrt(N / np.dot(v, v))
    return ParticleState(np.ascontiguousarray(v, dtype=float))


class _Draws:
    """Collision randomness served in chunks keyed on the chunk index."""

    def __init__(self, seed: int, N: int):
        self.seed, self.N = seed, N
        self.chunk = 0
        self.pos = STEP_CHUNK
        self.buf = None

    def take(self, m: int):
        parts = []
        while m > 0:
            if self.pos == STEP_CHUNK:
                rng = make_rng(self.seed, 1 + self.chunk)
                i, j = _draw_pairs(rng, self.N, STEP_CHUNK)
                theta = rng.uniform(0.0, 2 * np.pi, STEP_CHUNK)
                dt = rng.exponential(1.0 / self.N, STEP_CHUNK)
                self.buf = (i, j, theta, dt)
                self.chunk += 1
                self.pos = 0
            k = min(m, STEP_CHUNK - self.pos)
            parts.append(tuple(a[self.pos:self.pos + k] for a in self.buf))
            self.pos += k
            m -= k
        return tuple(np.concatenate(p) for p in zip(*parts))


def run(config: WalkConfig, force=None) -> ObservableTrace:
    """Simulate ``config.steps`` collisions, recording every ``stride`` steps."""
    state = initial_state(config)
    N = config.N
    cols = ("time", "step") + config.observables
    trace = ObservableTrace(cols)
    fns = [OBSERVABLES[o] for o in config.observables]

    def record():
        v = state.velocities
        trace.rows.append((state.time, state.collisions) + tuple(f(v) for f in fns))

    record()
    draws = _Draws(config.seed, N)
    done = 0
    while done < config.steps:
        m = min(config.stride, config.steps - done)
        ii, jj, theta, dt = draws.take(m)
        energy, _ = kernels.kac_rotations(state.velocities, ii, jj, theta, m, force=force)
        state.collisions += m
        # cumulative sum keeps the clock independent of the stride
        state.time = float(np.cumsum(np.concatenate(([state.time], dt)))[-1])
        done += m
        if abs(energy[-1] - N) > 0.5 * ENERGY_BUDGET * N:
            state.velocities *= math.sqrt(N / energy[-1])
            state.reprojections += 1
        if done % config.stride == 0 or done == config.steps:
            record()
    trace.reprojections = state.reprojections
    return trace


def batch_mean(series, batches: int = 20) -> tuple[float, float]:
    """Mean and batch-means standard error of a correlated series."""
    x = np.asarray(series, dtype=float)
    if x.size < batches:
        raise DomainError(f"need at least {batches} values")
    usable = x.size - x.size % batches
    b = x[:usable].reshape(batches, -1).mean(axis=1)
    return float(x.mean()), float(b.std(ddof=1) / math.sqrt(batches))
