"""Random distributed meeting-scheduling instances and a brute-force oracle.

Randomness comes from ``numpy.random.Generator`` over ``PCG64`` seeded through
``SeedSequence(seed)``. For one instance the forbidden-pair matrix is drawn
first (n×d uniforms), then the n×d cost matrix.
"""
from dataclasses import dataclass, asdict
from itertools import product
from typing import Iterator, Optional, Tuple

import numpy as np

from .model import Instance

UNIFORM = "uniform"
TAIL = "tail"
DISTRIBUTIONS = (UNIFORM, TAIL)

DEFAULT_COST_RANGE = (0, 9)
DEFAULT_REWARD = 20


@dataclass(frozen=True)
class GenParams:
    n: int = 10
    d: int = 10
    density: float = 0.3
    distribution: str = UNIFORM
    cost_range: Tuple[int, int] = DEFAULT_COST_RANGE
    reward: float = DEFAULT_REWARD
    seed: int = 0

    def validate(self) -> "GenParams":
        if self.n < 1 or self.d < 1:
            raise ValueError(f"n and d must be positive, got n={self.n} d={self.d}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution '{self.distribution}', expected one of {DISTRIBUTIONS}")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density must lie in [0, 1], got {self.density}")
        if self.distribution == TAIL and 1.5 * self.density > 1.0:
            raise ValueError(f"tail-constrained density must be at most 2/3, got {self.density}")
        lo, hi = self.cost_range
        if lo < 0 or hi < lo:
            raise ValueError(f"invalid cost range [{lo}, {hi}]")
        if self.reward < 0:
            raise ValueError(f"reward must be nonnegative, got {self.reward}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        return self

    def with_seed(self, seed: int) -> "GenParams":
        values = asdict(self)
        values["seed"] = int(seed)
        return GenParams(**values)

    def with_density(self, density: float) -> "GenParams":
        values = asdict(self)
        values["density"] = density
        return GenParams(**values)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(base: int, *keys: int) -> int:
    """Independent 64-bit seed for the point identified by ``keys``."""
    sequence = np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def row_densities(params: GenParams) -> np.ndarray:
    if params.distribution == UNIFORM:
        return np.full(params.n, params.density)
    upper = params.n // 2
    p = np.full(params.n, 1.5 * params.density)
    p[:upper] = params.density / 2
    return p


def generate(params: GenParams) -> Instance:
    params.validate()
    rng = make_rng(params.seed)
    forbidden = rng.random((params.n, params.d)) < row_densities(params)[:, None]
    lo, hi = params.cost_range
    costs = rng.integers(lo, hi + 1, size=(params.n, params.d))
    return Instance(
        n=params.n,
        d=params.d,
        availability=(~forbidden).tolist(),
        costs=costs.tolist(),
        rewards=[params.reward] * params.n,
    )


def brute_force_solve(instance: Instance) -> Optional[int]:
    """Smallest value available to every agent, or ``None``."""
    common = np.all(np.asarray(instance.availability, dtype=bool), axis=0)
    hits = np.flatnonzero(common)
    return int(hits[0]) + 1 if hits.size else None


def exhaustive_instances(n: int, d: int, cost: float = 0, reward: float = DEFAULT_REWARD) -> Iterator[Instance]:
    """Every one of the 2^(n·d) availability patterns for ``n`` agents over ``d`` values."""
    for cells in product((True, False), repeat=n * d):
        yield Instance(
            n=n,
            d=d,
            availability=[cells[i * d:(i + 1) * d] for i in range(n)],
            costs=[[cost] * d for _ in range(n)],
            rewards=[reward] * n,
        )
