"""Counter-based random number generation.

Every stochastic routine in this package draws from splitmix64 streams.
A stream is identified by a single 64-bit seed; per-sample streams are
derived from a base seed by the counter contract ``seed_i = base_seed + i``,
which makes batch simulation embarrassingly parallel and byte-reproducible.

The same bit stream is produced by the vectorized numpy implementation
here and by the scalar loop re-implemented inside numba kernels (see
``simulators.lotka``); a regression test pins the two against each other.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV_2_53 = float(2.0 ** -53)


def mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; bijective avalanche on uint64."""
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


class CounterRng:
    """Vector of independent splitmix64 streams advanced in lockstep.

    ``states`` holds one stream state per sample; ``uniform()`` advances
    every stream by one step and returns one double in [0, 1) per stream.
    """

    def __init__(self, seeds):
        self.states = np.atleast_1d(np.asarray(seeds, dtype=np.uint64)).copy()

    @classmethod
    def from_base_seed(cls, base_seed: int, n: int) -> "CounterRng":
        seeds = np.uint64(base_seed) + np.arange(n, dtype=np.uint64)
        return cls(seeds)

    def next_u64(self) -> np.ndarray:
        self.states += GAMMA
        return mix64(self.states)

    def uniform(self) -> np.ndarray:
        """One double per stream, 53-bit resolution, in [0, 1)."""
        return (self.next_u64() >> _S11).astype(np.float64) * _INV_2_53


def scalar_uniform_sequence(seed: int, n: int) -> np.ndarray:
    """The first ``n`` uniforms of a single stream (reference for tests)."""
    rng = CounterRng([seed])
    return np.array([rng.uniform()[0] for _ in range(n)])
