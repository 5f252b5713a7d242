"""Generalized Galton board with per-trace augmentation.

A ball falls through ``n_rows`` rows of nails. At each nail it bounces
left or right; the probability of bouncing left depends on the nail
position and a steering parameter ``theta``, so the distribution over
final bins is not binomial in general. Because every random decision has
a tractable per-step probability, each simulated trace can be augmented
with two extra quantities accumulated alongside the walk:

* the joint log-ratio ``log p(x, z | theta0) - log p(x, z | theta1)``,
* the joint score ``d/dtheta log p(x, z | theta)`` at a chosen theta,

both evaluated along the realized trace z. The board is small enough
that the marginal ``p(x | theta)`` is also computable exactly by
propagating probabilities row by row, which this module exposes as a
ground-truth oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DegenerateStep, NonpositiveDensity
from ..rng import CounterRng

# Clamp guard for per-step probabilities; hitting it raises DegenerateStep.
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class GaltonConfig:
    """Board geometry. ``theta_curvature`` multiplies theta inside the sigmoid."""

    n_rows: int = 20
    theta_curvature: float = 5.0

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError(f"n_rows must be >= 1, got {self.n_rows}")

    @property
    def n_bins(self) -> int:
        return self.n_rows + 1


@dataclass
class GaltonTrace:
    """One simulated ball: final bin plus per-trace accumulators."""

    bin: int
    log_joint_ratio: float
    joint_score: float
    moves: np.ndarray = field(repr=False)  # bool per row, True = right bounce


def _sigmoid(u):
    return 0.5 * (np.tanh(0.5 * np.asarray(u, dtype=float)) + 1.0)


def nail_prob_left(z_h, z_v, theta, curvature: float = 5.0):
    """Probability of bouncing left at nail position (z_h, z_v) in [0,1]^2."""
    f = np.sin(np.pi * np.asarray(z_v, dtype=float))
    s = _sigmoid(curvature * np.asarray(theta, dtype=float) * (np.asarray(z_h, dtype=float) - 0.5))
    return (1.0 - f) / 2.0 + f * s


def nail_prob_left_dtheta(z_h, z_v, theta, curvature: float = 5.0):
    """Analytic d/dtheta of ``nail_prob_left``."""
    z_h = np.asarray(z_h, dtype=float)
    f = np.sin(np.pi * np.asarray(z_v, dtype=float))
    u = curvature * np.asarray(theta, dtype=float) * (z_h - 0.5)
    s = _sigmoid(u)
    return f * s * (1.0 - s) * curvature * (z_h - 0.5)


class GaltonBoard:
    """Simulator plus exact dynamic-programming oracle for one board geometry.

    Geometry convention: while falling through row ``v`` (0-based) after
    ``k`` right bounces so far, the ball hits the nail at
    ``z_h = (k - v/2) / n_rows + 1/2`` and ``z_v = v / (n_rows - 1)``,
    which keeps both coordinates inside [0, 1] with the board center at 1/2.
    """

    def __init__(self, config: GaltonConfig | None = None):
        self.config = config or GaltonConfig()

    # -- geometry ------------------------------------------------------

    def _nail_position(self, k, v):
        n = self.config.n_rows
        z_h = (np.asarray(k, dtype=float) - v / 2.0) / n + 0.5
        z_v = v / (n - 1.0) if n > 1 else 0.0
        return z_h, z_v

    def _prob_left(self, k, v, theta):
        z_h, z_v = self._nail_position(k, v)
        return nail_prob_left(z_h, z_v, theta, self.config.theta_curvature)

    def _dprob_left(self, k, v, theta):
        z_h, z_v = self._nail_position(k, v)
        return nail_prob_left_dtheta(z_h, z_v, theta, self.config.theta_curvature)

    # -- simulation ----------------------------------------------------

    def simulate(self, theta_gen: float, theta0: float, theta1: float,
                 rng_seed: int, theta_score: float | None = None) -> GaltonTrace:
        """Run one ball; accumulate ratio at (theta0, theta1) and score.

        The trace is generated under ``theta_gen``; both accumulators are
        evaluated along that same fixed trace. The score defaults to
        ``theta0`` but can be taken at any ``theta_score`` (dataset
        generation evaluates it at the generating parameter).
        """
        bins, logr, score, moves = self.simulate_batch(
            np.array([theta_gen]), np.array([theta0]), np.array([theta1]),
            base_seed=rng_seed,
            theta_score=None if theta_score is None else np.array([theta_score]),
            return_moves=True,
        )
        return GaltonTrace(int(bins[0]), float(logr[0]), float(score[0]), moves[0])

    def simulate_batch(self, theta_gen, theta0, theta1, base_seed: int,
                       theta_score=None, return_moves: bool = False):
        """Vectorized simulation; sample i uses stream ``base_seed + i``.

        Returns ``(bins, log_joint_ratio, joint_score[, moves])`` with one
        entry per sample. Raises DegenerateStep if any per-step move
        probability hits the clamping guard (cannot happen for |theta|<=10).
        """
        theta_gen = np.atleast_1d(np.asarray(theta_gen, dtype=float))
        n = theta_gen.shape[0]
        theta0 = np.broadcast_to(np.asarray(theta0, dtype=float), (n,))
        theta1 = np.broadcast_to(np.asarray(theta1, dtype=float), (n,))
        if theta_score is None:
            theta_score = theta0
        else:
            theta_score = np.broadcast_to(np.asarray(theta_score, dtype=float), (n,))
        for name, arr in (("theta_gen", theta_gen), ("theta0", theta0),
                          ("theta1", theta1), ("theta_score", theta_score)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

        n_rows = self.config.n_rows
        rng = CounterRng.from_base_seed(base_seed, n)
        k = np.zeros(n, dtype=np.int64)
        log_ratio = np.zeros(n)
        score = np.zeros(n)
        moves = np.zeros((n, n_rows), dtype=bool) if return_moves else None

        for v in range(n_rows):
            u = rng.uniform()
            p_gen = self._prob_left(k, v, theta_gen)
            go_left = u < p_gen

            p0 = self._prob_left(k, v, theta0)
            p1 = self._prob_left(k, v, theta1)
            ps = self._prob_left(k, v, theta_score)
            pm0 = np.where(go_left, p0, 1.0 - p0)
            pm1 = np.where(go_left, p1, 1.0 - p1)
            pms = np.where(go_left, ps, 1.0 - ps)
            lo = min(pm0.min(), pm1.min(), pms.min())
            if lo < PROB_CLAMP or max(pm0.max(), pm1.max(), pms.max()) > 1.0 - PROB_CLAMP:
                raise DegenerateStep(
                    f"step probability outside [{PROB_CLAMP}, 1-{PROB_CLAMP}] at row {v}"
                )
            log_ratio += np.log(pm0) - np.log(pm1)
            dps = self._dprob_left(k, v, theta_score)
            score += np.where(go_left, dps / ps, -dps / (1.0 - ps))

            if return_moves:
                moves[:, v] = ~go_left
            k += (~go_left).astype(np.int64)

        if return_moves:
            return k, log_ratio, score, moves
        return k, log_ratio, score

    def sample_bins(self, theta: float, n: int, base_seed: int) -> np.ndarray:
        """Observables only (bins), for calibration and coverage studies."""
        bins, _, _ = self.simulate_batch(np.full(n, float(theta)), theta, theta, base_seed)
        return bins

    # -- exact oracle ----------------------------------------------------

    def exact_density(self, theta: float) -> np.ndarray:
        """Exact p(x | theta) over bins 0..n_rows by row-wise propagation."""
        theta = float(np.asarray(theta).reshape(()))
        if not np.isfinite(theta):
            raise ValueError("theta must be finite")
        n_rows = self.config.n_rows
        p = np.zeros(n_rows + 1)
        p[0] = 1.0
        for v in range(n_rows):
            k = np.arange(v + 1)
            pl = self._prob_left(k, v, theta)
            nxt = np.zeros(n_rows + 1)
            nxt[: v + 1] += p[: v + 1] * pl
            nxt[1: v + 2] += p[: v + 1] * (1.0 - pl)
            p = nxt
        return p

    def exact_log_ratio(self, theta0: float, theta1: float, bins=None) -> np.ndarray:
        """Exact log p(x|theta0) - log p(x|theta1) per bin.

        Raises NonpositiveDensity if either density underflows to zero on
        an evaluated bin.
        """
        p0 = self.exact_density(theta0)
        p1 = self.exact_density(theta1)
        if bins is None:
            bins = np.arange(self.config.n_bins)
        bins = np.asarray(bins, dtype=int)
        if np.any(p0[bins] <= 0.0) or np.any(p1[bins] <= 0.0):
            raise NonpositiveDensity("exact density underflowed to zero on an evaluated bin")
        return np.log(p0[bins]) - np.log(p1[bins])

    def exact_score(self, theta: float, h: float = 1e-6) -> np.ndarray:
        """Centered finite difference of log p(x|theta) per bin (oracle aid)."""
        lo = np.log(self.exact_density(theta - h))
        hi = np.log(self.exact_density(theta + h))
        return (hi - lo) / (2.0 * h)
