"""Histogram calibration of local score models into likelihood ratios.

A score network t(x) compresses x to the estimated score at a fixed
reference point. Near that point the likelihood ratio between two
hypotheses depends on x only through t(x) (or, one dimension lower,
through the scalar h = t(x).(theta0 - theta1)), so the ratio can be
recovered by ordinary density estimation in that low-dimensional space:

    r(x | theta0, theta1) ~= p(t | theta0) / p(t | theta1).

Both densities are histograms over a shared binning (20 equal-width bins
per dimension spanning the central 99.9% of the pooled calibration
draws, additively smoothed by 1/n_bins so every bin has mass and the
total is exactly 1). Calibration draws for theta0 and theta1 reuse the
same per-sample seeds; with theta0 = theta1 the histograms coincide and
the calibrated ratio is exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .surrogate import SurrogateModel, predict_score

N_BINS = 20
CENTRAL_COVERAGE = 0.999


@dataclass
class HistogramDensity:
    """Product-binned masses over d dimensions; sums to exactly 1."""

    edges: list                 # per-dim arrays of length n_bins+1
    counts: np.ndarray          # raw counts, shape (n_bins,)*d
    masses: np.ndarray          # smoothed, same shape
    hit_empty: bool = False     # an evaluated point fell in a zero-count bin

    def bin_index(self, pts: np.ndarray) -> tuple:
        idx = []
        for k, e in enumerate(self.edges):
            j = np.searchsorted(e, pts[:, k], side="right") - 1
            idx.append(np.clip(j, 0, len(e) - 2))
        return tuple(idx)

    def log_mass(self, pts: np.ndarray) -> np.ndarray:
        idx = self.bin_index(pts)
        if np.any(self.counts[idx] == 0):
            self.hit_empty = True
        return np.log(self.masses[idx])


def fit_histogram(samples: np.ndarray, edges: list) -> HistogramDensity:
    """Histogram with additive smoothing: mass = (count + 1/B) / (n + 1).

    Out-of-range samples land in the edge bins, so no mass is lost and
    the masses always sum to exactly (n + B/B) / (n + 1) = 1.
    """
    n, _ = samples.shape
    shape = tuple(len(e) - 1 for e in edges)
    counts = np.zeros(shape)
    idx = []
    for k, e in enumerate(edges):
        j = np.searchsorted(e, samples[:, k], side="right") - 1
        idx.append(np.clip(j, 0, len(e) - 2))
    np.add.at(counts, tuple(idx), 1.0)
    masses = (counts + 1.0 / counts.size) / (n + 1.0)
    return HistogramDensity(edges=edges, counts=counts, masses=masses)


def shared_edges(pooled: np.ndarray, n_bins: int = N_BINS,
                 coverage: float = CENTRAL_COVERAGE) -> list:
    lo_q = (1.0 - coverage) / 2.0
    edges = []
    for k in range(pooled.shape[1]):
        lo = np.quantile(pooled[:, k], lo_q)
        hi = np.quantile(pooled[:, k], 1.0 - lo_q)
        if hi <= lo:
            hi = lo + 1.0  # degenerate spread: one wide bin row
        edges.append(np.linspace(lo, hi, n_bins + 1))
    return edges


@dataclass
class CalibratedLocalRatio:
    """Ratio read-out for one (theta0, theta1) pair of a local score model."""

    kind: str                   # "sally" or "sallino"
    model: SurrogateModel
    theta0: np.ndarray
    theta1: np.ndarray
    hist0: HistogramDensity = None
    hist1: HistogramDensity = None

    @property
    def hit_empty(self) -> bool:
        return self.hist0.hit_empty or self.hist1.hit_empty

    def _project(self, x) -> np.ndarray:
        t = predict_score(self.model, x)
        if self.kind == "sallino":
            return t @ (self.theta0 - self.theta1)[:, None]
        return t

    def predict_log_ratio(self, x) -> np.ndarray:
        pts = self._project(x)
        return self.hist0.log_mass(pts) - self.hist1.log_mass(pts)


def calibrate_local(model: SurrogateModel, sampler, theta0, theta1,
                    n_sims: int = 10000, base_seed: int = 0,
                    kind: str = "sally", n_bins: int = N_BINS) -> CalibratedLocalRatio:
    """Build the two histograms from fresh simulator draws.

    ``sampler(theta, n, seed)`` must return observables shaped (n, x_dim).
    The same seed serves both hypotheses (common random numbers).
    """
    if kind not in ("sally", "sallino"):
        raise ValueError("kind must be 'sally' or 'sallino'")
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    theta1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    x0 = np.asarray(sampler(theta0, n_sims, base_seed), dtype=float)
    x1 = np.asarray(sampler(theta1, n_sims, base_seed), dtype=float)

    cal = CalibratedLocalRatio(kind=kind, model=model, theta0=theta0, theta1=theta1)
    t0 = cal._project(x0)
    t1 = cal._project(x1)
    edges = shared_edges(np.concatenate([t0, t1]), n_bins=n_bins)
    cal.hist0 = fit_histogram(t0, edges)
    cal.hist1 = fit_histogram(t1, edges)
    return cal
