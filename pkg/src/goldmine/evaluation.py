"""Metric read-outs for trained surrogates.

Three groups of tools live here:

* ratio-MSE bookkeeping (`mse_log_ratio`, `MseReport`) for sample-size
  scans, serialized as CSV / JSON tables keyed by (method, n_train, seed);
* sanity diagnostics on augmented datasets (`score_diagnostics`), the
  Monte-Carlo identities E[t] = 0 at the generating parameters and
  E[r] = 1 under theta1 sampling expressed as z-scores;
* likelihood-ratio-test confidence regions (`confidence_region`) built
  from any per-observation log-ratio predictor, with chi-squared
  thresholds at the 1/2/3-sigma confidence levels by default.

A small ensemble helper (`build_ensemble_reference`) produces the
pointwise-median reference predictor used where no tractable likelihood
exists.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exceptions import ConfigError, DataError
from .methods.surrogate import SurrogateModel, evaluate_log_ratio
from .methods.training import TrainConfig, train

# two-sided 1, 2, 3 sigma coverage of a standard normal
DEFAULT_LEVELS = (0.682689492137086, 0.954499736103642, 0.997300203936740)


def predict_log_ratio(predictor, x, theta0, theta1) -> np.ndarray:
    """Per-point log r evaluation for any of the supported predictor kinds.

    Accepts a trained SurrogateModel, an EnsembleReference, or a plain
    callable f(x, theta0, theta1) -> (n,) array.
    """
    if isinstance(predictor, SurrogateModel):
        return evaluate_log_ratio(predictor, x, theta0, theta1)
    if isinstance(predictor, EnsembleReference):
        return predictor.predict_log_ratio(x, theta0, theta1)
    if callable(predictor):
        return np.asarray(predictor(x, theta0, theta1), dtype=float)
    raise ConfigError(f"cannot evaluate log-ratios with {type(predictor).__name__}")


def mse_log_ratio(predictor, x, theta0, theta1, reference) -> float:
    """Mean squared error of predicted log r against reference values.

    `reference` holds the target log-ratios at the evaluation points
    (exact oracle values where available, ensemble medians otherwise).
    """
    reference = np.asarray(reference, dtype=float).ravel()
    if reference.size == 0:
        raise DataError("empty reference")
    if not np.all(np.isfinite(reference)):
        raise DataError("reference log-ratio undefined at some evaluation points")
    pred = predict_log_ratio(predictor, x, theta0, theta1)
    if pred.shape != reference.shape:
        raise DataError(
            f"prediction/reference shape mismatch {pred.shape} vs {reference.shape}")
    return float(np.mean((pred - reference) ** 2))


@dataclass
class MseReport:
    """Flat (method, n_train, seed, mse) table with per-cell medians."""

    rows: list = field(default_factory=list)

    def add(self, method: str, n_train: int, seed: int, mse: float):
        mse = float(mse)
        if not (mse >= 0.0):
            raise DataError(f"mse must be non-negative, got {mse}")
        self.rows.append({"method": str(method), "n_train": int(n_train),
                          "seed": int(seed), "mse": mse})

    def cell(self, method: str, n_train: int) -> np.ndarray:
        vals = [r["mse"] for r in self.rows
                if r["method"] == method and r["n_train"] == n_train]
        return np.asarray(vals, dtype=float)

    def medians(self) -> list:
        cells = sorted({(r["method"], r["n_train"]) for r in self.rows})
        out = []
        for method, n_train in cells:
            vals = self.cell(method, n_train)
            out.append({"method": method, "n_train": n_train,
                        "median": float(np.median(vals)),
                        "std": float(np.std(vals)),
                        "n_seeds": int(vals.size)})
        return out

    def curve(self, method: str):
        """(sample sizes, median MSEs) for one method, sizes increasing."""
        sizes = sorted({r["n_train"] for r in self.rows if r["method"] == method})
        if not sizes:
            raise DataError(f"no entries for method {method!r}")
        med = [float(np.median(self.cell(method, n))) for n in sizes]
        return np.asarray(sizes), np.asarray(med)

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=["method", "n_train", "seed", "mse"])
            writer.writeheader()
            for row in sorted(self.rows, key=lambda r: (r["method"], r["n_train"], r["seed"])):
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "MseReport":
        report = cls()
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                report.add(row["method"], int(row["n_train"]),
                           int(row["seed"]), float(row["mse"]))
        return report

    def to_json(self, path):
        doc = {"rows": sorted(self.rows, key=lambda r: (r["method"], r["n_train"], r["seed"])),
               "medians": self.medians()}
        with open(path, "w") as f:
            json.dump(doc, f, indent=1, sort_keys=True)
            f.write("\n")


def score_diagnostics(dataset) -> dict:
    """Z-scores for the augmentation identities on a labelled dataset.

    Joint scores are stored at the generating parameters, so their mean
    should vanish dimension by dimension. The joint ratio satisfies
    E[r] = 1 over rows simulated at theta1 (label 1) and E[1/r] = 1 over
    rows simulated at theta0 (label 0); whichever subsets are present
    are reported. Standard errors (and hence z-scores) are absent when a
    subset has fewer than two rows.
    """
    if dataset.n == 0:
        raise DataError("empty dataset")
    dataset.require_scores()
    out = {"n": dataset.n}

    t = dataset.joint_score
    out["score_mean"] = t.mean(axis=0).tolist()
    if dataset.n > 1:
        se = t.std(axis=0, ddof=1) / np.sqrt(dataset.n)
        out["score_stderr"] = se.tolist()
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, t.mean(axis=0) / se, np.inf)
        out["score_z"] = z.tolist()
    else:
        out["score_stderr"] = None
        out["score_z"] = None

    for label, key, sign in ((1, "ratio", 1.0), (0, "inverse_ratio", -1.0)):
        mask = dataset.y == label
        if not np.any(mask):
            out[key] = None
            continue
        r = np.exp(sign * dataset.log_joint_ratio[mask])
        entry = {"n": int(mask.sum()), "mean": float(r.mean())}
        if mask.sum() > 1:
            se = float(r.std(ddof=1) / np.sqrt(mask.sum()))
            entry["stderr"] = se
            entry["z"] = (entry["mean"] - 1.0) / se if se > 0 else np.inf
        else:
            entry["stderr"] = None
            entry["z"] = None
        out[key] = entry
    return out


@dataclass
class ConfidenceRegion:
    """-2 log-likelihood-ratio surface over a parameter grid."""

    theta_grid: np.ndarray      # (m, d)
    q: np.ndarray               # (m,) surface, minimum exactly 0
    theta_hat: np.ndarray       # (d,) grid argmin
    levels: tuple
    thresholds: dict            # level -> chi-squared quantile, d dof

    def membership(self, level: float) -> np.ndarray:
        return self.q <= self.thresholds[level]

    def covers(self, theta, level: float) -> bool:
        """Whether the grid point nearest to theta lies in the region."""
        theta = np.asarray(theta, dtype=float).ravel()
        j = int(np.argmin(np.sum((self.theta_grid - theta) ** 2, axis=1)))
        return bool(self.q[j] <= self.thresholds[level])


def confidence_region(predictor, observed, theta_grid,
                      levels=DEFAULT_LEVELS) -> ConfidenceRegion:
    """Likelihood-ratio-test region from iid observations.

    q(theta) = -2 sum_i log r(x_i | theta, theta_hat) where theta_hat is
    the grid argmax of the summed log-ratio (any common reference in the
    ratio cancels). The region at a confidence level keeps the grid
    points with q below the chi-squared quantile with d degrees of
    freedom; for d = 1 the 1/2/3-sigma thresholds are exactly 1, 4, 9.
    """
    observed = np.asarray(observed, dtype=float)
    if observed.ndim == 1:
        observed = observed[:, None]
    if observed.shape[0] == 0:
        raise DataError("empty observed set")
    theta_grid = np.asarray(theta_grid, dtype=float)
    if theta_grid.ndim == 1:
        theta_grid = theta_grid[:, None]
    m, d = theta_grid.shape
    if m < 2:
        raise ConfigError("theta grid too coarse (needs at least 2 points)")

    anchor = theta_grid[0]
    log_lik = np.empty(m)
    for j in range(m):
        lr = predict_log_ratio(predictor, observed, theta_grid[j], anchor)
        log_lik[j] = np.sum(lr)
    j_hat = int(np.argmax(log_lik))
    q = -2.0 * (log_lik - log_lik[j_hat])
    thresholds = {lvl: float(stats.chi2.ppf(lvl, df=d)) for lvl in levels}
    return ConfidenceRegion(theta_grid=theta_grid, q=q,
                            theta_hat=theta_grid[j_hat].copy(),
                            levels=tuple(levels), thresholds=thresholds)


def lotka_eval_points(n_x: int = 500, n_theta: int = 100, base_seed: int = 0,
                      config=None, box_halfwidth: float = 0.01):
    """Evaluation pairs for the predator-prey surrogates.

    n_x summary vectors are simulated at the reference rates (exactly the
    theta1 role) and each is paired with one of n_theta theta0 draws from
    the +-box around the reference, cycling. Returns (x, theta0, theta1)
    with x of shape (n_x, 9) and theta0 of shape (n_x, 4).
    """
    from .data import make_lotka_dataset
    from .simulators import REFERENCE_LOG_RATES

    if n_x < 1 or n_theta < 1:
        raise ConfigError("need at least one evaluation point")
    ds = make_lotka_dataset(n_x, base_seed=base_seed, config=config,
                            box_halfwidth=0.0)
    rng = np.random.default_rng([base_seed, 3])
    theta1 = REFERENCE_LOG_RATES.copy()
    draws = theta1 + rng.uniform(-box_halfwidth, box_halfwidth, (n_theta, 4))
    theta0 = draws[np.arange(n_x) % n_theta]
    return ds.x, theta0, theta1


@dataclass
class EnsembleReference:
    """Pointwise median over independently trained surrogates."""

    models: list

    def __post_init__(self):
        if len(self.models) < 3:
            raise ConfigError("ensemble reference needs at least 3 members")

    def predict_log_ratio(self, x, theta0, theta1) -> np.ndarray:
        preds = [evaluate_log_ratio(m, x, theta0, theta1) for m in self.models]
        return np.median(np.stack(preds, axis=0), axis=0)


def build_ensemble_reference(method: str, dataset, n_models: int = 5,
                             seeds=None, config: TrainConfig | None = None,
                             **train_kwargs) -> EnsembleReference:
    """Train n_models surrogates differing only by seed, median-combine them."""
    if seeds is None:
        seeds = list(range(n_models))
    if len(seeds) != n_models:
        raise ConfigError(f"need {n_models} seeds, got {len(seeds)}")
    models = []
    for i, seed in enumerate(seeds):
        try:
            models.append(train(method, dataset, config=config, seed=seed,
                                **train_kwargs))
        except Exception as exc:
            raise type(exc)(f"ensemble member {i} (seed {seed}): {exc}") from exc
    return EnsembleReference(models=models)
