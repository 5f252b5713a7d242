"""Lotka-Volterra predator-prey model simulated with Gillespie's algorithm.

Four event types with rates controlled by log-rate parameters theta:

* predator birth   lambda_1 = exp(theta_1) * X * Y   (X -> X+1)
* predator death   lambda_2 = exp(theta_2) * X       (X -> X-1)
* prey birth       lambda_3 = exp(theta_3) * Y       (Y -> Y+1)
* prey consumed    lambda_4 = exp(theta_4) * X * Y   (Y -> Y-1)

X counts predators, Y counts prey. Because each Gillespie step has a
tractable density (exponential waiting time, categorical event choice),
every trace is augmented online with the joint score and the joint
log-ratio, including the censoring term for the final quiet interval up
to the horizon. The inner loop is compiled with numba and draws its
randomness from the same counter-based splitmix64 generator used
elsewhere, so a trace is reproducible from a single integer seed and the
event sequence can be replayed outside the kernel.

Exact likelihoods for the recorded time series are intractable; training
happens on 9 summary statistics (means, log-variances, autocorrelations
at lags 1 and 2, cross-correlation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..exceptions import NumericError
from ..rng import GAMMA, _MIX1, _MIX2

# Reference hypothesis in log-rate space (predator birth, predator death,
# prey birth, prey consumption).
REFERENCE_LOG_RATES = np.array([-4.61, -0.69, 0.0, -4.61])

SUMMARY_NAMES = (
    "mean_predators", "mean_prey",
    "log_var_predators", "log_var_prey",
    "autocorr1_predators", "autocorr2_predators",
    "autocorr1_prey", "autocorr2_prey",
    "cross_corr",
)

# Kernel exit statuses.
STATUS_OK = 0
STATUS_EXPLODED = 1
STATUS_EVENT_BUFFER_FULL = 2
STATUS_TOO_MANY_EVENTS = 3

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_INV53 = 2.0 ** -53


@dataclass(frozen=True)
class LotkaVolterraConfig:
    init_predators: int = 50
    init_prey: int = 100
    horizon: float = 30.0
    record_dt: float = 0.2
    population_cap: int = 100_000
    max_events: int = 20_000_000

    def __post_init__(self):
        if self.horizon <= 0 or self.record_dt <= 0:
            raise ValueError("horizon and record_dt must be positive")
        if self.init_predators < 0 or self.init_prey < 0:
            raise ValueError("initial populations must be non-negative")

    @property
    def n_snapshots(self) -> int:
        return int(round(self.horizon / self.record_dt)) + 1


@dataclass
class LotkaVolterraTrace:
    """One simulated trace: recorded series plus per-trace accumulators."""

    times: np.ndarray
    predators: np.ndarray
    prey: np.ndarray
    joint_score: np.ndarray
    log_joint_ratio: float
    valid: bool
    status: int
    n_events: int
    event_taus: np.ndarray | None = None
    event_kinds: np.ndarray | None = None


@dataclass
class LotkaVolterraBatch:
    """Column-oriented batch results; invalid rows are flagged, not dropped."""

    times: np.ndarray                # (n_snapshots,)
    predators: np.ndarray            # (n, n_snapshots) int64
    prey: np.ndarray                 # (n, n_snapshots) int64
    joint_score: np.ndarray          # (n, 4)
    log_joint_ratio: np.ndarray      # (n,)
    valid: np.ndarray                # (n,) bool
    status: np.ndarray               # (n,) int64
    n_events: np.ndarray             # (n,) int64

    @property
    def n_invalid(self) -> int:
        return int(np.sum(~self.valid))


@njit(cache=True)
def _gillespie_kernel(seed, c_gen, c_s, c0, c1, dlog01,
                      x0, y0, horizon, record_dt, cap, max_events,
                      series_x, series_y, score_out, logr_out, ev_tau, ev_kind):
    """Scalar Gillespie loop; returns (status, n_events).

    Randomness is splitmix64 on the counter ``seed``: the k-th draw is
    mix(seed + k*GAMMA), identical to the vectorized generator. Snapshots
    at i*record_dt hold the state just before that time (right limit of
    the previous event). Event (tau, kind) pairs are stored in ev_tau /
    ev_kind when those buffers are non-empty, for external replay.
    """
    state = seed
    x = x0
    y = y0
    t = 0.0
    n_record = series_x.shape[0]
    rec_i = 0
    record_events = ev_tau.shape[0] > 0
    n_events = 0
    logr = 0.0
    for k in range(4):
        score_out[k] = 0.0
    dc0 = c0[0] - c1[0]
    dc1 = c0[1] - c1[1]
    dc2 = c0[2] - c1[2]
    dc3 = c0[3] - c1[3]
    status = STATUS_OK

    while True:
        gxy = float(x) * float(y)
        gx = float(x)
        gy = float(y)
        l1 = c_gen[0] * gxy
        l2 = c_gen[1] * gx
        l3 = c_gen[2] * gy
        l4 = c_gen[3] * gxy
        ltot = l1 + l2 + l3 + l4
        if ltot <= 0.0:
            break  # both populations extinct; state persists to horizon

        state += GAMMA
        z = state
        z = (z ^ (z >> _U30)) * _MIX1
        z = (z ^ (z >> _U27)) * _MIX2
        z = z ^ (z >> _U31)
        u1 = float(z >> _U11) * _INV53
        tau = -math.log1p(-u1) / ltot
        t_new = t + tau
        if t_new > horizon:
            break

        while rec_i < n_record and rec_i * record_dt < t_new:
            series_x[rec_i] = x
            series_y[rec_i] = y
            rec_i += 1

        state += GAMMA
        z = state
        z = (z ^ (z >> _U30)) * _MIX1
        z = (z ^ (z >> _U27)) * _MIX2
        z = z ^ (z >> _U31)
        u2 = float(z >> _U11) * _INV53
        r = u2 * ltot
        if r < l1:
            j = 0
        elif r < l1 + l2:
            j = 1
        elif r < l1 + l2 + l3:
            j = 2
        else:
            j = 3

        # Accumulators use rates at the pre-event state.
        score_out[0] -= c_s[0] * gxy * tau
        score_out[1] -= c_s[1] * gx * tau
        score_out[2] -= c_s[2] * gy * tau
        score_out[3] -= c_s[3] * gxy * tau
        score_out[j] += 1.0
        dltot = (dc0 + dc3) * gxy + dc1 * gx + dc2 * gy
        logr += dlog01[j] - dltot * tau

        if record_events:
            if n_events >= ev_tau.shape[0]:
                status = STATUS_EVENT_BUFFER_FULL
                break
            ev_tau[n_events] = tau
            ev_kind[n_events] = j
        n_events += 1
        if n_events > max_events:
            status = STATUS_TOO_MANY_EVENTS
            break

        if j == 0:
            x += 1
        elif j == 1:
            x -= 1
        elif j == 2:
            y += 1
        else:
            y -= 1
        t = t_new
        if x > cap or y > cap:
            status = STATUS_EXPLODED
            break

    if status == STATUS_OK:
        # Censoring: survival from the last event to the horizon.
        tau_last = horizon - t
        gxy = float(x) * float(y)
        gx = float(x)
        gy = float(y)
        score_out[0] -= c_s[0] * gxy * tau_last
        score_out[1] -= c_s[1] * gx * tau_last
        score_out[2] -= c_s[2] * gy * tau_last
        score_out[3] -= c_s[3] * gxy * tau_last
        dltot = (dc0 + dc3) * gxy + dc1 * gx + dc2 * gy
        logr -= dltot * tau_last

    while rec_i < n_record:
        series_x[rec_i] = x
        series_y[rec_i] = y
        rec_i += 1

    logr_out[0] = logr
    return status, n_events


def _as_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (4,):
        raise ValueError(f"log-rate vector must have 4 components, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("log rates must be finite")
    return theta


class LotkaVolterra:
    """Gillespie simulator with joint score and joint log-ratio extraction."""

    def __init__(self, config: LotkaVolterraConfig | None = None):
        self.config = config or LotkaVolterraConfig()

    def rates(self, predators: int, prey: int, log_rates) -> np.ndarray:
        """Event rates (events per unit time) at the given state."""
        theta = _as_theta(log_rates)
        c = np.exp(theta)
        xy = float(predators) * float(prey)
        return np.array([c[0] * xy, c[1] * float(predators),
                         c[2] * float(prey), c[3] * xy])

    def simulate(self, theta_gen, theta0, theta1, rng_seed: int,
                 theta_score=None, record_events: bool = False) -> LotkaVolterraTrace:
        """Run one trace generated under ``theta_gen``.

        The log-ratio is accumulated between ``theta0`` and ``theta1``;
        the score defaults to ``theta0`` but can be evaluated at any
        ``theta_score`` along the same trace. With ``record_events`` the
        full (tau, kind) event sequence is returned so the trace
        log-density can be recomputed independently.
        """
        cfg = self.config
        theta_gen = _as_theta(theta_gen)
        theta0 = _as_theta(theta0)
        theta1 = _as_theta(theta1)
        theta_s = theta0 if theta_score is None else _as_theta(theta_score)

        n_rec = cfg.n_snapshots
        series_x = np.zeros(n_rec, dtype=np.int64)
        series_y = np.zeros(n_rec, dtype=np.int64)
        score = np.zeros(4)
        logr = np.zeros(1)
        buf = 65536 if record_events else 0
        seed = np.uint64(rng_seed % (1 << 64))
        while True:
            ev_tau = np.zeros(buf)
            ev_kind = np.zeros(buf, dtype=np.int64)
            status, n_events = _gillespie_kernel(
                seed, np.exp(theta_gen), np.exp(theta_s), np.exp(theta0),
                np.exp(theta1), theta0 - theta1,
                np.int64(cfg.init_predators), np.int64(cfg.init_prey),
                float(cfg.horizon), float(cfg.record_dt),
                np.int64(cfg.population_cap), np.int64(cfg.max_events),
                series_x, series_y, score, logr, ev_tau, ev_kind)
            if status != STATUS_EVENT_BUFFER_FULL:
                break
            buf *= 4
            if buf > 4 * cfg.max_events:
                raise NumericError("event buffer exceeded max_events during replay recording")
        if status == STATUS_TOO_MANY_EVENTS:
            raise NumericError(
                f"Gillespie trace exceeded max_events={cfg.max_events}")

        times = np.arange(n_rec) * cfg.record_dt
        return LotkaVolterraTrace(
            times=times, predators=series_x, prey=series_y,
            joint_score=score, log_joint_ratio=float(logr[0]),
            valid=(status == STATUS_OK), status=int(status), n_events=int(n_events),
            event_taus=ev_tau[:n_events] if record_events else None,
            event_kinds=ev_kind[:n_events] if record_events else None)

    def simulate_batch(self, theta_gen, theta0, theta1, base_seed: int,
                       theta_score=None) -> LotkaVolterraBatch:
        """Simulate n traces; sample i uses seed ``base_seed + i``.

        Parameter arrays broadcast to (n, 4). Invalid traces (population
        explosion) are flagged in ``valid``, never silently dropped.
        """
        theta_gen = np.atleast_2d(np.asarray(theta_gen, dtype=float))
        n = theta_gen.shape[0]
        theta0 = np.broadcast_to(np.asarray(theta0, dtype=float), (n, 4))
        theta1 = np.broadcast_to(np.asarray(theta1, dtype=float), (n, 4))
        if theta_score is None:
            theta_s = theta0
        else:
            theta_s = np.broadcast_to(np.asarray(theta_score, dtype=float), (n, 4))
        for arr in (theta_gen, theta0, theta1, theta_s):
            if arr.shape != (n, 4) or not np.all(np.isfinite(arr)):
                raise ValueError("log-rate arrays must be finite with 4 components")

        cfg = self.config
        n_rec = cfg.n_snapshots
        series_x = np.zeros((n, n_rec), dtype=np.int64)
        series_y = np.zeros((n, n_rec), dtype=np.int64)
        score = np.zeros((n, 4))
        logr = np.zeros(n)
        status = np.zeros(n, dtype=np.int64)
        n_events = np.zeros(n, dtype=np.int64)
        empty_tau = np.zeros(0)
        empty_kind = np.zeros(0, dtype=np.int64)
        seeds = np.uint64(base_seed % (1 << 64)) + np.arange(n, dtype=np.uint64)
        one = np.zeros(1)

        for i in range(n):
            st, ne = _gillespie_kernel(
                seeds[i], np.exp(theta_gen[i]), np.exp(theta_s[i]),
                np.exp(theta0[i]), np.exp(theta1[i]), theta0[i] - theta1[i],
                np.int64(cfg.init_predators), np.int64(cfg.init_prey),
                float(cfg.horizon), float(cfg.record_dt),
                np.int64(cfg.population_cap), np.int64(cfg.max_events),
                series_x[i], series_y[i], score[i], one, empty_tau, empty_kind)
            if st == STATUS_TOO_MANY_EVENTS:
                raise NumericError(
                    f"Gillespie trace exceeded max_events={cfg.max_events}")
            logr[i] = one[0]
            status[i] = st
            n_events[i] = ne

        return LotkaVolterraBatch(
            times=np.arange(n_rec) * cfg.record_dt,
            predators=series_x, prey=series_y, joint_score=score,
            log_joint_ratio=logr, valid=(status == STATUS_OK),
            status=status, n_events=n_events)

    def summarize(self, times, predators, prey) -> np.ndarray:
        """9 summary statistics of a recorded series; see ``SUMMARY_NAMES``."""
        return summarize_series(times, predators, prey)

    def summarize_batch(self, batch: LotkaVolterraBatch) -> np.ndarray:
        out = np.zeros((batch.predators.shape[0], 9))
        for i in range(out.shape[0]):
            out[i] = summarize_series(batch.times, batch.predators[i], batch.prey[i])
        return out


def _normalized(series: np.ndarray):
    mu = series.mean()
    var = series.var()
    if var == 0.0:
        return None, mu, var
    return (series - mu) / np.sqrt(var), mu, var


def _autocorr(e: np.ndarray, lag: int) -> float:
    # biased estimator: /n keeps |ac| <= 1 for the self-normalized series
    if e is None or lag >= e.shape[0]:
        return 0.0
    return float(np.dot(e[lag:], e[:-lag]) / e.shape[0])


def summarize_series(times, predators, prey) -> np.ndarray:
    """Means, log(variance+1), lag-1/2 autocorrelations, cross-correlation.

    Consecutive snapshots with identical timestamps count once (the last
    entry wins), so appending a redundant horizon snapshot is a no-op.
    Zero-variance series get zero correlations by convention.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(predators, dtype=float)
    y = np.asarray(prey, dtype=float)
    if times.shape[0] == 0:
        raise ValueError("cannot summarize an empty series")
    keep = np.concatenate([np.diff(times) != 0.0, [True]])
    x = x[keep]
    y = y[keep]

    ex, mx, vx = _normalized(x)
    ey, my, vy = _normalized(y)
    cross = 0.0
    if ex is not None and ey is not None:
        cross = float(np.dot(ex, ey) / ex.shape[0])
    return np.array([
        mx, my,
        np.log1p(vx), np.log1p(vy),
        _autocorr(ex, 1), _autocorr(ex, 2),
        _autocorr(ey, 1), _autocorr(ey, 2),
        cross,
    ])
