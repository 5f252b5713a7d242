"""Augmented datasets: columns in memory, newline-delimited JSON on disk.

A dataset is a header line (simulator id, config digest, sampling
description, base seed, record digest) followed by one JSON object per
sample: x, y, theta0, theta1, theta_gen, log_joint_ratio, joint_score.
Numbers round-trip exactly because JSON floats are emitted with Python's
shortest-repr encoding. The header's creation field is a fixed epoch
string so identical seeds give byte-identical files.

Builders follow the two experiments: Galton pairs cycle theta0 over a
10-point grid with theta1 fixed, alternating labels; Lotka-Volterra
draws theta0 uniformly in a +-0.01 log-rate box around the reference and
keeps simulating until the requested number of non-exploded samples is
reached (explosion counts are reported in the header).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, DigestMismatch, MissingAugmentation
from .simulators import (
    GaltonBoard,
    GaltonConfig,
    LotkaVolterra,
    LotkaVolterraConfig,
    REFERENCE_LOG_RATES,
)
from .simulators.lotka import SUMMARY_NAMES

FORMAT = "goldmine-dataset-v1"
# fixed stand-in for wall-clock time: datasets must be byte-reproducible
CREATED = "1970-01-01T00:00:00Z"

GALTON_THETA_GRID = np.linspace(-1.0, -0.4, 10)
GALTON_THETA1 = -0.6
LOTKA_BOX_HALFWIDTH = 0.01


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Dataset:
    simulator: str
    config: dict
    theta_sampling: str
    base_seed: int
    x: np.ndarray                 # (n, x_dim)
    y: np.ndarray                 # (n,) in {0,1}
    theta0: np.ndarray            # (n, d)
    theta1: np.ndarray            # (n, d)
    theta_gen: np.ndarray         # (n, d)
    log_joint_ratio: np.ndarray   # (n,)
    joint_score: np.ndarray | None  # (n, d), evaluated at theta_gen
    n_invalid: int = 0

    def __post_init__(self):
        n = self.x.shape[0]
        for name in ("y", "theta0", "theta1", "theta_gen", "log_joint_ratio"):
            if getattr(self, name).shape[0] != n:
                raise DataError(f"column {name} has wrong length")
        if self.joint_score is not None and self.joint_score.shape[0] != n:
            raise DataError("column joint_score has wrong length")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def theta_dim(self) -> int:
        return self.theta0.shape[1]

    def require_scores(self):
        if self.joint_score is None:
            raise MissingAugmentation(
                "this method trains on joint scores, but the dataset has none")
        return self.joint_score

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            simulator=self.simulator, config=self.config,
            theta_sampling=self.theta_sampling, base_seed=self.base_seed,
            x=self.x[idx], y=self.y[idx], theta0=self.theta0[idx],
            theta1=self.theta1[idx], theta_gen=self.theta_gen[idx],
            log_joint_ratio=self.log_joint_ratio[idx],
            joint_score=None if self.joint_score is None else self.joint_score[idx],
            n_invalid=self.n_invalid)

    def records_digest(self) -> str:
        lines = self._record_lines()
        return hashlib.sha256(("\n".join(lines) + "\n").encode()
                              if lines else b"").hexdigest()

    # -- persistence -----------------------------------------------------

    def _record_lines(self) -> list:
        lines = []
        as_int_x = self.simulator == "galton"
        for i in range(self.n):
            rec = {
                "x": int(round(self.x[i, 0])) if as_int_x else [float(v) for v in self.x[i]],
                "y": int(self.y[i]),
                "theta0": [float(v) for v in self.theta0[i]],
                "theta1": [float(v) for v in self.theta1[i]],
                "theta_gen": [float(v) for v in self.theta_gen[i]],
                "log_joint_ratio": float(self.log_joint_ratio[i]),
                "joint_score": None if self.joint_score is None
                               else [float(v) for v in self.joint_score[i]],
            }
            lines.append(json.dumps(rec, separators=(",", ":")))
        return lines

    def save(self, path):
        lines = self._record_lines()
        digest = hashlib.sha256(("\n".join(lines) + "\n").encode()
                                if lines else b"").hexdigest()
        header = {
            "format": FORMAT,
            "simulator": self.simulator,
            "config": self.config,
            "config_digest": config_digest(self.config),
            "theta_sampling": self.theta_sampling,
            "base_seed": int(self.base_seed),
            "created": CREATED,
            "n_records": self.n,
            "n_invalid": int(self.n_invalid),
            "records_digest": digest,
        }
        with open(path, "w") as f:
            f.write(json.dumps(header, separators=(",", ":")) + "\n")
            for line in lines:
                f.write(line + "\n")

    @classmethod
    def load(cls, path) -> "Dataset":
        with open(path) as f:
            header_line = f.readline()
            if not header_line:
                raise DataError(f"{path}: empty file")
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}: bad header: {e}") from e
            if header.get("format") != FORMAT:
                raise DataError(f"{path}: not a {FORMAT} file")
            body = f.read()
        n = header["n_records"]
        lines = body.splitlines()
        if len(lines) != n:
            raise DigestMismatch(
                f"{path}: header promises {n} records, found {len(lines)}")
        digest = hashlib.sha256(body.encode() if body else b"").hexdigest()
        if digest != header["records_digest"]:
            raise DigestMismatch(f"{path}: record digest mismatch (file corrupt?)")
        if header.get("config_digest") != config_digest(header["config"]):
            raise DigestMismatch(f"{path}: config digest mismatch")

        recs = [json.loads(line) for line in lines]
        if n == 0:
            d = 1
            empty = np.zeros((0, d))
            return cls(simulator=header["simulator"], config=header["config"],
                       theta_sampling=header["theta_sampling"],
                       base_seed=header["base_seed"], x=np.zeros((0, 1)),
                       y=np.zeros(0, dtype=np.int64), theta0=empty, theta1=empty,
                       theta_gen=empty, log_joint_ratio=np.zeros(0),
                       joint_score=empty, n_invalid=header.get("n_invalid", 0))
        x = np.array([[r["x"]] if np.isscalar(r["x"]) else r["x"] for r in recs], dtype=float)
        have_scores = recs[0]["joint_score"] is not None
        ds = cls(
            simulator=header["simulator"], config=header["config"],
            theta_sampling=header["theta_sampling"], base_seed=header["base_seed"],
            x=x,
            y=np.array([r["y"] for r in recs], dtype=np.int64),
            theta0=np.array([r["theta0"] for r in recs], dtype=float),
            theta1=np.array([r["theta1"] for r in recs], dtype=float),
            theta_gen=np.array([r["theta_gen"] for r in recs], dtype=float),
            log_joint_ratio=np.array([r["log_joint_ratio"] for r in recs], dtype=float),
            joint_score=np.array([r["joint_score"] for r in recs], dtype=float)
                        if have_scores else None,
            n_invalid=header.get("n_invalid", 0))
        if not np.all(np.isfinite(ds.x)) or not np.all(np.isfinite(ds.log_joint_ratio)):
            raise DataError(f"{path}: non-finite record values")
        return ds


# -- builders -------------------------------------------------------------

def make_galton_dataset(n: int, base_seed: int, config: GaltonConfig | None = None,
                        theta_grid=None, theta1: float = GALTON_THETA1) -> Dataset:
    """Paired samples: theta0 cycles the grid, labels alternate 0/1.

    Even rows (y=0) are generated at their theta0, odd rows (y=1) at the
    shared theta1; consecutive rows share the same theta0 so both labels
    see every grid value. Scores are evaluated at each row's generating
    parameter.
    """
    config = config or GaltonConfig()
    grid = GALTON_THETA_GRID if theta_grid is None else np.asarray(theta_grid, dtype=float)
    board = GaltonBoard(config)
    idx = np.arange(n)
    theta0 = grid[(idx // 2) % grid.size]
    y = idx % 2
    theta_gen = np.where(y == 0, theta0, theta1)
    if n == 0:
        bins = np.zeros(0, dtype=np.int64)
        logr = score = np.zeros(0)
    else:
        bins, logr, score = board.simulate_batch(
            theta_gen, theta0, np.full(n, theta1), base_seed, theta_score=theta_gen)
    return Dataset(
        simulator="galton",
        config={"n_rows": config.n_rows, "theta_curvature": config.theta_curvature},
        theta_sampling=(f"theta0 cycling {grid.size} grid points in "
                        f"[{grid.min()}, {grid.max()}], theta1={theta1}, alternating labels"),
        base_seed=base_seed,
        x=bins[:, None].astype(float), y=y.astype(np.int64),
        theta0=theta0[:, None], theta1=np.full((n, 1), theta1),
        theta_gen=theta_gen[:, None], log_joint_ratio=logr,
        joint_score=score[:, None])


def make_galton_reference_dataset(n: int, theta_ref: float, base_seed: int,
                                  config: GaltonConfig | None = None) -> Dataset:
    """All samples at one reference point, scores at that point (local methods)."""
    config = config or GaltonConfig()
    board = GaltonBoard(config)
    theta = np.full(n, float(theta_ref))
    if n == 0:
        bins = np.zeros(0, dtype=np.int64)
        logr = score = np.zeros(0)
    else:
        bins, logr, score = board.simulate_batch(theta, theta, theta, base_seed)
    return Dataset(
        simulator="galton",
        config={"n_rows": config.n_rows, "theta_curvature": config.theta_curvature},
        theta_sampling=f"all samples at theta_ref={theta_ref}",
        base_seed=base_seed,
        x=bins[:, None].astype(float), y=np.zeros(n, dtype=np.int64),
        theta0=theta[:, None], theta1=theta[:, None], theta_gen=theta[:, None],
        log_joint_ratio=logr, joint_score=score[:, None])


def make_lotka_dataset(n: int, base_seed: int, config: LotkaVolterraConfig | None = None,
                       box_halfwidth: float = LOTKA_BOX_HALFWIDTH,
                       reference=None) -> Dataset:
    """n valid samples at theta_gen = theta0 ~ U(reference +- halfwidth).

    theta1 is pinned to the reference. Exploded runs are skipped and
    counted; the simulation seed keeps advancing so the result is
    deterministic in base_seed regardless of how many retries happen.
    """
    config = config or LotkaVolterraConfig()
    ref = REFERENCE_LOG_RATES if reference is None else np.asarray(reference, dtype=float)
    lv = LotkaVolterra(config)
    rng = np.random.default_rng(base_seed)

    chunks = [(np.zeros((0, len(SUMMARY_NAMES))), np.zeros((0, 4)),
               np.zeros(0), np.zeros((0, 4)))]
    n_invalid = 0
    offset = 0
    while sum(c[0].shape[0] for c in chunks) < n:
        need = n - sum(c[0].shape[0] for c in chunks)
        m = need + max(16, need // 16)
        theta0 = ref + rng.uniform(-box_halfwidth, box_halfwidth, size=(m, 4))
        batch = lv.simulate_batch(theta0, theta0, ref, base_seed + offset)
        offset += m
        keep = batch.valid
        n_invalid += int(np.sum(~keep))
        summaries = lv.summarize_batch(batch)
        chunks.append((summaries[keep], theta0[keep],
                       batch.log_joint_ratio[keep], batch.joint_score[keep]))

    x = np.concatenate([c[0] for c in chunks])[:n]
    theta0 = np.concatenate([c[1] for c in chunks])[:n]
    logr = np.concatenate([c[2] for c in chunks])[:n]
    score = np.concatenate([c[3] for c in chunks])[:n]
    return Dataset(
        simulator="lotka",
        config={"init_predators": config.init_predators, "init_prey": config.init_prey,
                "horizon": config.horizon, "record_dt": config.record_dt,
                "population_cap": config.population_cap},
        theta_sampling=(f"theta0=theta_gen uniform in +-{box_halfwidth} log-rate box "
                        f"around {list(np.round(ref, 6))}, theta1 at the reference"),
        base_seed=base_seed,
        x=x, y=np.zeros(n, dtype=np.int64),
        theta0=theta0, theta1=np.broadcast_to(ref, (n, 4)).copy(),
        theta_gen=theta0.copy(), log_joint_ratio=logr, joint_score=score,
        n_invalid=n_invalid)
