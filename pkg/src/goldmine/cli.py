"""Command-line entry points: simulate, train, evaluate, oracle, figure2.

Every command is deterministic given its seed(s): rerunning with the same
arguments produces byte-identical datasets, checkpoints and reports. Errors
map onto exit codes scriptable from a shell: 2 for configuration problems,
3 for data problems (missing or corrupt files, incompatible datasets), 4
for numerical failures; anything else is a bug and escapes with a
traceback.

`figure2` orchestrates the full (method, sample size, seed) ladder and can
fan groups of cells out over processes; GOLDMINE_THREADS caps the pool, and
the merged table is sorted by (method, n, seed) so the output does not
depend on completion order.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import click
import numpy as np

from .config import ExperimentConfig
from .data import (Dataset, make_galton_dataset, make_galton_reference_dataset,
                   make_lotka_dataset)
from .evaluation import (MseReport, lotka_eval_points, mse_log_ratio,
                         predict_log_ratio)
from .exceptions import ConfigError, DataError, GoldmineError, NumericError
from .methods import SurrogateModel, train
from .methods.registry import METHODS
from .simulators import GaltonBoard, GaltonConfig, LotkaVolterraConfig


def _exit_code(exc: GoldmineError) -> int:
    if isinstance(exc, DataError):
        return 3
    if isinstance(exc, NumericError):
        return 4
    return 2  # ConfigError, ReferenceMismatch, other misuse


def goldmine_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GoldmineError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code(exc))
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
    return wrapper


def _load_experiment(config_path) -> ExperimentConfig:
    if config_path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_file(config_path)


def _load_model(path) -> SurrogateModel:
    try:
        return SurrogateModel.load(path)
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}")


def _load_dataset(path) -> Dataset:
    try:
        return Dataset.load(path)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}")


@click.group()
def main():
    """Likelihood-free inference from ratio- and score-augmented simulators."""


@main.command()
@click.option("--simulator", type=click.Choice(["galton", "lotka"]),
              default="galton", show_default=True)
@click.option("--n", "n_samples", type=int, required=True,
              help="number of samples (valid samples for lotka)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--theta-ref", type=float, default=None,
              help="galton only: simulate everything at this fixed point "
                   "(score-regression data) instead of label-paired sampling")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="ExperimentConfig JSON; simulator_params are forwarded")
@goldmine_errors
def simulate(simulator, n_samples, seed, out, theta_ref, config_path):
    """Write an augmented dataset (newline-delimited JSON)."""
    if n_samples < 0:
        raise ConfigError("--n must be non-negative")
    cfg = _load_experiment(config_path)
    params = cfg.simulator_params if config_path else {}
    if simulator == "galton":
        board_cfg = GaltonConfig(**params)
        if theta_ref is not None:
            ds = make_galton_reference_dataset(n_samples, theta_ref, seed,
                                               config=board_cfg)
        else:
            ds = make_galton_dataset(n_samples, seed, config=board_cfg)
    else:
        if theta_ref is not None:
            raise ConfigError("--theta-ref applies to the galton simulator only")
        ds = make_lotka_dataset(n_samples, seed, config=LotkaVolterraConfig(**params))
    ds.save(out)
    click.echo(f"wrote {ds.n} records to {out}"
               + (f" ({ds.n_invalid} invalid skipped)" if ds.n_invalid else ""))


@main.command(name="train")
@click.argument("dataset_path", type=click.Path())
@click.option("--method", type=click.Choice(sorted(METHODS)), required=True)
@click.option("--alpha", type=float, default=None,
              help="score-penalty weight; default is per-method")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="ExperimentConfig JSON; training overrides and hidden widths apply")
@goldmine_errors
def train_cmd(dataset_path, method, alpha, seed, out, config_path):
    """Train a surrogate on a dataset, write checkpoint plus training log."""
    cfg = _load_experiment(config_path)
    dataset = _load_dataset(dataset_path)
    model = train(method, dataset, alpha=alpha, config=cfg.train_config(),
                  seed=seed, hidden=tuple(cfg.hidden) if cfg.hidden else None)
    model.save(out)
    log = {k: model.meta[k] for k in
           ("train_loss", "val_loss", "best_epoch", "saturated", "hyper")}
    with open(f"{out}.log.json", "w") as f:
        json.dump(log, f, indent=1, sort_keys=True)
        f.write("\n")
    click.echo(f"trained {method} on {dataset.n} samples "
               f"(best epoch {model.meta['best_epoch']}), wrote {out}")


def _galton_eval(cfg: ExperimentConfig):
    ev = cfg.evaluation
    theta0 = float(ev.get("theta0", -0.8))
    theta1 = float(ev.get("theta1", -0.6))
    bins = np.asarray(ev.get("bins", np.arange(5, 16)), dtype=int)
    board = GaltonBoard(GaltonConfig(**cfg.simulator_params))
    reference = board.exact_log_ratio(theta0, theta1, bins=bins)
    x = bins.astype(float)[:, None]
    n = len(bins)
    return x, np.full((n, 1), theta0), np.full((n, 1), theta1), reference


def _lotka_eval(cfg: ExperimentConfig, reference_models):
    ev = cfg.evaluation
    x, theta0, theta1 = lotka_eval_points(
        n_x=int(ev.get("n_x", 500)), n_theta=int(ev.get("n_theta", 100)),
        base_seed=int(ev.get("seed", 0)),
        config=LotkaVolterraConfig(**cfg.simulator_params))
    if not reference_models:
        raise ConfigError(
            "no tractable oracle for the lotka simulator; pass --reference "
            "checkpoint(s) whose median prediction defines the target")
    preds = [predict_log_ratio(m, x, theta0, theta1) for m in reference_models]
    return x, theta0, theta1, np.median(np.stack(preds, axis=0), axis=0)


@main.command()
@click.argument("checkpoints", type=click.Path(), nargs=-1, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="report base path; .csv and .json are appended")
@click.option("--reference", "reference_paths", type=click.Path(), multiple=True,
              help="checkpoint(s) whose median prediction is the target "
                   "(required for lotka; galton defaults to the exact oracle)")
@click.option("--config", "config_path", type=click.Path(), default=None)
@goldmine_errors
def evaluate(checkpoints, out, reference_paths, config_path):
    """Score checkpoints against an oracle or ensemble reference."""
    cfg = _load_experiment(config_path)
    models = [_load_model(p) for p in checkpoints]
    simulators = {m.meta.get("simulator") for m in models}
    if len(simulators) != 1:
        raise ConfigError(f"checkpoints mix simulators: {sorted(simulators)}")
    simulator = simulators.pop()
    refs = [_load_model(p) for p in reference_paths]
    if simulator == "galton" and not refs:
        x, theta0, theta1, reference = _galton_eval(cfg)
    elif simulator == "lotka":
        x, theta0, theta1, reference = _lotka_eval(cfg, refs)
    else:
        preds_source = refs
        x, theta0, theta1, _ = _galton_eval(cfg)
        preds = [predict_log_ratio(m, x, theta0, theta1) for m in preds_source]
        reference = np.median(np.stack(preds, axis=0), axis=0)

    report = MseReport()
    for model in models:
        mse = mse_log_ratio(model, x, theta0, theta1, reference)
        report.add(model.method, model.meta.get("n_train", 0),
                   model.meta.get("seed", 0), mse)
    report.to_csv(f"{out}.csv")
    report.to_json(f"{out}.json")
    for row in sorted(report.rows, key=lambda r: (r["method"], r["n_train"], r["seed"])):
        click.echo(f"{row['method']:8s} n={row['n_train']:<7d} "
                   f"seed={row['seed']} mse={row['mse']:.6g}")


@main.command()
@click.option("--simulator", type=click.Choice(["galton", "lotka"]),
              default="galton", show_default=True)
@click.option("--theta0", type=float, required=True)
@click.option("--theta1", type=float, required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="optional CSV destination; the table always prints")
@click.option("--config", "config_path", type=click.Path(), default=None)
@goldmine_errors
def oracle(simulator, theta0, theta1, out, config_path):
    """Exact per-bin density and log-ratio table (galton only)."""
    if simulator != "galton":
        raise ConfigError(
            "exact likelihoods for the lotka simulator are intractable "
            "(latent trajectory space cannot be marginalized); "
            "the oracle table exists only for galton")
    cfg = _load_experiment(config_path)
    board = GaltonBoard(GaltonConfig(**cfg.simulator_params))
    p0 = board.exact_density(theta0)
    p1 = board.exact_density(theta1)
    logr = np.log(p0) - np.log(p1)
    lines = ["bin,p_theta0,p_theta1,log_ratio"]
    for b in range(len(p0)):
        lines.append(f"{b},{float(p0[b])!r},{float(p1[b])!r},{float(logr[b])!r}")
    table = "\n".join(lines) + "\n"
    click.echo(table, nl=False)
    if out:
        with open(out, "w") as f:
            f.write(table)


def _figure2_group(payload) -> list:
    """One ladder group: a dataset shared by every method at (size, seed)."""
    cfg = ExperimentConfig.from_dict(payload["config"])
    size = payload["size"]
    seed = payload["seed"]
    ds_seed = payload["dataset_seed"]
    if cfg.simulator == "galton":
        ds = make_galton_dataset(size, ds_seed,
                                 config=GaltonConfig(**cfg.simulator_params))
    else:
        ds = make_lotka_dataset(size, ds_seed,
                                config=LotkaVolterraConfig(**cfg.simulator_params))
    x = payload["x"]
    theta0 = payload["theta0"]
    theta1 = payload["theta1"]
    reference = payload["reference"]
    rows = []
    for name in cfg.methods:
        model = train(name, ds, alpha=cfg.alpha_for(name),
                      config=cfg.train_config(), seed=seed,
                      hidden=tuple(cfg.hidden) if cfg.hidden else None)
        mse = mse_log_ratio(model, x, theta0, theta1, reference)
        rows.append({"method": name, "n_train": size, "seed": seed, "mse": mse})
    return rows


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="ExperimentConfig JSON; defaults reproduce the galton ladder")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="report base path; .csv and .json are appended")
@goldmine_errors
def figure2(config_path, out):
    """Run the whole (method, size, seed) ladder and emit the MSE table."""
    cfg = _load_experiment(config_path)
    if cfg.simulator == "galton":
        x, theta0, theta1, reference = _galton_eval(cfg)
    else:
        ev = cfg.evaluation
        ref_method = ev.get("reference_method", "scandal")
        ref_members = int(ev.get("reference_members", 5))
        ref_size = int(ev.get("reference_size", max(cfg.sizes)))
        ref_ds = make_lotka_dataset(ref_size, cfg.base_seed + 999_983,
                                    config=LotkaVolterraConfig(**cfg.simulator_params))
        members = [train(ref_method, ref_ds, alpha=cfg.alpha_for(ref_method),
                         config=cfg.train_config(), seed=100 + k,
                         hidden=tuple(cfg.hidden) if cfg.hidden else None)
                   for k in range(ref_members)]
        x, theta0, theta1, reference = _lotka_eval(cfg, members)

    payloads = []
    for i, size in enumerate(cfg.sizes):
        for seed in range(cfg.seeds):
            payloads.append({"config": cfg.to_dict(), "size": size, "seed": seed,
                             "dataset_seed": cfg.dataset_seed(i, seed),
                             "x": x, "theta0": theta0, "theta1": theta1,
                             "reference": reference})

    try:
        threads = int(os.environ.get("GOLDMINE_THREADS", "1"))
    except ValueError:
        raise ConfigError("GOLDMINE_THREADS must be an integer")
    report = MseReport()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            groups = list(pool.map(_figure2_group, payloads))
    else:
        groups = [_figure2_group(p) for p in payloads]
    for rows in groups:
        for row in rows:
            report.add(row["method"], row["n_train"], row["seed"], row["mse"])
    report.to_csv(f"{out}.csv")
    report.to_json(f"{out}.json")
    for cell in report.medians():
        click.echo(f"{cell['method']:8s} n={cell['n_train']:<7d} "
                   f"median mse={cell['median']:.6g} over {cell['n_seeds']} seeds")


if __name__ == "__main__":
    main()
