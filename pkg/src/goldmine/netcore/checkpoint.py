"""Checkpoints as a single JSON document: spec, weights, optimizer, metadata.

Weights serialize as a JSON array of floats; Python emits shortest
round-trip decimals, so save/load is numerically exact and identical
runs produce identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from ..exceptions import DataError
from .network import NetworkSpec
from .optim import AdamState

FORMAT = "goldmine-checkpoint-v1"


def save_checkpoint(path, spec: NetworkSpec, weights: np.ndarray,
                    optimizer: AdamState | None = None, meta: dict | None = None):
    doc = {
        "format": FORMAT,
        "spec": spec.to_dict(),
        "weights": [float(v) for v in weights],
        "optimizer": None if optimizer is None else {
            "m": [float(v) for v in optimizer.m],
            "v": [float(v) for v in optimizer.v],
            "t": optimizer.t,
            "beta1": optimizer.beta1, "beta2": optimizer.beta2, "eps": optimizer.eps,
        },
        "meta": meta or {},
    }
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")


def load_checkpoint(path) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not valid JSON: {e}") from e
    if doc.get("format") != FORMAT:
        raise DataError(f"{path}: not a {FORMAT} file")
    spec = NetworkSpec.from_dict(doc["spec"])
    weights = np.array(doc["weights"], dtype=float)
    if weights.size != spec.n_weights:
        raise DataError(f"{path}: weight count {weights.size} does not match spec")
    opt = None
    if doc.get("optimizer"):
        o = doc["optimizer"]
        opt = AdamState(m=np.array(o["m"]), v=np.array(o["v"]), t=o["t"],
                        beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"])
    return {"spec": spec, "weights": weights, "optimizer": opt, "meta": doc.get("meta", {})}
