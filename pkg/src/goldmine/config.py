"""Experiment configuration: one JSON document drives a full ladder run.

An ExperimentConfig names the simulator, the methods to train, the
training sample-size ladder and how many seeds to run per point, plus
optional overrides for the optimizer and the evaluation read-out. The
invariants (strictly increasing sizes, at least one seed, known method
names) are checked on construction so a bad config fails before any
simulation time is spent.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .exceptions import ConfigError
from .methods.registry import get_method
from .methods.training import TrainConfig

SIMULATORS = ("galton", "lotka")


@dataclass
class ExperimentConfig:
    simulator: str = "galton"
    simulator_params: dict = field(default_factory=dict)
    methods: list = field(default_factory=lambda: [
        "carl", "cascal", "rolr", "rascal", "nde", "scandal"])
    alphas: dict = field(default_factory=dict)      # method -> penalty weight
    hidden: list | None = None                      # network width override
    sizes: list = field(default_factory=lambda: [1000, 10000, 100000])
    seeds: int = 5
    base_seed: int = 20000
    training: dict = field(default_factory=dict)    # TrainConfig overrides
    evaluation: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.simulator not in SIMULATORS:
            raise ConfigError(
                f"unknown simulator {self.simulator!r}, expected one of {SIMULATORS}")
        if not self.methods:
            raise ConfigError("methods list is empty")
        for name in self.methods:
            get_method(name)
        for name in self.alphas:
            get_method(name)
        if not self.sizes:
            raise ConfigError("sample-size ladder is empty")
        if any(n <= 0 for n in self.sizes):
            raise ConfigError("sample sizes must be positive")
        if any(b >= a for a, b in zip(self.sizes[1:], self.sizes)):
            raise ConfigError(
                f"sample-size ladder must be strictly increasing, got {self.sizes}")
        if self.seeds < 1:
            raise ConfigError("seeds per point must be at least 1")
        self.train_config()  # validates the override keys and values now

    def train_config(self) -> TrainConfig:
        known = TrainConfig.__dataclass_fields__
        bad = set(self.training) - set(known)
        if bad:
            raise ConfigError(f"unknown training override(s): {sorted(bad)}")
        return TrainConfig(**self.training)

    def alpha_for(self, method: str):
        return self.alphas.get(method)

    def dataset_seed(self, size_index: int, seed: int) -> int:
        """Deterministic per-cell dataset seed, distinct across the ladder."""
        return self.base_seed + 1000 * size_index + seed

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1, sort_keys=True)
            f.write("\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        bad = set(doc) - known
        if bad:
            raise ConfigError(f"unknown config field(s): {sorted(bad)}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as f:
                doc = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        return cls.from_dict(doc)
