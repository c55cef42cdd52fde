"""Experiment configuration: which regime to run, on which task, and where
results go.

The training hyperparameters live in the nested ``TrainConfig``; this level
adds the evaluation and reporting choices that training does not care about.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..training import TrainConfig

REGIMES = ("br", "joint", "random-baseline", "oracle")
DISCRETE_TASKS = ("boolean", "hierarchy")


class HarnessError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment: train (or not) under a regime, then evaluate.

    ``seed`` drives evaluation episode sampling; the training seed is the
    nested ``train.seed``. Keeping them separate lets one checkpoint be
    re-evaluated on fresh episodes without retraining.
    """

    regime: str
    train: TrainConfig = field(default_factory=lambda: TrainConfig("rectangle"))
    eval_episodes: int = 1000
    out_dir: str = "runs/experiment"
    seed: int = 0
    oracle_alpha: float = 1.0
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise HarnessError(
                f"unknown regime {self.regime!r}, expected one of {REGIMES}"
            )
        if self.eval_episodes < 1:
            raise HarnessError("eval_episodes must be positive")
        if self.regime == "oracle" and self.train.task_kind not in DISCRETE_TASKS:
            raise HarnessError(
                f"the oracle regime needs a discrete task, got "
                f"{self.train.task_kind!r}"
            )
        if self.oracle_alpha < 0:
            raise HarnessError("oracle_alpha must be nonnegative")

    @property
    def task_kind(self) -> str:
        return self.train.task_kind

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"] = self.train.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        train = d.pop("train", None)
        if not isinstance(train, dict):
            raise HarnessError("config needs a 'train' table")
        return cls(train=TrainConfig.from_dict(train), **d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as exc:
                raise HarnessError(f"bad config JSON in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise HarnessError(f"config root in {path} must be an object")
        try:
            return cls.from_dict(raw)
        except TypeError as exc:
            raise HarnessError(f"bad config field in {path}: {exc}") from exc

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path
