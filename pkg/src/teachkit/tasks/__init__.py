"""Concept families: priors, example distributions, losses, rendering."""

from __future__ import annotations

import numpy as np

from .base import TaskError, TaskSpec
from .bimodal import BimodalTask
from .boolean import BooleanTask
from .hierarchy import (
    Hierarchy,
    HierarchyTask,
    build_synthetic_hierarchy,
    export_hierarchy,
    load_embedding_hierarchy,
)
from .rectangle import RectangleTask

__all__ = [
    "TaskError",
    "TaskSpec",
    "RectangleTask",
    "BimodalTask",
    "BooleanTask",
    "Hierarchy",
    "HierarchyTask",
    "build_synthetic_hierarchy",
    "export_hierarchy",
    "load_embedding_hierarchy",
    "make_task",
    "sample_concept",
    "sample_example_prior",
    "loss",
]


def make_task(kind: str, **kwargs):
    if kind == "rectangle":
        return RectangleTask()
    if kind == "bimodal":
        return BimodalTask()
    if kind == "boolean":
        return BooleanTask(**kwargs)
    if kind == "hierarchy":
        return HierarchyTask(**kwargs)
    raise TaskError(f"unknown task kind {kind!r}")


def sample_concept(task, rng: np.random.Generator) -> np.ndarray:
    return task.sample_concept(rng)


def sample_example_prior(concept, task, rng: np.random.Generator) -> np.ndarray:
    return task.sample_prior_example(concept, rng)


def loss(concept, guess, task) -> float:
    """Per-episode concept loss: squared L2, or cross-entropy vs logits."""
    c = np.asarray(concept, dtype=np.float64)
    g = np.asarray(guess, dtype=np.float64)
    if c.shape != (task.spec.concept_dim,) or g.shape != c.shape:
        raise TaskError(
            f"loss needs two {task.spec.concept_dim}-dim vectors, "
            f"got {c.shape} and {g.shape}"
        )
    if task.spec.loss_kind == "squared_error":
        d = c - g
        return float(d @ d)
    mx = g.max()
    lse = float(np.log(np.exp(g - mx).sum()) + mx)
    return lse - float(g @ c)
