"""Axis-aligned rectangle concepts on [-10, 10]^2.

A concept is (min_x, min_y, max_x, max_y); the example prior is uniform
over the rectangle's interior. The student's loss is squared L2 on its
final guess only.
"""

from __future__ import annotations

import numpy as np

from .base import TaskError, TaskSpec

BOUND = 10.0

SPEC = TaskSpec(
    kind="rectangle",
    concept_dim=4,
    example_dim=2,
    k_pretrain=10,
    k_teach=2,
    loss_kind="squared_error",
    loss_placement="final_step",
)


class RectangleTask:
    spec = SPEC

    def sample_concepts(self, n: int, rng: np.random.Generator) -> np.ndarray:
        xs = np.sort(rng.uniform(-BOUND, BOUND, size=(n, 2)), axis=1)
        ys = np.sort(rng.uniform(-BOUND, BOUND, size=(n, 2)), axis=1)
        return np.column_stack([xs[:, 0], ys[:, 0], xs[:, 1], ys[:, 1]])

    def sample_concept(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_concepts(1, rng)[0]

    def prior_example_batch(
        self, concepts: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        check_concepts(concepts)
        u = rng.uniform(size=(concepts.shape[0], 2))
        x = concepts[:, 0] + u[:, 0] * (concepts[:, 2] - concepts[:, 0])
        y = concepts[:, 1] + u[:, 1] * (concepts[:, 3] - concepts[:, 1])
        return np.column_stack([x, y])

    def sample_prior_example(self, concept, rng) -> np.ndarray:
        return self.prior_example_batch(
            np.asarray(concept, dtype=np.float64)[None, :], rng
        )[0]


def check_concepts(concepts: np.ndarray):
    c = np.asarray(concepts)
    if c.ndim != 2 or c.shape[1] != 4:
        raise TaskError(f"rectangle concepts must be (n, 4), got {c.shape}")
    if (c[:, 0] > c[:, 2]).any() or (c[:, 1] > c[:, 3]).any():
        raise TaskError("rectangle concept has min > max")
    if (np.abs(c) > BOUND).any():
        raise TaskError(f"rectangle coordinates exceed [-{BOUND}, {BOUND}]")


def contains(concepts: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Row-wise: is each point inside its concept's rectangle?"""
    c = np.asarray(concepts, dtype=np.float64)
    p = np.asarray(points, dtype=np.float64)
    return (
        (p[..., 0] >= c[..., 0])
        & (p[..., 0] <= c[..., 2])
        & (p[..., 1] >= c[..., 1])
        & (p[..., 1] <= c[..., 3])
    )


def corners(concept: np.ndarray) -> np.ndarray:
    """The 4 corner points of one concept, shape (4, 2)."""
    x0, y0, x1, y1 = np.asarray(concept, dtype=np.float64)
    return np.array([[x0, y0], [x0, y1], [x1, y0], [x1, y1]])
