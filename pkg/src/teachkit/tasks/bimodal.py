"""Two-mode Gaussian mixture concepts on [0, 20].

A concept is the sorted mode pair (mu1, mu2); examples are drawn from
0.5 N(mu1, 1) + 0.5 N(mu2, 1).
"""

from __future__ import annotations

import numpy as np

from .base import TaskError, TaskSpec

LOW, HIGH = 0.0, 20.0
SIGMA = 1.0

SPEC = TaskSpec(
    kind="bimodal",
    concept_dim=2,
    example_dim=1,
    k_pretrain=5,
    k_teach=2,
    loss_kind="squared_error",
    loss_placement="summed",
)


class BimodalTask:
    spec = SPEC

    def sample_concepts(self, n: int, rng: np.random.Generator) -> np.ndarray:
        c = np.sort(rng.uniform(LOW, HIGH, size=(n, 2)), axis=1)
        # ties have measure zero but would break the strict ordering
        while True:
            tied = c[:, 0] == c[:, 1]
            if not tied.any():
                return c
            c[tied] = np.sort(
                rng.uniform(LOW, HIGH, size=(int(tied.sum()), 2)), axis=1
            )

    def sample_concept(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_concepts(1, rng)[0]

    def prior_example_batch(
        self, concepts: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        check_concepts(concepts)
        n = concepts.shape[0]
        which = rng.integers(0, 2, size=n)
        mu = concepts[np.arange(n), which]
        return (mu + SIGMA * rng.standard_normal(n))[:, None]

    def sample_prior_example(self, concept, rng) -> np.ndarray:
        return self.prior_example_batch(
            np.asarray(concept, dtype=np.float64)[None, :], rng
        )[0]


def check_concepts(concepts: np.ndarray):
    c = np.asarray(concepts)
    if c.ndim != 2 or c.shape[1] != 2:
        raise TaskError(f"bimodal concepts must be (n, 2), got {c.shape}")
    if (c[:, 0] >= c[:, 1]).any():
        raise TaskError("bimodal concept needs mu1 < mu2")
    if (c < LOW).any() or (c > HIGH).any():
        raise TaskError(f"bimodal modes must lie in [{LOW}, {HIGH}]")
