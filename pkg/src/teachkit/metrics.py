"""Interpretability metrics: how close is a teaching strategy to the
human-intuitive one for each concept family?

Each task has a reference strategy (opposite corners, the two modes,
examples sharing exactly the required properties, leaf pairs whose lowest
common ancestor is the concept) and a scorer comparing a 2-example episode
against it. ``evaluate_policy`` rolls episodes for a policy and aggregates.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nets import rollout_prior, rollout_teach
from .tasks import TaskError
from .tasks import boolean as bool_mod
from .tasks import rectangle as rect_mod


def corner_distance(examples, concept) -> float:
    """Summed distance of the example pair to the nearest tuple of
    opposite rectangle corners (both diagonals, both orderings)."""
    e = np.asarray(examples, dtype=np.float64)
    if e.shape != (2, 2):
        raise TaskError(f"need two 2-D points, got {e.shape}")
    x0, y0, x1, y1 = np.asarray(concept, dtype=np.float64)
    diag1 = np.array([[x0, y0], [x1, y1]])
    diag2 = np.array([[x0, y1], [x1, y0]])
    best = np.inf
    for pair in (diag1, diag1[::-1], diag2, diag2[::-1]):
        d = np.linalg.norm(e - pair, axis=1).sum()
        best = min(best, d)
    return float(best)


def mode_distance(examples, concept) -> float:
    """L2 distance between the sorted example pair and the sorted modes."""
    e = np.sort(np.asarray(examples, dtype=np.float64).reshape(-1))
    c = np.sort(np.asarray(concept, dtype=np.float64).reshape(-1))
    if e.shape != c.shape:
        raise TaskError(f"example/concept shapes differ: {e.shape} vs {c.shape}")
    return float(np.linalg.norm(e - c))


def boolean_intuitive_match(e1, e2, concept) -> bool:
    """Do the two assignments share exactly the concept's properties?

    Both examples must be consistent with the concept; teaching with an
    off-concept example is a protocol violation, not a strategy mismatch.
    """
    a1 = np.asarray(e1, dtype=np.float64)
    a2 = np.asarray(e2, dtype=np.float64)
    c = np.asarray(concept, dtype=np.float64)
    for a in (a1, a2):
        if not bool_mod.consistent(a, c):
            raise TaskError("example inconsistent with the concept")
    return bool(np.array_equal(np.minimum(a1, a2), c))


def lca_match(e1: int, e2: int, concept_node: int, hierarchy) -> bool:
    """Is the lowest common ancestor of the two leaves the concept node?"""
    for e in (e1, e2):
        if hierarchy.children.get(e) is None:
            raise TaskError(f"unknown node {e}")
        if hierarchy.children[e]:
            raise TaskError(f"node {e} is not a leaf")
    return hierarchy.lca(e1, e2) == concept_node


# -- batched variants used by evaluate_policy ------------------------------


def corner_distance_batch(examples: np.ndarray, concepts: np.ndarray) -> np.ndarray:
    e = np.asarray(examples, dtype=np.float64)  # (B, 2, 2)
    c = np.asarray(concepts, dtype=np.float64)  # (B, 4)
    low = c[:, :2]
    high = c[:, 2:]
    mixed1 = np.stack([c[:, 0], c[:, 3]], axis=1)
    mixed2 = np.stack([c[:, 2], c[:, 1]], axis=1)
    options = []
    for s1, s2 in ((low, high), (high, low), (mixed1, mixed2), (mixed2, mixed1)):
        options.append(
            np.linalg.norm(e[:, 0] - s1, axis=1)
            + np.linalg.norm(e[:, 1] - s2, axis=1)
        )
    return np.min(options, axis=0)


def mode_distance_batch(examples: np.ndarray, concepts: np.ndarray) -> np.ndarray:
    e = np.sort(np.asarray(examples, dtype=np.float64).reshape(len(examples), -1), axis=1)
    c = np.sort(np.asarray(concepts, dtype=np.float64), axis=1)
    return np.linalg.norm(e - c, axis=1)


METRIC_NAMES = {
    "rectangle": "corner_distance",
    "bimodal": "mode_distance",
    "boolean": "intuitive_match",
    "hierarchy": "lca_match",
}

POLICIES = ("random", "teacher", "joint")


@dataclass
class StrategyReport:
    policy: str
    metric_name: str
    values: np.ndarray  # per-episode metric
    losses: np.ndarray  # per-episode final-guess task loss
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.losses = np.asarray(self.losses, dtype=np.float64)
        if self.values.shape != self.losses.shape or self.values.ndim != 1:
            raise TaskError("per-episode arrays must be 1-D and equal length")

    @property
    def n_episodes(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def std(self) -> float:
        return float(self.values.std())

    @property
    def match_rate(self):
        if self.metric_name.endswith("match"):
            return float(self.values.mean())
        return None

    def summary(self) -> dict:
        return {
            "policy": self.policy,
            "metric": self.metric_name,
            "mean": self.mean,
            "std": self.std,
            "match_rate": self.match_rate,
            "mean_loss": float(self.losses.mean()),
            "n": self.n_episodes,
            **{k: v for k, v in self.extras.items()},
        }


def _score_trace(task, concepts, trace):
    kind = task.spec.kind
    extras = {}
    if kind == "rectangle":
        values = corner_distance_batch(trace.examples, concepts)
        inside = rect_mod.contains(
            concepts[:, None, :], trace.examples
        )
        extras["containment"] = float(inside.mean())
    elif kind == "bimodal":
        values = mode_distance_batch(trace.examples, concepts)
    elif kind == "boolean":
        props = task.property_vectors[trace.candidate_indices]  # (B, 2, 10)
        shared = np.minimum(props[:, 0], props[:, 1])
        consistent = (props >= concepts[:, None, :]).all(axis=(1, 2))
        exact = (shared == concepts).all(axis=1)
        values = (consistent & exact).astype(np.float64)
        extras["consistency_rate"] = float(consistent.mean())
    elif kind == "hierarchy":
        h = task.hierarchy
        leaf_of = np.array(
            [h.candidate_leaf(i) for i in range(task.spec.n_candidates)]
        )
        leaves = leaf_of[trace.candidate_indices]  # (B, 2)
        nodes = concepts.argmax(axis=1)
        values = np.array(
            [
                float(h.lca(int(a), int(b)) == int(n))
                for (a, b), n in zip(leaves, nodes)
            ]
        )
    else:
        raise TaskError(f"no metric for task kind {kind!r}")
    return values, extras


def evaluate_policy(
    policy: str,
    task,
    n_episodes: int,
    rng: np.random.Generator,
    student=None,
    teacher=None,
    temperature: float = 0.5,
) -> StrategyReport:
    """Roll`n_episodes` 2-example episodes under a policy and score them.

    random  — examples from the task's own example prior p(e|c)
    teacher / joint — hard-selection eval rollouts of the given nets
    (the label records which training regime produced them).
    """
    if policy not in POLICIES:
        raise TaskError(f"unknown policy {policy!r}")
    if student is None:
        raise TaskError("a student net is required to score guesses")
    if policy in ("teacher", "joint") and teacher is None:
        raise TaskError(f"policy {policy!r} needs a trained teacher")
    concepts = task.sample_concepts(n_episodes, rng)
    if policy == "random":
        trace = rollout_prior(student, task, concepts, task.spec.k_teach, rng)
    else:
        trace = rollout_teach(
            teacher, student, task, concepts, task.spec.k_teach,
            "eval", rng, temperature,
        )
    values, extras = _score_trace(task, concepts, trace)
    return StrategyReport(
        policy=policy,
        metric_name=METRIC_NAMES[task.spec.kind],
        values=values,
        losses=trace.final_losses,
        extras=extras,
    )


def write_report(report: StrategyReport, out_dir, stem: str):
    """CSV of per-episode rows plus a JSON summary; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["episode", report.metric_name, "loss"])
        for i, (v, l) in enumerate(zip(report.values, report.losses)):
            w.writerow([i, repr(float(v)), repr(float(l))])
    json_path = out_dir / f"{stem}.json"
    with open(json_path, "w") as f:
        json.dump(report.summary(), f, indent=2, sort_keys=True)
        f.write("\n")
    return csv_path, json_path
