"""Boolean concepts over rendered shape images.

Stimuli are full property assignments (one size, one color, one shape, one
border setting), rasterized to 25x25 RGB images. A concept constrains one
to three properties; an image is a positive example when it carries every
constrained value. Concepts and assignments both live in a 10-entry binary
encoding, one slot per property value:

    0-2  size    small / medium / large
    3-5  color   red / blue / green
    6-7  shape   square / circle
    8-9  border  solid / none
"""

from __future__ import annotations

import itertools

import numpy as np

from .base import TaskError, TaskSpec

GROUPS = (
    ("size", ("small", "medium", "large")),
    ("color", ("red", "blue", "green")),
    ("shape", ("square", "circle")),
    ("border", ("solid", "none")),
)
GROUP_OFFSETS = (0, 3, 6, 8)
DIM = 10

IMAGE_SIDE = 25
IMAGE_DIM = IMAGE_SIDE * IMAGE_SIDE * 3
_CENTER = IMAGE_SIDE // 2
_RADII = (4, 8, 11)  # small, medium, large
_FILLS = (
    np.array([1.0, 0.0, 0.0]),  # red
    np.array([0.0, 0.0, 1.0]),  # blue
    np.array([0.0, 1.0, 0.0]),  # green
)

SPEC = TaskSpec(
    kind="boolean",
    concept_dim=DIM,
    example_dim=IMAGE_DIM,
    k_pretrain=5,
    k_teach=2,
    loss_kind="squared_error",
    loss_placement="summed",
    n_candidates=36,
)


def value_name(slot: int) -> str:
    for (group, values), off in zip(GROUPS, GROUP_OFFSETS):
        if off <= slot < off + len(values):
            return f"{group}={values[slot - off]}"
    raise TaskError(f"slot {slot} out of range")


def assignment_vector(size: int, color: int, shape: int, border: int) -> np.ndarray:
    v = np.zeros(DIM)
    for off, idx, width in zip(
        GROUP_OFFSETS, (size, color, shape, border), (3, 3, 2, 2)
    ):
        if not 0 <= idx < width:
            raise TaskError(f"property index {idx} out of range")
        v[off + idx] = 1.0
    return v


def split_assignment(vector) -> tuple[int, int, int, int]:
    """Recover (size, color, shape, border) indices from a full assignment."""
    v = np.asarray(vector)
    if v.shape != (DIM,):
        raise TaskError(f"assignment must have {DIM} entries, got {v.shape}")
    out = []
    for (group, values), off in zip(GROUPS, GROUP_OFFSETS):
        block = v[off : off + len(values)]
        hot = np.flatnonzero(block == 1.0)
        if hot.size != 1 or not np.all((block == 0.0) | (block == 1.0)):
            raise TaskError(f"assignment must set exactly one {group} value")
        out.append(int(hot[0]))
    return tuple(out)


def render_image(size: int, color: int, shape: int, border: int) -> np.ndarray:
    """Rasterize one full assignment to a float image in [0, 1].

    White background; a pure-color filled square or disk centered on the
    canvas (half-side / radius 4, 8, or 11 px); a 1-px black outline when
    the border is solid.
    """
    if not (0 <= size < 3 and 0 <= color < 3 and 0 <= shape < 2 and 0 <= border < 2):
        raise TaskError("property index out of range")
    r = _RADII[size]
    img = np.ones((IMAGE_SIDE, IMAGE_SIDE, 3))
    ii, jj = np.mgrid[0:IMAGE_SIDE, 0:IMAGE_SIDE]
    di, dj = ii - _CENTER, jj - _CENTER
    if shape == 0:  # square
        mask = (np.abs(di) <= r) & (np.abs(dj) <= r)
        rim = mask & (np.maximum(np.abs(di), np.abs(dj)) == r)
    else:  # circle
        mask = di * di + dj * dj <= r * r
        inner = np.zeros_like(mask)
        inner[1:-1, 1:-1] = (
            mask[:-2, 1:-1] & mask[2:, 1:-1] & mask[1:-1, :-2] & mask[1:-1, 2:]
        )
        rim = mask & ~inner
    img[mask] = _FILLS[color]
    if border == 0:
        img[rim] = 0.0
    return img


def all_assignments() -> list[tuple[int, int, int, int]]:
    """The 36 full property assignments in a fixed enumeration order."""
    return list(itertools.product(range(3), range(3), range(2), range(2)))


def enumerate_concepts(property_counts=(1, 2, 3)) -> np.ndarray:
    """Every valid concept with its number of constrained properties in
    ``property_counts``, as rows of the 10-entry encoding."""
    counts = set(property_counts)
    if not counts or not counts <= {1, 2, 3}:
        raise TaskError(f"property counts must be within 1..3, got {property_counts}")
    rows = []
    for k in sorted(counts):
        for groups in itertools.combinations(range(4), k):
            widths = [len(GROUPS[g][1]) for g in groups]
            for choice in itertools.product(*(range(w) for w in widths)):
                v = np.zeros(DIM)
                for g, idx in zip(groups, choice):
                    v[GROUP_OFFSETS[g] + idx] = 1.0
                rows.append(v)
    return np.array(rows)


def consistent(assignment, concept) -> bool:
    """Does the full assignment carry every value the concept constrains?"""
    a = np.asarray(assignment, dtype=np.float64)
    c = np.asarray(concept, dtype=np.float64)
    if a.shape != (DIM,) or c.shape != (DIM,):
        raise TaskError("assignment and concept must have 10 entries")
    return bool(np.all(a >= c))


class BooleanTask:
    """Holds the fixed candidate set plus concept enumeration.

    ``property_counts`` restricts which concepts the sampler may draw,
    which is how the training curriculum narrows the concept space.
    """

    spec = SPEC

    def __init__(self, property_counts=(1, 2, 3)):
        self.assignments = all_assignments()
        self.property_vectors = np.array(
            [assignment_vector(*a) for a in self.assignments]
        )
        self.images = np.array(
            [render_image(*a).reshape(-1) for a in self.assignments]
        )
        self.concepts = enumerate_concepts(property_counts)
        self.property_counts = tuple(property_counts)
        self._by_count = {
            k: self.concepts[self.concepts.sum(axis=1) == k]
            for k in self.property_counts
        }

    def restricted(self, property_counts) -> "BooleanTask":
        return BooleanTask(property_counts)

    def candidates(self) -> np.ndarray:
        return self.images

    def sample_concepts(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Pick the number of constrained properties uniformly, then a
        uniform concept with that count. (Concepts constraining more
        properties are individually rarer; sampling the 107 concepts
        uniformly instead would skew episodes toward 3-property concepts.)
        """
        counts = rng.choice(self.property_counts, size=n)
        out = np.empty((n, DIM))
        for k in self.property_counts:
            rows = counts == k
            pool = self._by_count[k]
            out[rows] = pool[rng.integers(0, len(pool), size=int(rows.sum()))]
        return out

    def sample_concept(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_concepts(1, rng)[0]

    def consistent_mask(self, concept) -> np.ndarray:
        c = np.asarray(concept, dtype=np.float64)
        if c.shape != (DIM,):
            raise TaskError(f"concept must have {DIM} entries, got {c.shape}")
        return self.property_vectors @ c == c.sum()

    def consistency_matrix(self, concepts: np.ndarray) -> np.ndarray:
        """(36, n_concepts) boolean consistency table."""
        c = np.asarray(concepts, dtype=np.float64)
        return self.property_vectors @ c.T == c.sum(axis=1)[None, :]

    def sample_prior_indices(
        self, concepts: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """One uniform consistent candidate index per concept row."""
        table = self.consistency_matrix(concepts).T
        n = table.shape[0]
        counts = table.sum(axis=1)
        if (counts == 0).any():
            raise TaskError("concept admits no consistent candidate")
        picks = (rng.uniform(size=n) * counts).astype(np.int64)
        order = np.argsort(~table, axis=1, kind="stable")
        return order[np.arange(n), picks]

    def prior_example_batch(
        self, concepts: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        return self.images[self.sample_prior_indices(concepts, rng)]

    def sample_prior_example(self, concept, rng) -> np.ndarray:
        return self.prior_example_batch(
            np.asarray(concept, dtype=np.float64)[None, :], rng
        )[0]
