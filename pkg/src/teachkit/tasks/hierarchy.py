"""Tree-structured concepts with per-leaf example embeddings.

Each tree node is a concept, encoded one-hot by node index. Every leaf
carries exactly ``EMBEDDINGS_PER_LEAF`` example embeddings; an interior
node's examples are those of all its descendant leaves. Trees either come
from a manifest (real embedding files) or from the synthetic generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base import TaskError, TaskSpec

EMBEDDINGS_PER_LEAF = 10
MANIFEST_VERSION = "hier-v1"


@dataclass
class Hierarchy:
    names: list[str]
    parent: list  # parent index per node; None marks the root
    leaf_embeddings: dict  # leaf index -> (EMBEDDINGS_PER_LEAF, dim) float64
    children: dict = field(init=False)
    leaves: list = field(init=False)
    root: int = field(init=False)

    def __post_init__(self):
        n = len(self.names)
        if len(self.parent) != n:
            raise TaskError("names and parent lists disagree on node count")
        self.children = {i: [] for i in range(n)}
        roots = []
        for i, p in enumerate(self.parent):
            if p is None:
                roots.append(i)
            elif not (0 <= p < n) or p == i:
                raise TaskError(f"node {i} has invalid parent {p}")
            else:
                self.children[p].append(i)
        if len(roots) != 1:
            raise TaskError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]
        # reject cycles / unreachable nodes
        seen = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node in seen:
                raise TaskError(f"node {node} reachable twice (cycle?)")
            seen.add(node)
            stack.extend(self.children[node])
        if len(seen) != n:
            raise TaskError("tree has unreachable nodes")

        self.leaves = sorted(i for i in range(n) if not self.children[i])
        for i in range(n):
            if self.children[i] and len(self.children[i]) < 2:
                raise TaskError(
                    f"interior node {i} ({self.names[i]!r}) has a single child"
                )
        if set(self.leaf_embeddings) != set(self.leaves):
            raise TaskError(
                "embeddings must cover exactly the leaf nodes; "
                f"got {sorted(self.leaf_embeddings)}, leaves {self.leaves}"
            )
        dims = set()
        for leaf, emb in self.leaf_embeddings.items():
            emb = np.asarray(emb, dtype=np.float64)
            if emb.ndim != 2 or emb.shape[0] != EMBEDDINGS_PER_LEAF:
                raise TaskError(
                    f"leaf {leaf} needs {EMBEDDINGS_PER_LEAF} embeddings, "
                    f"got shape {emb.shape}"
                )
            self.leaf_embeddings[leaf] = emb
            dims.add(emb.shape[1])
        if len(dims) != 1:
            raise TaskError(f"embedding dimensions disagree: {sorted(dims)}")
        self.dim = dims.pop()

    @property
    def n_nodes(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise TaskError(f"unknown node name {name!r}")

    def _check_node(self, node: int):
        if not (0 <= node < self.n_nodes):
            raise TaskError(f"unknown node {node}")

    def ancestors(self, node: int) -> list:
        """node, its parent, ..., the root."""
        self._check_node(node)
        chain = [node]
        while self.parent[chain[-1]] is not None:
            chain.append(self.parent[chain[-1]])
        return chain

    def lca(self, a: int, b: int) -> int:
        """Deepest node that is an ancestor of (or equal to) both."""
        above_a = set(self.ancestors(a))
        for node in self.ancestors(b):
            if node in above_a:
                return node
        raise TaskError(f"nodes {a} and {b} share no ancestor")

    def descendant_leaves(self, node: int) -> list:
        self._check_node(node)
        out = []
        stack = [node]
        while stack:
            cur = stack.pop()
            kids = self.children[cur]
            if kids:
                stack.extend(kids)
            else:
                out.append(cur)
        return sorted(out)

    def depth(self, node: int) -> int:
        return len(self.ancestors(node)) - 1

    # -- candidate-set view (for teaching over all leaf examples) -------

    def candidates(self) -> np.ndarray:
        """All leaf embeddings stacked in leaf order, (10 * n_leaves, dim)."""
        return np.concatenate(
            [self.leaf_embeddings[leaf] for leaf in self.leaves], axis=0
        )

    def candidate_leaf(self, candidate_index: int) -> int:
        if not 0 <= candidate_index < EMBEDDINGS_PER_LEAF * len(self.leaves):
            raise TaskError(f"candidate index {candidate_index} out of range")
        return self.leaves[candidate_index // EMBEDDINGS_PER_LEAF]

    def consistent_mask(self, node: int) -> np.ndarray:
        wanted = set(self.descendant_leaves(node))
        return np.array(
            [leaf in wanted for leaf in self.leaves for _ in range(EMBEDDINGS_PER_LEAF)]
        )


class HierarchyTask:
    def __init__(self, hierarchy: Hierarchy):
        self.hierarchy = hierarchy
        self.spec = TaskSpec(
            kind="hierarchy",
            concept_dim=hierarchy.n_nodes,
            example_dim=hierarchy.dim,
            k_pretrain=5,
            k_teach=2,
            loss_kind="softmax_cross_entropy",
            loss_placement="summed",
            n_candidates=EMBEDDINGS_PER_LEAF * len(hierarchy.leaves),
        )
        self._masks = np.array(
            [hierarchy.consistent_mask(i) for i in range(hierarchy.n_nodes)]
        )

    def candidates(self) -> np.ndarray:
        return self.hierarchy.candidates()

    def sample_concepts(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.hierarchy.n_nodes, size=n)
        out = np.zeros((n, self.hierarchy.n_nodes))
        out[np.arange(n), idx] = 1.0
        return out

    def sample_concept(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_concepts(1, rng)[0]

    def node_of(self, concept) -> int:
        c = np.asarray(concept)
        hot = np.flatnonzero(c == 1.0)
        if c.shape != (self.hierarchy.n_nodes,) or hot.size != 1:
            raise TaskError("concept must be one-hot over tree nodes")
        return int(hot[0])

    def consistent_mask(self, concept) -> np.ndarray:
        return self._masks[self.node_of(concept)]

    def consistency_matrix(self, concepts: np.ndarray) -> np.ndarray:
        nodes = np.asarray(concepts).argmax(axis=1)
        return self._masks[nodes].T

    def sample_prior_indices(
        self, concepts: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        table = self.consistency_matrix(concepts).T
        counts = table.sum(axis=1)
        picks = (rng.uniform(size=table.shape[0]) * counts).astype(np.int64)
        order = np.argsort(~table, axis=1, kind="stable")
        return order[np.arange(table.shape[0]), picks]

    def prior_example_batch(
        self, concepts: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        return self.candidates()[self.sample_prior_indices(concepts, rng)]

    def sample_prior_example(self, concept, rng) -> np.ndarray:
        return self.prior_example_batch(
            np.asarray(concept, dtype=np.float64)[None, :], rng
        )[0]


def build_synthetic_hierarchy(
    depth: int, branching, embedding_dim: int, rng: np.random.Generator
) -> Hierarchy:
    """Generate a random tree whose leaf embeddings respect the topology.

    ``branching`` is a single factor or one factor per level below the
    root (so node counts like 16 = 1 + 3 + 3*4 are reachable). Each node's
    latent is its parent's plus a Gaussian step whose scale halves per
    level; leaf embeddings are noisy copies of the leaf latent, unit-
    normalized. Values are squeezed through float32 so that exporting to
    a manifest and reloading reproduces them exactly.
    """
    if depth < 2:
        raise TaskError("hierarchy depth must be at least 2")
    if isinstance(branching, int):
        factors = [branching] * (depth - 1)
    else:
        factors = [int(b) for b in branching]
        if len(factors) != depth - 1:
            raise TaskError(
                f"need {depth - 1} branching factors for depth {depth}, "
                f"got {len(factors)}"
            )
    if any(b < 2 for b in factors):
        raise TaskError("branching factors must be at least 2")

    names = ["root"]
    parents: list = [None]
    latents = [rng.standard_normal(embedding_dim)]
    level_nodes = [0]
    for level, factor in enumerate(factors):
        sigma = 0.5**level
        next_level = []
        for node in level_nodes:
            for j in range(factor):
                idx = len(names)
                names.append(f"{names[node]}/{j}")
                parents.append(node)
                latents.append(
                    latents[node] + sigma * rng.standard_normal(embedding_dim)
                )
                next_level.append(idx)
        level_nodes = next_level

    embeddings = {}
    for leaf in level_nodes:
        e = latents[leaf] + 0.1 * rng.standard_normal(
            (EMBEDDINGS_PER_LEAF, embedding_dim)
        )
        e /= np.linalg.norm(e, axis=1, keepdims=True)
        embeddings[leaf] = e.astype(np.float32).astype(np.float64)
    return Hierarchy(names=names, parent=parents, leaf_embeddings=embeddings)


def export_hierarchy(h: Hierarchy, directory, stem: str = "hierarchy") -> Path:
    """Write the manifest plus one raw float32 file per leaf."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    nodes = [
        {"id": i, "name": h.names[i], "parent": h.parent[i]}
        for i in range(h.n_nodes)
    ]
    leaves = []
    for leaf in h.leaves:
        fname = f"{stem}_leaf{leaf}.f32"
        arr = np.asarray(h.leaf_embeddings[leaf], dtype="<f4")
        (directory / fname).write_bytes(np.ascontiguousarray(arr).tobytes())
        leaves.append({"id": leaf, "embedding_file": fname})
    manifest = {"version": MANIFEST_VERSION, "nodes": nodes, "leaves": leaves}
    path = directory / f"{stem}.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_embedding_hierarchy(manifest_path) -> Hierarchy:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as f:
        manifest = json.load(f)
    if manifest.get("version") != MANIFEST_VERSION:
        raise TaskError(
            f"{manifest_path}: expected version {MANIFEST_VERSION!r}, "
            f"got {manifest.get('version')!r}"
        )
    entries = sorted(manifest["nodes"], key=lambda e: e["id"])
    if [e["id"] for e in entries] != list(range(len(entries))):
        raise TaskError(f"{manifest_path}: node ids must be 0..n-1")
    names = [e["name"] for e in entries]
    parents = [e["parent"] for e in entries]

    embeddings = {}
    dim = None
    for leaf_entry in manifest["leaves"]:
        path = manifest_path.parent / leaf_entry["embedding_file"]
        if not path.exists():
            raise TaskError(f"{path}: embedding file missing")
        raw = np.frombuffer(path.read_bytes(), dtype="<f4")
        if raw.size % EMBEDDINGS_PER_LEAF != 0 or raw.size == 0:
            raise TaskError(
                f"{path}: expected {EMBEDDINGS_PER_LEAF} x dim float32 values, "
                f"got {raw.size}"
            )
        this_dim = raw.size // EMBEDDINGS_PER_LEAF
        if dim is None:
            dim = this_dim
        elif this_dim != dim:
            raise TaskError(
                f"{path}: embedding dim {this_dim}, expected {dim}"
            )
        embeddings[leaf_entry["id"]] = (
            raw.astype(np.float64).reshape(EMBEDDINGS_PER_LEAF, this_dim)
        )
    return Hierarchy(names=names, parent=parents, leaf_embeddings=embeddings)
