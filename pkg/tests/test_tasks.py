import itertools

import numpy as np
import pytest

from teachkit.tasks import (
    BimodalTask,
    BooleanTask,
    Hierarchy,
    HierarchyTask,
    RectangleTask,
    TaskError,
    build_synthetic_hierarchy,
    export_hierarchy,
    load_embedding_hierarchy,
    loss,
    sample_example_prior,
)
from teachkit.tasks import boolean as bool_mod
from teachkit.tasks import rectangle as rect_mod


def ape_tree(rng=None, dim=8):
    """The classic ape taxonomy: root + 2 families + 5 species."""
    rng = rng or np.random.default_rng(0)
    names = [
        "ape", "great apes", "lesser apes",
        "orangutan", "chimpanzee", "gorilla", "gibbon", "siamang",
    ]
    parent = [None, 0, 0, 1, 1, 1, 2, 2]
    emb = {i: rng.standard_normal((10, dim)) for i in range(3, 8)}
    return Hierarchy(names=names, parent=parent, leaf_embeddings=emb)


# ------------------------------------------------------------- rectangle


def test_rectangle_samples_satisfy_invariants():
    rng = np.random.default_rng(1)
    c = RectangleTask().sample_concepts(1000, rng)
    assert (c[:, 0] <= c[:, 2]).all()
    assert (c[:, 1] <= c[:, 3]).all()
    assert (np.abs(c) <= 10).all()


def test_rectangle_prior_points_inside():
    rng = np.random.default_rng(2)
    task = RectangleTask()
    c = task.sample_concepts(500, rng)
    e = task.prior_example_batch(c, rng)
    assert rect_mod.contains(c, e).all()
    single = sample_example_prior([0.0, 0.0, 10.0, 10.0], task, rng)
    assert 0 <= single[0] <= 10 and 0 <= single[1] <= 10


def test_rectangle_rejects_inverted_bounds():
    with pytest.raises(TaskError):
        rect_mod.check_concepts(np.array([[5.0, 0.0, -5.0, 1.0]]))


# --------------------------------------------------------------- bimodal


def test_bimodal_mu1_mean_matches_order_statistic():
    # E[min of two uniforms on [0,20]] = 20/3
    rng = np.random.default_rng(3)
    c = BimodalTask().sample_concepts(10_000, rng)
    assert (c[:, 0] < c[:, 1]).all()
    assert abs(c[:, 0].mean() - 20 / 3) < 0.3


def test_bimodal_prior_mean_is_mixture_mean():
    rng = np.random.default_rng(4)
    task = BimodalTask()
    c = np.tile([4.0, 20.0], (10_000, 1))
    e = task.prior_example_batch(c, rng)
    assert abs(e.mean() - 12.0) < 0.2


# --------------------------------------------------------------- boolean


def test_candidate_set_has_36_distinct_images():
    task = BooleanTask()
    assert task.images.shape == (36, 25 * 25 * 3)
    assert task.images.min() >= 0.0 and task.images.max() <= 1.0
    for i, j in itertools.combinations(range(36), 2):
        assert not np.array_equal(task.images[i], task.images[j])


def test_render_is_deterministic_and_center_pixel_correct():
    a = bool_mod.render_image(2, 0, 0, 1)  # large red square, no border
    b = bool_mod.render_image(2, 0, 0, 1)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[12, 12], [1.0, 0.0, 0.0])
    corner = a[0, 0]
    np.testing.assert_array_equal(corner, [1.0, 1.0, 1.0])  # white bg


def test_render_border_draws_black_rim():
    solid = bool_mod.render_image(1, 2, 1, 0)  # medium green circle, border
    plain = bool_mod.render_image(1, 2, 1, 1)
    assert (solid == 0.0).any()
    assert not np.array_equal(solid, plain)
    # rim pixels sit on the disk boundary: radius 8 along the axes
    np.testing.assert_array_equal(solid[12, 12 + 8], [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(plain[12, 12 + 8], [0.0, 1.0, 0.0])


def test_concept_enumeration_matches_brute_force():
    # independent oracle: filter all 2^10 binary vectors by the invariants
    valid = []
    for bits in itertools.product([0.0, 1.0], repeat=10):
        v = np.array(bits)
        per_group = [
            v[off : off + len(values)].sum()
            for (_, values), off in zip(bool_mod.GROUPS, bool_mod.GROUP_OFFSETS)
        ]
        if all(s <= 1 for s in per_group) and 1 <= sum(per_group) <= 3:
            valid.append(v)
    concepts = bool_mod.enumerate_concepts()
    assert len(concepts) == len(valid) == 107
    have = {tuple(c) for c in concepts}
    assert have == {tuple(v) for v in valid}


def test_concept_sampler_never_sets_two_colors():
    rng = np.random.default_rng(5)
    c = BooleanTask().sample_concepts(2000, rng)
    assert (c[:, 3:6].sum(axis=1) <= 1).all()


def test_consistent_count_is_product_of_free_group_sizes():
    task = BooleanTask()
    widths = np.array([3, 3, 2, 2])
    for concept in task.concepts:
        constrained = np.array(
            [
                concept[off : off + w].sum() > 0
                for off, w in zip(bool_mod.GROUP_OFFSETS, widths)
            ]
        )
        expected = int(np.prod(widths[~constrained]))
        assert task.consistent_mask(concept).sum() == expected


def test_red_concept_has_12_consistent_candidates():
    task = BooleanTask()
    red = np.zeros(10)
    red[3] = 1.0
    assert task.consistent_mask(red).sum() == 12


def test_consistency_examples():
    red = np.zeros(10)
    red[3] = 1.0
    small_red_circle_border = bool_mod.assignment_vector(0, 0, 1, 0)
    assert bool_mod.consistent(small_red_circle_border, red)
    red_circle = red.copy()
    red_circle[7] = 1.0
    red_square = bool_mod.assignment_vector(1, 0, 0, 0)
    assert not bool_mod.consistent(red_square, red_circle)


def test_prior_examples_are_always_consistent():
    rng = np.random.default_rng(6)
    task = BooleanTask()
    c = task.sample_concepts(500, rng)
    idx = task.sample_prior_indices(c, rng)
    for row, i in zip(c, idx):
        assert bool_mod.consistent(task.property_vectors[i], row)


def test_prior_indices_are_uniform_over_consistent():
    rng = np.random.default_rng(7)
    task = BooleanTask()
    red = np.zeros(10)
    red[3] = 1.0
    idx = task.sample_prior_indices(np.tile(red, (12_000, 1)), rng)
    counts = np.bincount(idx, minlength=36)
    support = task.consistent_mask(red)
    assert (counts[~support] == 0).all()
    assert counts[support].min() > 12_000 / 12 * 0.7


def test_curriculum_restriction():
    task = BooleanTask(property_counts=(3,))
    assert (task.concepts.sum(axis=1) == 3).all()
    assert len(task.concepts) == 60
    assert len(BooleanTask(property_counts=(2,)).concepts) == 37
    assert len(BooleanTask(property_counts=(1,)).concepts) == 10


# ------------------------------------------------------------------ loss


def test_loss_examples():
    task = BimodalTask()
    assert loss([4.0, 8.0], [4.0, 8.0], task) == 0.0
    assert loss([4.0, 8.0], [4.0, 9.0], task) == pytest.approx(1.0)
    h = HierarchyTask(ape_tree())
    n = h.spec.concept_dim
    concept = np.zeros(n)
    concept[2] = 1.0
    assert loss(concept, np.zeros(n), h) == pytest.approx(np.log(n))
    with pytest.raises(TaskError):
        loss([1.0, 2.0, 3.0], [1.0, 2.0], task)


# ------------------------------------------------------------- hierarchy


def test_ape_tree_lca():
    h = ape_tree()
    orangutan, siamang, gibbon = h.index_of("orangutan"), h.index_of("siamang"), h.index_of("gibbon")
    assert h.lca(orangutan, siamang) == h.index_of("ape")
    assert h.lca(siamang, gibbon) == h.index_of("lesser apes")
    assert h.lca(siamang, siamang) == siamang
    with pytest.raises(TaskError):
        h.lca(0, 99)


def test_interior_examples_are_union_of_children():
    h = ape_tree()
    for node in range(h.n_nodes):
        kids = h.children[node]
        if not kids:
            continue
        mask = h.consistent_mask(node)
        union = np.zeros_like(mask)
        for kid in kids:
            union |= h.consistent_mask(kid)
        np.testing.assert_array_equal(mask, union)


def test_single_child_interior_rejected():
    with pytest.raises(TaskError, match="single child"):
        Hierarchy(
            names=["r", "a", "b", "c"],
            parent=[None, 0, 0, 1],
            leaf_embeddings={
                2: np.zeros((10, 4)),
                3: np.zeros((10, 4)),
            },
        )


def test_synthetic_counts():
    rng = np.random.default_rng(8)
    h = build_synthetic_hierarchy(2, 4, 16, rng)
    assert h.n_nodes == 5
    assert sum(e.shape[0] for e in h.leaf_embeddings.values()) == 40
    h16 = build_synthetic_hierarchy(3, (3, 4), 16, rng)
    assert h16.n_nodes == 16
    assert len(h16.leaves) == 12
    norms = np.linalg.norm(h16.candidates(), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-6)


def test_synthetic_topology_shows_in_embedding_space():
    # sibling-leaf centroids should usually be closer than cross-subtree
    rng = np.random.default_rng(9)
    closer = 0
    total = 0
    for _ in range(20):
        h = build_synthetic_hierarchy(3, 3, 24, rng)
        cents = {
            leaf: h.leaf_embeddings[leaf].mean(axis=0) for leaf in h.leaves
        }
        for a, b in itertools.combinations(h.leaves, 2):
            if h.parent[a] != h.parent[b]:
                continue
            for c in h.leaves:
                if h.lca(a, c) == h.root and h.lca(b, c) == h.root:
                    total += 1
                    near = np.linalg.norm(cents[a] - cents[b])
                    far = np.linalg.norm(cents[a] - cents[c])
                    if near < far:
                        closer += 1
    assert total > 100
    assert closer / total >= 0.95


def test_manifest_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    h = build_synthetic_hierarchy(3, (3, 4), 8, rng)
    path = export_hierarchy(h, tmp_path, stem="t16")
    back = load_embedding_hierarchy(path)
    assert back.names == h.names
    assert back.parent == h.parent
    for leaf in h.leaves:
        np.testing.assert_array_equal(
            back.leaf_embeddings[leaf], h.leaf_embeddings[leaf]
        )


def test_felines_sized_manifest_loads(tmp_path):
    rng = np.random.default_rng(11)
    h = build_synthetic_hierarchy(3, 7, 8, rng)  # 1 + 7 + 49 = 57
    assert h.n_nodes == 57
    path = export_hierarchy(h, tmp_path, stem="t57")
    assert load_embedding_hierarchy(path).n_nodes == 57


def test_manifest_rejects_wrong_embedding_count(tmp_path):
    rng = np.random.default_rng(12)
    h = build_synthetic_hierarchy(2, 2, 4, rng)
    path = export_hierarchy(h, tmp_path)
    first_leaf = h.leaves[0]
    bad = tmp_path / f"hierarchy_leaf{first_leaf}.f32"
    data = np.frombuffer(bad.read_bytes(), dtype="<f4")
    bad.write_bytes(data[: 9 * 4].tobytes())  # 9 embeddings instead of 10
    with pytest.raises(TaskError, match="expected 10"):
        load_embedding_hierarchy(path)


def test_manifest_rejects_missing_file_and_dim_mismatch(tmp_path):
    rng = np.random.default_rng(13)
    h = build_synthetic_hierarchy(2, 2, 4, rng)
    path = export_hierarchy(h, tmp_path)
    leaf0, leaf1 = h.leaves
    f1 = tmp_path / f"hierarchy_leaf{leaf1}.f32"
    f1.write_bytes(np.zeros(10 * 6, dtype="<f4").tobytes())
    with pytest.raises(TaskError, match="dim"):
        load_embedding_hierarchy(path)
    (tmp_path / f"hierarchy_leaf{leaf0}.f32").unlink()
    with pytest.raises(TaskError, match="missing"):
        load_embedding_hierarchy(path)


def test_manifest_rejects_unknown_version(tmp_path):
    rng = np.random.default_rng(14)
    h = build_synthetic_hierarchy(2, 2, 4, rng)
    path = export_hierarchy(h, tmp_path)
    text = path.read_text().replace("hier-v1", "hier-v0")
    path.write_text(text)
    with pytest.raises(TaskError, match="version"):
        load_embedding_hierarchy(path)


def test_hierarchy_task_sampling_and_prior():
    rng = np.random.default_rng(15)
    task = HierarchyTask(ape_tree())
    c = task.sample_concepts(300, rng)
    assert (c.sum(axis=1) == 1).all()
    idx = task.sample_prior_indices(c, rng)
    h = task.hierarchy
    for row, i in zip(c, idx):
        node = int(row.argmax())
        assert h.candidate_leaf(int(i)) in h.descendant_leaves(node)
