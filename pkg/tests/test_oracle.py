"""Tests for the recursive Bayesian teacher/student reference model."""

import csv

import numpy as np
import pytest

from teachkit.oracle import (
    DiscreteDomain,
    OracleError,
    boolean_domain,
    fixed_point,
    init_teacher,
    single_pass,
    student_update,
    teacher_update,
    write_state_csv,
)
from teachkit.tasks.boolean import BooleanTask


def ab_domain():
    """Two concepts sharing the middle example.

    A is consistent with {e1, e2}, B with {e2, e3}. With a uniform prior
    and alpha=1 the fixed-point teacher is (2/3, 1/3, 0) for A and the
    mirror image for B, a value small enough to verify by hand.
    """
    return DiscreteDomain(
        consistency=np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]),
        prior=np.array([0.5, 0.5]),
        concept_names=["A", "B"],
        example_names=["e1", "e2", "e3"],
    )


def random_domain(rng):
    """Random small domain with positive prior and coverable concepts."""
    n_c = int(rng.integers(2, 7))
    n_e = int(rng.integers(2, 9))
    m = (rng.uniform(size=(n_c, n_e)) < 0.5).astype(np.float64)
    for i in range(n_c):
        if m[i].sum() == 0:
            m[i, rng.integers(0, n_e)] = 1.0
    prior = rng.uniform(0.1, 1.0, size=n_c)
    return DiscreteDomain(consistency=m, prior=prior)


def test_init_teacher_is_uniform_over_consistent():
    t = init_teacher(ab_domain())
    np.testing.assert_allclose(t, [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])


def test_init_teacher_boolean_red_row():
    domain = boolean_domain(BooleanTask(property_counts=(1,)))
    assert domain.n_concepts == 10 and domain.n_examples == 36
    t = init_teacher(domain)
    red = domain.concept_names.index("color=red")
    row = t[red]
    assert (row[row > 0] == 1.0 / 12.0).all()
    assert (row > 0).sum() == 12


def test_domain_rejects_uncoverable_concept():
    with pytest.raises(OracleError, match="no consistent example"):
        DiscreteDomain(
            consistency=np.array([[1.0, 0.0], [0.0, 0.0]]),
            prior=np.array([0.5, 0.5]),
        )


def test_domain_rejects_bad_priors():
    m = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(OracleError):
        DiscreteDomain(consistency=m, prior=np.array([0.5, -0.1]))
    with pytest.raises(OracleError):
        DiscreteDomain(consistency=m, prior=np.array([0.2, 0.2, 0.6]))
    with pytest.raises(OracleError):
        DiscreteDomain(consistency=m, prior=np.array([0.0, 0.0]))


def test_domain_rejects_non_binary_table():
    with pytest.raises(OracleError, match="0/1"):
        DiscreteDomain(
            consistency=np.array([[0.5, 1.0]]), prior=np.array([1.0])
        )


def test_domain_normalizes_prior():
    d = DiscreteDomain(
        consistency=np.array([[1.0, 0.0], [0.0, 1.0]]),
        prior=np.array([3.0, 1.0]),
    )
    np.testing.assert_allclose(d.prior, [0.75, 0.25])


def test_student_update_applies_bayes_rule():
    d = ab_domain()
    s = student_update(init_teacher(d), d.prior)
    np.testing.assert_allclose(
        s, [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]], atol=1e-15
    )


def test_student_update_prior_scale_invariance():
    rng = np.random.default_rng(7)
    teacher = rng.uniform(size=(4, 6))
    teacher /= teacher.sum(axis=1, keepdims=True)
    prior = rng.uniform(0.1, 1.0, size=4)
    np.testing.assert_allclose(
        student_update(teacher, prior),
        student_update(teacher, 7.3 * prior),
        atol=1e-15,
    )


def test_teacher_update_alpha_zero_recovers_uniform():
    d = ab_domain()
    rng = np.random.default_rng(3)
    student = rng.uniform(size=(3, 2))
    student /= student.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(
        teacher_update(student, 0.0, d), init_teacher(d), atol=1e-15
    )


def test_teacher_update_rejects_negative_alpha():
    d = ab_domain()
    with pytest.raises(OracleError, match="alpha"):
        teacher_update(np.ones((3, 2)) / 2, -1.0, d)


def test_single_pass_matches_hand_computation():
    state = single_pass(ab_domain(), alpha=1.0)
    np.testing.assert_allclose(
        state.teacher,
        [[2 / 3, 1 / 3, 0.0], [0.0, 1 / 3, 2 / 3]],
        atol=1e-15,
    )
    assert state.iterations == 1


def test_large_alpha_concentrates_on_identifying_example():
    state = fixed_point(ab_domain(), alpha=50.0)
    assert state.teacher[0, 0] >= 0.999
    assert state.teacher[1, 2] >= 0.999


def test_fixed_point_ab_domain():
    state = fixed_point(ab_domain(), alpha=1.0, tol=1e-10)
    expected = np.array([[2 / 3, 1 / 3, 0.0], [0.0, 1 / 3, 2 / 3]])
    assert np.abs(state.teacher - expected).max() < 1e-8
    assert state.converged
    assert state.iterations <= 5


def test_fixed_point_prefers_unambiguous_examples():
    state = fixed_point(ab_domain(), alpha=1.0)
    # e1 identifies A uniquely; e2 is shared with B.
    assert state.teacher[0, 0] > state.teacher[0, 1]
    assert state.teacher[1, 2] > state.teacher[1, 1]


def test_fixed_point_reports_non_convergence():
    state = fixed_point(ab_domain(), alpha=1.0, max_iters=1, tol=0.0)
    assert not state.converged
    assert state.iterations == 1
    assert state.residual == pytest.approx(1 / 6)


def test_fixed_point_rejects_zero_iterations():
    with pytest.raises(OracleError, match="max_iters"):
        fixed_point(ab_domain(), alpha=1.0, max_iters=0)


def test_zero_prior_concept_yields_undefined_examples():
    d = DiscreteDomain(
        consistency=np.array([[1.0, 0.0], [0.0, 1.0]]),
        prior=np.array([1.0, 0.0]),
        concept_names=["A", "B"],
    )
    student = student_update(init_teacher(d), d.prior)
    assert (student[1] == 0).all()
    with pytest.raises(OracleError, match="'B'"):
        teacher_update(student, 1.0, d)


def test_boolean_one_property_fixed_point_is_uniform():
    # Every candidate image satisfies exactly one value per property
    # group, so each example supports the same mix of concept sizes and
    # the posterior denominator is constant across examples. The uniform
    # starting teacher is therefore already the fixed point.
    domain = boolean_domain(BooleanTask(property_counts=(1,)))
    state = fixed_point(domain, alpha=1.0)
    assert state.converged
    assert np.abs(state.teacher - init_teacher(domain)).max() < 1e-12
    assert (state.teacher[domain.consistency == 0] == 0).all()


def test_boolean_mixed_domain_converges_with_preserved_support():
    domain = boolean_domain(BooleanTask(property_counts=(1, 2, 3)))
    assert domain.n_concepts == 107
    state = fixed_point(domain, alpha=1.0)
    assert state.converged
    assert (state.teacher[domain.consistency == 0] == 0).all()
    np.testing.assert_allclose(state.teacher.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0, 5.0])
def test_random_domain_invariants(alpha):
    rng = np.random.default_rng(int(alpha * 10) + 11)
    for _ in range(40):
        d = random_domain(rng)
        state = fixed_point(d, alpha=alpha)
        assert (state.teacher >= 0).all() and (state.student >= 0).all()
        assert (state.teacher[d.consistency == 0] == 0).all()
        np.testing.assert_allclose(state.teacher.sum(axis=1), 1.0, atol=1e-12)
        row_mass = state.student.sum(axis=1)
        defined = ~state.undefined_examples
        np.testing.assert_allclose(row_mass[defined], 1.0, atol=1e-12)
        assert (row_mass[~defined] == 0).all()
        assert np.isfinite(state.residual)
        if state.converged:
            assert state.residual < 1e-12


def test_csv_export_names_rows_and_columns(tmp_path):
    d = ab_domain()
    state = fixed_point(d, alpha=1.0)
    teacher_path, student_path = write_state_csv(state, d, tmp_path, stem="ab")
    with open(teacher_path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["", "e1", "e2", "e3"]
    assert [r[0] for r in rows[1:]] == ["A", "B"]
    parsed = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    np.testing.assert_array_equal(parsed, state.teacher)
    with open(student_path) as f:
        srows = list(csv.reader(f))
    assert srows[0] == ["", "A", "B"]
    assert [r[0] for r in srows[1:]] == ["e1", "e2", "e3"]
