"""Recursive Bayesian teacher/student reference model on discrete domains.

Teacher and student are probability tables refined in alternation: the
student applies Bayes' rule to the teacher's example distribution, the
teacher re-weights consistent examples by the student's posterior raised
to a sharpness power alpha. Iterating from the uniform-over-consistent
teacher converges to the pedagogy fixed point; this module is the exact
small-domain reference the learned networks are compared against.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class OracleError(ValueError):
    pass


@dataclass
class DiscreteDomain:
    """Consistency table (concepts x examples) plus a concept prior.

    The prior may be handed in unnormalized; it is normalized here, which
    is also why scaling all weights leaves every posterior unchanged.
    """

    consistency: np.ndarray
    prior: np.ndarray
    concept_names: list = field(default_factory=list)
    example_names: list = field(default_factory=list)

    def __post_init__(self):
        m = np.asarray(self.consistency, dtype=np.float64)
        if m.ndim != 2 or not np.isin(m, (0.0, 1.0)).all():
            raise OracleError("consistency must be a 2-D 0/1 matrix")
        if (m.sum(axis=1) == 0).any():
            bad = int(np.flatnonzero(m.sum(axis=1) == 0)[0])
            raise OracleError(f"concept {bad} has no consistent example")
        p = np.asarray(self.prior, dtype=np.float64)
        if p.shape != (m.shape[0],) or (p < 0).any() or p.sum() <= 0:
            raise OracleError("prior must be nonnegative with positive mass")
        self.consistency = m
        self.prior = p / p.sum()
        if not self.concept_names:
            self.concept_names = [f"c{i}" for i in range(m.shape[0])]
        if not self.example_names:
            self.example_names = [f"e{j}" for j in range(m.shape[1])]

    @property
    def n_concepts(self) -> int:
        return self.consistency.shape[0]

    @property
    def n_examples(self) -> int:
        return self.consistency.shape[1]


@dataclass
class PedagogyState:
    teacher: np.ndarray  # (n_concepts, n_examples), rows sum to 1
    student: np.ndarray  # (n_examples, n_concepts), rows sum to 1 or all-zero
    alpha: float
    iterations: int
    residual: float
    converged: bool

    @property
    def undefined_examples(self) -> np.ndarray:
        """Examples no teacher row gives mass: student posterior undefined."""
        return self.student.sum(axis=1) == 0


def init_teacher(domain: DiscreteDomain) -> np.ndarray:
    """Uniform distribution over each concept's consistent examples."""
    m = domain.consistency
    return m / m.sum(axis=1, keepdims=True)


def student_update(teacher: np.ndarray, prior: np.ndarray) -> np.ndarray:
    """Bayes per example; evidence-free examples get an all-zero row."""
    weighted = teacher * np.asarray(prior, dtype=np.float64)[:, None]
    evidence = weighted.sum(axis=0)  # per example
    student = np.zeros((teacher.shape[1], teacher.shape[0]))
    defined = evidence > 0
    student[defined] = (weighted[:, defined] / evidence[defined]).T
    return student


def teacher_update(
    student: np.ndarray, alpha: float, domain: DiscreteDomain
) -> np.ndarray:
    """Alpha-sharpened student posterior, renormalized over consistent
    examples per concept. alpha=0 recovers uniform-over-consistent."""
    if alpha < 0:
        raise OracleError(f"alpha must be nonnegative, got {alpha}")
    scores = np.power(student.T, alpha) * domain.consistency
    normalizer = scores.sum(axis=1, keepdims=True)
    if (normalizer == 0).any():
        bad = int(np.flatnonzero(normalizer[:, 0] == 0)[0])
        raise OracleError(
            f"concept {domain.concept_names[bad]!r} has zero posterior mass "
            "on every consistent example"
        )
    return scores / normalizer


def single_pass(domain: DiscreteDomain, alpha: float) -> PedagogyState:
    """Exactly one student-then-teacher refinement from the uniform start."""
    t0 = init_teacher(domain)
    student = student_update(t0, domain.prior)
    teacher = teacher_update(student, alpha, domain)
    return PedagogyState(
        teacher=teacher,
        student=student,
        alpha=alpha,
        iterations=1,
        residual=float(np.abs(teacher - t0).max()),
        converged=False,
    )


def fixed_point(
    domain: DiscreteDomain,
    alpha: float,
    max_iters: int = 500,
    tol: float = 1e-12,
) -> PedagogyState:
    """Alternate updates until the teacher table stops moving.

    Non-convergence within the cap is reported on the returned state, not
    raised; the caller decides whether an approximate table is usable.
    """
    if max_iters < 1:
        raise OracleError("max_iters must be at least 1")
    teacher = init_teacher(domain)
    student = np.zeros((domain.n_examples, domain.n_concepts))
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        student = student_update(teacher, domain.prior)
        new_teacher = teacher_update(student, alpha, domain)
        residual = float(np.abs(new_teacher - teacher).max())
        teacher = new_teacher
        if residual < tol:
            break
    return PedagogyState(
        teacher=teacher,
        student=student,
        alpha=alpha,
        iterations=iterations,
        residual=residual,
        converged=residual < tol,
    )


def boolean_domain(task, prior=None) -> DiscreteDomain:
    """The task's concept/candidate consistency table as a domain."""
    m = task.consistency_matrix(task.concepts).T.astype(np.float64)
    names = [
        "+".join(
            _slot_names(concept)
        )
        for concept in task.concepts
    ]
    example_names = [
        "/".join(_slot_names(vec)) for vec in task.property_vectors
    ]
    if prior is None:
        prior = np.full(len(task.concepts), 1.0 / len(task.concepts))
    return DiscreteDomain(
        consistency=m,
        prior=prior,
        concept_names=names,
        example_names=example_names,
    )


def _slot_names(vector) -> list:
    from .tasks.boolean import value_name

    return [value_name(i) for i in np.flatnonzero(np.asarray(vector) == 1.0)]


def write_matrix_csv(path, matrix: np.ndarray, row_names, col_names):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([""] + list(col_names))
        for name, row in zip(row_names, matrix):
            w.writerow([name] + [repr(float(v)) for v in row])
    return path


def write_state_csv(state: PedagogyState, domain: DiscreteDomain, out_dir, stem="oracle"):
    out_dir = Path(out_dir)
    teacher_path = write_matrix_csv(
        out_dir / f"{stem}_teacher.csv",
        state.teacher,
        domain.concept_names,
        domain.example_names,
    )
    student_path = write_matrix_csv(
        out_dir / f"{stem}_student.csv",
        state.student,
        domain.example_names,
        domain.concept_names,
    )
    return teacher_path, student_path
