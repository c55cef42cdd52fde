"""Optimization loops for the teaching game.

Two regimes over the same episode graphs:

- best response: pretrain the student on prior-sampled examples, then
  train the teacher against the frozen student; optionally alternate
  further (student vs frozen teacher, teacher vs frozen student) fits.
- joint: simultaneous Adam steps on both networks from a shared episode
  loss each iteration.

Each phase builds one static graph and rebinds fresh batches every
iteration. All randomness flows through one generator in a fixed order,
so a config's seed pins checkpoints bitwise.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import ParamStore, adam_step, clip_global_norm
from .autodiff.checkpoint import load_store, save_store
from .nets import (
    HIDDEN,
    StudentNet,
    TeacherNet,
    build_prior_graph,
    build_teach_graph,
    init_student,
    init_teacher,
)
from .tasks import (
    BooleanTask,
    HierarchyTask,
    TaskError,
    build_synthetic_hierarchy,
    load_embedding_hierarchy,
    make_task,
)


class TrainingError(RuntimeError):
    """Raised when a training loop hits a non-finite loss."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass
class TrainConfig:
    """Everything a training run needs, JSON-serializable.

    ``task_params`` feeds the task constructor: boolean accepts
    ``property_counts``; hierarchy accepts either ``manifest`` (a path)
    or ``synthetic`` ({depth, branching, embedding_dim, seed}).
    """

    task_kind: str
    task_params: dict = field(default_factory=dict)
    batch_size: int = 128
    pretrain_iters: int = 5000
    br_iters: int = 5000
    joint_iters: int = 10000
    learning_rate: float = 1e-3
    final_learning_rate: float | None = None  # None keeps the rate constant
    teacher_learning_rate: float | None = None  # None mirrors learning_rate
    teacher_final_learning_rate: float | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    clip_norm: float = 5.0
    temperature_start: float = 1.0
    temperature_end: float = 0.5
    curriculum_stages: tuple = ()
    extra_br_rounds: int = 0
    loss_placement: str | None = None  # None keeps the task's default
    hidden: int = HIDDEN
    seed: int = 0

    def __post_init__(self):
        self.curriculum_stages = tuple(self.curriculum_stages)
        for name in ("pretrain_iters", "br_iters", "joint_iters"):
            if getattr(self, name) <= 0:
                raise TaskError(f"{name} must be positive")
        if self.batch_size <= 0:
            raise TaskError("batch_size must be positive")
        if self.loss_placement not in (None, "final_step", "summed"):
            raise TaskError(
                f"loss_placement must be 'final_step' or 'summed', "
                f"got {self.loss_placement!r}"
            )
        if self.extra_br_rounds < 0:
            raise TaskError("extra_br_rounds must be nonnegative")
        if self.temperature_start <= 0 or self.temperature_end <= 0:
            raise TaskError("temperatures must be positive")
        if self.curriculum_stages and self.task_kind != "boolean":
            raise TaskError("curriculum stages only apply to the boolean task")

    def build_task(self):
        if self.task_kind == "hierarchy":
            params = dict(self.task_params)
            if "manifest" in params:
                tree = load_embedding_hierarchy(params["manifest"])
            elif "synthetic" in params:
                syn = dict(params["synthetic"])
                tree = build_synthetic_hierarchy(
                    depth=syn["depth"],
                    branching=syn["branching"],
                    embedding_dim=syn["embedding_dim"],
                    rng=np.random.default_rng(syn.get("seed", 0)),
                )
            else:
                raise TaskError(
                    "hierarchy task_params need 'manifest' or 'synthetic'"
                )
            task = HierarchyTask(tree)
        else:
            task = make_task(self.task_kind, **self.task_params)
        if self.loss_placement is not None:
            task.spec = dataclasses.replace(
                task.spec, loss_placement=self.loss_placement
            )
        return task

    def to_dict(self) -> dict:
        d = asdict(self)
        d["curriculum_stages"] = list(self.curriculum_stages)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class TrainedPair:
    student: StudentNet
    teacher: TeacherNet
    mode: str  # "best-response" | "joint"
    histories: dict = field(default_factory=dict)


def _anneal(start: float, end: float, iteration: int, total: int) -> float:
    if total <= 1:
        return end
    frac = iteration / (total - 1)
    return start + frac * (end - start)


def _temperature(config: TrainConfig, iteration: int, total: int) -> float:
    return _anneal(
        config.temperature_start, config.temperature_end, iteration, total
    )


def _learning_rate(
    config: TrainConfig, iteration: int, total: int, side: str = "student"
) -> float:
    """Annealed step size; the teacher side falls back to the student's
    rates when its own are unset."""
    start, end = config.learning_rate, config.final_learning_rate
    if side == "teacher":
        if config.teacher_learning_rate is not None:
            start = config.teacher_learning_rate
        if config.teacher_final_learning_rate is not None:
            end = config.teacher_final_learning_rate
        elif config.teacher_learning_rate is not None and end is not None:
            # keep the configured decay ratio when only the start moved
            end = start * (config.final_learning_rate / config.learning_rate)
    if end is None:
        return start
    return _anneal(start, end, iteration, total)


def _guard(loss: float, iteration: int, phase: str) -> float:
    if not np.isfinite(loss):
        raise TrainingError(
            f"{phase} loss became non-finite at iteration {iteration}",
            iteration,
        )
    return loss


def _apply(store: ParamStore, grads: dict, config: TrainConfig, lr: float):
    clip_global_norm(grads, config.clip_norm)
    adam_step(store, grads, lr, config.adam_beta1, config.adam_beta2)


def _stage_plan(config: TrainConfig, task, total_iters: int) -> list:
    """(concept-sampling task, iterations) pairs; one entry when no
    curriculum. Stages restrict only sampling, the candidate set and the
    episode graph stay fixed."""
    if not config.curriculum_stages:
        return [(task, total_iters)]
    share = total_iters // len(config.curriculum_stages)
    plan = []
    for i, count in enumerate(config.curriculum_stages):
        n = share if i < len(config.curriculum_stages) - 1 else (
            total_iters - share * (len(config.curriculum_stages) - 1)
        )
        plan.append((task.restricted((count,)), n))
    return plan


def _bind_prior_examples(bindings, pg, task, concepts, rng):
    if pg.discrete:
        eye = np.eye(task.spec.n_candidates)
        for name in pg.example_leaves:
            bindings[name] = eye[task.sample_prior_indices(concepts, rng)]
    else:
        for name in pg.example_leaves:
            bindings[name] = task.prior_example_batch(concepts, rng)


def train_student_on_prior(
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    task=None,
    student: StudentNet | None = None,
    iters: int | None = None,
    sampler_task=None,
):
    """Fit the student to prior-sampled episodes; returns (student, history).

    ``sampler_task`` optionally overrides concept sampling (curriculum
    stages) while the episode graph keeps the full task's candidates.
    """
    task = task if task is not None else config.build_task()
    sampler = sampler_task if sampler_task is not None else task
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if student is None:
        student = init_student(task, ParamStore(), rng, hidden=config.hidden)
    iters = iters if iters is not None else config.pretrain_iters
    pg = build_prior_graph(
        student, task, task.spec.k_pretrain, config.batch_size
    )
    history = []
    for it in range(iters):
        concepts = sampler.sample_concepts(config.batch_size, rng)
        bindings = student.store.bindings()
        bindings["concept"] = concepts
        _bind_prior_examples(bindings, pg, task, concepts, rng)
        values = pg.graph.forward(bindings)
        history.append(_guard(float(values[pg.loss_node]), it, "student-prior"))
        grads = pg.graph.backward(values, pg.loss_node)
        _apply(student.store, grads, config, _learning_rate(config, it, iters))
    return student, history


def _train_one_side(
    trainee_store: ParamStore,
    tg,
    task,
    sampler_stages: list,
    config: TrainConfig,
    rng: np.random.Generator,
    all_bindings,
    phase: str,
    total_iters: int,
    second_store: ParamStore | None = None,
):
    """Shared teach-graph loop; updates one store, or two when joint."""
    history = []
    it = 0
    for sampler, stage_iters in sampler_stages:
        for _ in range(stage_iters):
            concepts = sampler.sample_concepts(config.batch_size, rng)
            bindings = all_bindings()
            bindings["concept"] = concepts
            if tg.discrete:
                bindings["tau"] = np.array(
                    [_temperature(config, it, total_iters)]
                )
                for name in tg.noise_leaves:
                    bindings[name] = rng.gumbel(
                        size=(config.batch_size, task.spec.n_candidates)
                    )
            values = tg.graph.forward(bindings)
            history.append(_guard(float(values[tg.loss_node]), it, phase))
            grads = tg.graph.backward(values, tg.loss_node)
            side = "teacher" if phase == "teacher-br" else "student"
            lr = _learning_rate(config, it, total_iters, side)
            if second_store is None:
                _apply(trainee_store, grads, config, lr)
            else:
                # joint: one clip over the combined gradient, then each
                # net steps at its own side's rate
                clip_global_norm(grads, config.clip_norm)
                first = {
                    k: v for k, v in grads.items()
                    if k in trainee_store.params
                }
                second = {
                    k: v for k, v in grads.items()
                    if k in second_store.params
                }
                adam_step(
                    trainee_store, first, lr,
                    config.adam_beta1, config.adam_beta2,
                )
                adam_step(
                    second_store, second,
                    _learning_rate(config, it, total_iters, "teacher"),
                    config.adam_beta1, config.adam_beta2,
                )
            it += 1
    return history


def train_teacher_best_response(
    student: StudentNet,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    task=None,
    teacher: TeacherNet | None = None,
    iters: int | None = None,
):
    """Fit the teacher against a frozen student; returns (teacher, history).

    The student's parameters are bound as non-differentiable leaves, so
    no gradient with respect to them is ever formed, let alone applied.
    """
    task = task if task is not None else config.build_task()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if teacher is None:
        teacher = init_teacher(task, ParamStore(), rng, hidden=config.hidden)
    iters = iters if iters is not None else config.br_iters
    tg = build_teach_graph(
        student, teacher, task, task.spec.k_teach, config.batch_size,
        mode="train", student_diff=False, teacher_diff=True,
    )
    history = _train_one_side(
        teacher.store,
        tg,
        task,
        [(task, iters)],
        config,
        rng,
        lambda: {**student.store.bindings(), **teacher.store.bindings()},
        "teacher-br",
        iters,
    )
    return teacher, history


def train_student_best_response(
    teacher: TeacherNet,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    task=None,
    student: StudentNet | None = None,
    iters: int | None = None,
):
    """Fit the student against a frozen teacher (extra alternation rounds).

    Uses hard candidate lookups: the teacher is not being differentiated,
    so the student can train on the same one-hot inputs it will see at
    evaluation time.
    """
    task = task if task is not None else config.build_task()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if student is None:
        student = init_student(task, ParamStore(), rng, hidden=config.hidden)
    iters = iters if iters is not None else config.pretrain_iters
    tg = build_teach_graph(
        student, teacher, task, task.spec.k_teach, config.batch_size,
        mode="eval", student_diff=True, teacher_diff=False,
    )
    history = _train_one_side(
        student.store,
        tg,
        task,
        [(task, iters)],
        config,
        rng,
        lambda: {**student.store.bindings(), **teacher.store.bindings()},
        "student-br",
        iters,
    )
    return student, history


def run_curriculum(
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    task=None,
    student: StudentNet | None = None,
):
    """Stage the student's prior pretraining over shrinking property
    counts (most-specific concepts first); returns (student, history)."""
    task = task if task is not None else config.build_task()
    if not isinstance(task, BooleanTask):
        raise TaskError("curriculum pretraining requires the boolean task")
    stages = config.curriculum_stages or (3, 2, 1)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if student is None:
        student = init_student(task, ParamStore(), rng, hidden=config.hidden)
    share = config.pretrain_iters // len(stages)
    history = []
    for i, count in enumerate(stages):
        n = share if i < len(stages) - 1 else (
            config.pretrain_iters - share * (len(stages) - 1)
        )
        _, h = train_student_on_prior(
            config,
            rng,
            task=task,
            student=student,
            iters=n,
            sampler_task=task.restricted((count,)),
        )
        history.extend(h)
    return student, history


def train_best_response(
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    task=None,
) -> TrainedPair:
    """Full two-phase procedure, plus any configured extra alternations."""
    task = task if task is not None else config.build_task()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if isinstance(task, BooleanTask) and config.curriculum_stages:
        student, s_hist = run_curriculum(config, rng, task=task)
    else:
        student, s_hist = train_student_on_prior(config, rng, task=task)
    teacher, t_hist = train_teacher_best_response(student, config, rng, task=task)
    histories = {"student_prior": s_hist, "teacher_br": t_hist}
    for round_index in range(1, config.extra_br_rounds + 1):
        student, h = train_student_best_response(
            teacher, config, rng, task=task, student=student
        )
        histories[f"student_br_round{round_index}"] = h
        teacher, h = train_teacher_best_response(
            student, config, rng, task=task, teacher=teacher
        )
        histories[f"teacher_br_round{round_index}"] = h
    return TrainedPair(
        student=student, teacher=teacher, mode="best-response",
        histories=histories,
    )


def train_joint(
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    task=None,
) -> TrainedPair:
    """Simultaneous student and teacher updates from shared episode
    losses, over the teaching horizon."""
    task = task if task is not None else config.build_task()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    student = init_student(task, ParamStore(), rng, hidden=config.hidden)
    teacher = init_teacher(task, ParamStore(), rng, hidden=config.hidden)
    tg = build_teach_graph(
        student, teacher, task, task.spec.k_teach, config.batch_size,
        mode="train", student_diff=True, teacher_diff=True,
    )
    history = _train_one_side(
        student.store,
        tg,
        task,
        _stage_plan(config, task, config.joint_iters),
        config,
        rng,
        lambda: {**student.store.bindings(), **teacher.store.bindings()},
        "joint",
        config.joint_iters,
        second_store=teacher.store,
    )
    return TrainedPair(
        student=student, teacher=teacher, mode="joint",
        histories={"joint": history},
    )


def train_pair(config: TrainConfig, mode: str, rng=None, task=None) -> TrainedPair:
    if mode == "best-response":
        return train_best_response(config, rng, task=task)
    if mode == "joint":
        return train_joint(config, rng, task=task)
    raise TaskError(f"unknown training mode {mode!r}")


# -- persistence ------------------------------------------------------------


def write_history_csv(path, history: list):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "loss"])
        for i, value in enumerate(history):
            w.writerow([i, repr(float(value))])
    return path


def save_pair(out_dir, pair: TrainedPair, config: TrainConfig):
    """Checkpoints plus per-phase loss CSVs under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    common = {"mode": pair.mode, "task_kind": config.task_kind}
    save_store(out / "student", pair.student.store,
               meta={**common, "net": pair.student.meta()})
    save_store(out / "teacher", pair.teacher.store,
               meta={**common, "net": pair.teacher.meta()})
    for phase, history in pair.histories.items():
        write_history_csv(out / f"loss_{phase}.csv", history)
    with open(out / "train_config.json", "w") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
    return out


def load_pair(out_dir, task) -> TrainedPair:
    """Rebuild both nets from a ``save_pair`` directory."""
    out = Path(out_dir)
    seed_rng = np.random.default_rng(0)  # values are overwritten by the load
    smeta_probe = json.loads((out / "student.json").read_text())["meta"]
    hidden = smeta_probe["net"]["hidden"]
    student = init_student(task, ParamStore(), seed_rng, hidden=hidden)
    smeta = load_store(out / "student", student.store)
    teacher = init_teacher(task, ParamStore(), seed_rng, hidden=hidden)
    load_store(out / "teacher", teacher.store)
    return TrainedPair(
        student=student, teacher=teacher, mode=smeta["mode"], histories={}
    )
