"""Recurrent student and teacher networks plus episode rollouts.

Both nets are single-layer gated recurrent cells (update + reset gate,
hidden width 64 by default) with a linear head. The student maps a running
example sequence to concept guesses; the teacher maps (target concept,
student's current guess) to the next example: a raw vector for continuous
tasks, logits over the candidate set for discrete ones.

Episodes run over static graphs built once per phase. Discrete tasks route
the student's input transform through ``candidates @ wx`` computed once per
forward, so selecting a candidate (hard one-hot or relaxed mixture) costs a
(batch x n_candidates) product instead of touching full feature vectors at
every step; the two orderings are mathematically identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import ComputeGraph, GraphError, ParamStore
from .autodiff.backend import kernels as K

HIDDEN = 64


def glorot(rng: np.random.Generator, shape) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class RecurrentNet:
    """A gated recurrent cell plus linear head, parameters in ``store``.

    Parameter names are ``<prefix>/<piece>`` so one ParamStore holds one
    net and checkpoints stay self-describing.
    """

    prefix: str
    input_dim: int
    output_dim: int
    store: ParamStore
    hidden: int = HIDDEN

    PIECES = ("wx", "wh", "whh", "b", "wo", "bo")

    def param_shapes(self) -> dict:
        h = self.hidden
        return {
            "wx": (self.input_dim, 3 * h),
            "wh": (h, 2 * h),
            "whh": (h, h),
            "b": (3 * h,),
            "wo": (h, self.output_dim),
            "bo": (self.output_dim,),
        }

    def init_params(self, rng: np.random.Generator):
        for piece, shape in self.param_shapes().items():
            if piece in ("b", "bo"):
                value = np.zeros(shape)
            else:
                value = glorot(rng, shape)
            self.store.add(f"{self.prefix}/{piece}", value)

    def meta(self) -> dict:
        return {
            "prefix": self.prefix,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "hidden": self.hidden,
        }

    # -- graph building -------------------------------------------------

    def leaves(self, g: ComputeGraph, diff: bool) -> dict:
        return {
            piece: g.leaf(f"{self.prefix}/{piece}", shape, diff=diff)
            for piece, shape in self.param_shapes().items()
        }

    def cell(self, g: ComputeGraph, ids: dict, h: int, gx_raw: int):
        """One recurrent step from the pre-bias input product ``gx_raw``
        (= x @ wx however the caller arranged to compute it)."""
        width = self.hidden
        gx = g.add_bias(gx_raw, ids["b"])
        zr = g.sigmoid(
            g.add(g.slice_cols(gx, 0, 2 * width), g.matmul(h, ids["wh"]))
        )
        z = g.slice_cols(zr, 0, width)
        r = g.slice_cols(zr, width, 2 * width)
        hc = g.tanh(
            g.add(
                g.slice_cols(gx, 2 * width, 3 * width),
                g.matmul(g.mul(r, h), ids["whh"]),
            )
        )
        h2 = g.lerp(h, hc, z)
        y = g.add_bias(g.matmul(h2, ids["wo"]), ids["bo"])
        return h2, y


class StudentNet(RecurrentNet):
    pass


class TeacherNet(RecurrentNet):
    pass


def init_student(task, store: ParamStore, rng, hidden: int = HIDDEN) -> StudentNet:
    net = StudentNet(
        prefix="student",
        input_dim=task.spec.example_dim,
        output_dim=task.spec.concept_dim,
        store=store,
        hidden=hidden,
    )
    net.init_params(rng)
    return net


def init_teacher(task, store: ParamStore, rng, hidden: int = HIDDEN) -> TeacherNet:
    out = task.spec.n_candidates if task.spec.discrete else task.spec.example_dim
    net = TeacherNet(
        prefix="teacher",
        input_dim=2 * task.spec.concept_dim,
        output_dim=out,
        store=store,
        hidden=hidden,
    )
    net.init_params(rng)
    return net


# -- single-step interfaces (used by the interactive service) -------------


def _single_step_graph(net: RecurrentNet, input_dims: tuple):
    g = ComputeGraph()
    ids = net.leaves(g, diff=False)
    h = g.leaf("state", (1, net.hidden))
    xs = [g.leaf(f"in{j}", (1, d)) for j, d in enumerate(input_dims)]
    x = xs[0] if len(xs) == 1 else g.concat(*xs)
    h2, y = net.cell(g, ids, h, g.matmul(x, ids["wx"]))
    return g, h2, y


def _cached_step(net: RecurrentNet, dims: tuple):
    cache = getattr(net, "_step_cache", None)
    if cache is None:
        cache = {}
        net._step_cache = cache
    if dims not in cache:
        cache[dims] = _single_step_graph(net, dims)
    return cache[dims]


def student_step(student: StudentNet, state, example):
    """One student update: consume an example, return (state', guess)."""
    state = np.asarray(state, dtype=np.float64).reshape(1, -1)
    example = np.asarray(example, dtype=np.float64).reshape(1, -1)
    if example.shape[1] != student.input_dim:
        raise GraphError(
            f"example dim {example.shape[1]}, student expects {student.input_dim}"
        )
    g, h2, y = _cached_step(student, (student.input_dim,))
    bindings = student.store.bindings()
    bindings["state"] = state
    bindings["in0"] = example
    values = g.forward(bindings)
    return values[h2][0], values[y][0]


def teacher_step(teacher: TeacherNet, state, concept, guess):
    """One teacher update: consume (c, current guess), return (state', emission)."""
    state = np.asarray(state, dtype=np.float64).reshape(1, -1)
    concept = np.asarray(concept, dtype=np.float64).reshape(1, -1)
    guess = np.asarray(guess, dtype=np.float64).reshape(1, -1)
    cdim = teacher.input_dim // 2
    if concept.shape[1] != cdim or guess.shape[1] != cdim:
        raise GraphError(
            f"teacher expects two {cdim}-dim concept vectors, got "
            f"{concept.shape[1]} and {guess.shape[1]}"
        )
    g, h2, y = _cached_step(teacher, (cdim, cdim))
    bindings = teacher.store.bindings()
    bindings["state"] = state
    bindings["in0"] = concept
    bindings["in1"] = guess
    values = g.forward(bindings)
    return values[h2][0], values[y][0]


def zero_state(net: RecurrentNet) -> np.ndarray:
    return np.zeros(net.hidden)


# -- standalone gumbel-softmax sampler ------------------------------------


def gumbel_softmax(logits, temperature: float, rng: np.random.Generator, hard: bool = False):
    """Relaxed one-hot sample; hard mode returns the exact perturbed argmax."""
    if temperature <= 0:
        raise GraphError(f"temperature must be positive, got {temperature}")
    z = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(z).all():
        raise GraphError("logits must be finite")
    squeeze = z.ndim == 1
    z = np.atleast_2d(z)
    noise = rng.gumbel(size=z.shape)
    soft = K.softmax_rows((z + noise) / temperature)
    if hard:
        out = np.zeros_like(soft)
        out[np.arange(soft.shape[0]), soft.argmax(axis=1)] = 1.0
    else:
        out = soft
    return out[0] if squeeze else out


# -- episode graphs --------------------------------------------------------


@dataclass
class PriorGraph:
    """Student-only episode over externally sampled examples.

    Discrete tasks bind selection weights (one-hots for real samples)
    instead of raw feature vectors; the graph looks features up through
    the shared candidates constant.
    """

    graph: ComputeGraph
    k_steps: int
    batch: int
    example_leaves: list
    guess_nodes: list
    step_loss_nodes: list
    loss_node: int
    discrete: bool


@dataclass
class TeachGraph:
    """Teacher-driven episode; the teaching loop of both training regimes."""

    graph: ComputeGraph
    k_steps: int
    batch: int
    mode: str
    discrete: bool
    noise_leaves: list = field(default_factory=list)
    logits_nodes: list = field(default_factory=list)
    emission_nodes: list = field(default_factory=list)  # weights or vectors
    guess_nodes: list = field(default_factory=list)
    step_loss_nodes: list = field(default_factory=list)
    loss_node: int = -1


def _episode_loss(g: ComputeGraph, step_losses: list, placement: str) -> int:
    if placement == "final_step":
        return step_losses[-1]
    total = step_losses[0]
    for node in step_losses[1:]:
        total = g.add(total, node)
    return total


def _step_loss(g: ComputeGraph, guess: int, concept: int, loss_kind: str) -> int:
    if loss_kind == "squared_error":
        return g.squared_error(guess, concept)
    return g.softmax_cross_entropy(guess, concept)


def build_prior_graph(student: StudentNet, task, k_steps: int, batch: int) -> PriorGraph:
    spec = task.spec
    g = ComputeGraph()
    sids = student.leaves(g, diff=True)
    concept = g.leaf("concept", (batch, spec.concept_dim))
    discrete = spec.discrete
    if discrete:
        cand = g.const(task.candidates())
        fw = g.matmul(cand, sids["wx"])
        in_dim = spec.n_candidates
    else:
        in_dim = spec.example_dim
    h = g.const(np.zeros((batch, student.hidden)))
    example_leaves, guess_nodes, step_losses = [], [], []
    for k in range(k_steps):
        name = f"e{k}"
        example_leaves.append(name)
        x = g.leaf(name, (batch, in_dim))
        gx_raw = g.matmul(x, fw if discrete else sids["wx"])
        h, guess = student.cell(g, sids, h, gx_raw)
        guess_nodes.append(guess)
        step_losses.append(_step_loss(g, guess, concept, spec.loss_kind))
    loss = _episode_loss(g, step_losses, spec.loss_placement)
    return PriorGraph(
        graph=g,
        k_steps=k_steps,
        batch=batch,
        example_leaves=example_leaves,
        guess_nodes=guess_nodes,
        step_loss_nodes=step_losses,
        loss_node=loss,
        discrete=discrete,
    )


def build_teach_graph(
    student: StudentNet,
    teacher: TeacherNet,
    task,
    k_steps: int,
    batch: int,
    mode: str,
    student_diff: bool,
    teacher_diff: bool,
) -> TeachGraph:
    if mode not in ("train", "eval"):
        raise GraphError(f"unknown rollout mode {mode!r}")
    spec = task.spec
    g = ComputeGraph()
    sids = student.leaves(g, diff=student_diff)
    tids = teacher.leaves(g, diff=teacher_diff)
    concept = g.leaf("concept", (batch, spec.concept_dim))
    out = TeachGraph(
        graph=g, k_steps=k_steps, batch=batch, mode=mode, discrete=spec.discrete
    )
    if spec.discrete:
        cand = g.const(task.candidates())
        fw = g.matmul(cand, sids["wx"])
        tau = g.leaf("tau", (1,))
    hs = g.const(np.zeros((batch, student.hidden)))
    ht = g.const(np.zeros((batch, teacher.hidden)))
    chat = g.const(np.zeros((batch, spec.concept_dim)))  # no guess yet
    step_losses = []
    for k in range(k_steps):
        tin = g.concat(concept, chat)
        ht, emission = teacher.cell(g, tids, ht, g.matmul(tin, tids["wx"]))
        if spec.discrete:
            noise = g.leaf(f"noise{k}", (batch, spec.n_candidates))
            out.noise_leaves.append(f"noise{k}")
            soft = g.gumbel_softmax(emission, noise, tau)
            weights = g.harden(soft) if mode == "eval" else soft
            out.logits_nodes.append(emission)
            out.emission_nodes.append(weights)
            gx_raw = g.matmul(weights, fw)
        else:
            out.emission_nodes.append(emission)
            gx_raw = g.matmul(emission, sids["wx"])
        hs, guess = student.cell(g, sids, hs, gx_raw)
        out.guess_nodes.append(guess)
        step_losses.append(_step_loss(g, guess, concept, spec.loss_kind))
        chat = g.softmax(guess) if spec.loss_kind == "softmax_cross_entropy" else guess
    out.step_loss_nodes = step_losses
    out.loss_node = _episode_loss(g, step_losses, spec.loss_placement)
    return out


# -- rollouts ---------------------------------------------------------------


@dataclass
class EpisodeTrace:
    """Per-episode record of one K-step teaching exchange (batched)."""

    examples: np.ndarray  # (B, K, example_dim) consumed example vectors
    guesses: np.ndarray  # (B, K, concept_dim)
    final_losses: np.ndarray  # (B,) task loss of the final guess
    candidate_indices: np.ndarray | None = None  # (B, K), discrete tasks
    weights: np.ndarray | None = None  # (B, K, n_candidates), discrete


def _final_guess_losses(task, concepts, final_guess) -> np.ndarray:
    if task.spec.loss_kind == "squared_error":
        d = final_guess - concepts
        return (d * d).sum(axis=1)
    mx = final_guess.max(axis=1, keepdims=True)
    lse = np.log(np.exp(final_guess - mx).sum(axis=1)) + mx[:, 0]
    return lse - (final_guess * concepts).sum(axis=1)


def _as_batch(concepts, dim) -> np.ndarray:
    c = np.asarray(concepts, dtype=np.float64)
    if c.ndim == 1:
        c = c[None, :]
    if c.ndim != 2 or c.shape[1] != dim:
        raise GraphError(f"concepts must be (n, {dim}), got {c.shape}")
    return c


def rollout_prior(
    student: StudentNet, task, concepts, k_steps: int, rng: np.random.Generator
) -> EpisodeTrace:
    """Roll the student over prior-sampled examples (teacher unused)."""
    concepts = _as_batch(concepts, task.spec.concept_dim)
    batch = concepts.shape[0]
    pg = build_prior_graph(student, task, k_steps, batch)
    bindings = student.store.bindings()
    bindings["concept"] = concepts
    examples = np.empty((batch, k_steps, task.spec.example_dim))
    indices = None
    if pg.discrete:
        indices = np.empty((batch, k_steps), dtype=np.int64)
        cand = task.candidates()
        eye = np.eye(task.spec.n_candidates)
        for k, name in enumerate(pg.example_leaves):
            idx = task.sample_prior_indices(concepts, rng)
            indices[:, k] = idx
            examples[:, k, :] = cand[idx]
            bindings[name] = eye[idx]
    else:
        for k, name in enumerate(pg.example_leaves):
            e = task.prior_example_batch(concepts, rng)
            examples[:, k, :] = e
            bindings[name] = e
    values = pg.graph.forward(bindings)
    guesses = np.stack([values[n] for n in pg.guess_nodes], axis=1)
    return EpisodeTrace(
        examples=examples,
        guesses=guesses,
        final_losses=_final_guess_losses(task, concepts, guesses[:, -1, :]),
        candidate_indices=indices,
    )


def rollout_teach(
    teacher: TeacherNet,
    student: StudentNet,
    task,
    concepts,
    k_steps: int,
    mode: str,
    rng: np.random.Generator,
    temperature: float = 0.5,
) -> EpisodeTrace:
    """Alternate teacher and student for K steps; see build_teach_graph."""
    if temperature <= 0:
        raise GraphError(f"temperature must be positive, got {temperature}")
    concepts = _as_batch(concepts, task.spec.concept_dim)
    batch = concepts.shape[0]
    tg = build_teach_graph(
        student, teacher, task, k_steps, batch, mode,
        student_diff=False, teacher_diff=False,
    )
    bindings = {**student.store.bindings(), **teacher.store.bindings()}
    bindings["concept"] = concepts
    if tg.discrete:
        bindings["tau"] = np.array([temperature])
        for name in tg.noise_leaves:
            bindings[name] = rng.gumbel(size=(batch, task.spec.n_candidates))
    values = tg.graph.forward(bindings)
    guesses = np.stack([values[n] for n in tg.guess_nodes], axis=1)
    weights = None
    indices = None
    if tg.discrete:
        weights = np.stack([values[n] for n in tg.emission_nodes], axis=1)
        indices = weights.argmax(axis=2)
        cand = task.candidates()
        examples = cand[indices]
        if mode == "train":  # consumed input is the relaxed mixture
            examples = np.einsum("bkc,cd->bkd", weights, cand)
    else:
        examples = np.stack([values[n] for n in tg.emission_nodes], axis=1)
    return EpisodeTrace(
        examples=examples,
        guesses=guesses,
        final_losses=_final_guess_losses(task, concepts, guesses[:, -1, :]),
        candidate_indices=indices,
        weights=weights,
    )
