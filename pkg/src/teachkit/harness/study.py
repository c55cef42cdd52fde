"""Human-study items, sessions, and scoring.

Two study tasks are supported. For line lengths (bimodal) a participant
sees two example lines per concept and then rates all five calibration
lengths {4, 8, 12, 16, 20}; an item is scored correct when both mode
lengths get a rating above three and the other three lengths get ratings
of three or below. For shape images (boolean) a participant sees two
example images and classifies four test images, two consistent with the
hidden concept and two not; the item score is the fraction classified
correctly.

Items carry their hidden concept and the stimulus labels. The service
layer is responsible for withholding those fields from active clients.
"""

from __future__ import annotations

import numpy as np

from ..nets import rollout_teach
from ..tasks import make_task

STUDY_TASKS = ("bimodal", "boolean")
CONDITIONS = ("random", "teacher")
LINE_LENGTHS = (4.0, 8.0, 12.0, 16.0, 20.0)
N_TEST_IMAGES = 4
RATING_MIN, RATING_MAX = 1, 5
RATING_CUTOFF = 3


class StudyError(ValueError):
    pass


class StudyItem:
    """One concept with its shown examples and test stimuli.

    ``shown`` holds line lengths (floats) for bimodal items and candidate
    indices (ints) for boolean items; ``stimuli`` likewise. ``labels``
    parallels ``stimuli`` with "high"/"low" or "pos"/"neg". Interactive
    items start with no shown examples and no stimuli; both fill in as
    the exchange proceeds.
    """

    def __init__(self, index, concept, shown, stimuli=None, labels=None):
        self.index = int(index)
        self.concept = np.asarray(concept, dtype=np.float64)
        self.shown = list(shown)
        self.stimuli = None if stimuli is None else list(stimuli)
        self.labels = None if labels is None else list(labels)
        if (self.stimuli is None) != (self.labels is None):
            raise StudyError("stimuli and labels must be set together")
        if self.stimuli is not None and len(self.stimuli) != len(self.labels):
            raise StudyError("stimuli and labels must have equal length")

    @property
    def ready(self) -> bool:
        return self.stimuli is not None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "concept": [float(v) for v in self.concept],
            "shown": [_plain(v) for v in self.shown],
            "stimuli": None
            if self.stimuli is None
            else [_plain(v) for v in self.stimuli],
            "labels": self.labels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StudyItem":
        return cls(
            d["index"], d["concept"], d["shown"], d["stimuli"], d["labels"]
        )


def _plain(v):
    if isinstance(v, (np.integer, int)):
        return int(v)
    return float(v)


class StudySession:
    """Item sequence plus the participant's responses so far."""

    def __init__(self, session_id, task_kind, condition, mode, items):
        if task_kind not in STUDY_TASKS:
            raise StudyError(f"unknown study task {task_kind!r}")
        if condition not in CONDITIONS:
            raise StudyError(f"unknown condition {condition!r}")
        if mode not in ("passive", "interactive"):
            raise StudyError(f"unknown mode {mode!r}")
        self.session_id = str(session_id)
        self.task_kind = task_kind
        self.condition = condition
        self.mode = mode
        self.items = list(items)
        self.responses = {}
        self.response_times = {}
        self.guesses = []

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def current_index(self) -> int:
        return len(self.responses)

    @property
    def complete(self) -> bool:
        return len(self.responses) == self.n_items

    @property
    def status(self) -> str:
        return "complete" if self.complete else "active"

    def current_item(self) -> StudyItem:
        if self.complete:
            raise StudyError("session is complete, no current item")
        return self.items[self.current_index]

    def record_response(self, payload, ts: float):
        item = self.current_item()
        validate_response(self.task_kind, item, payload)
        self.responses[item.index] = list(payload)
        self.response_times[item.index] = float(ts)


def validate_response(task_kind: str, item: StudyItem, payload):
    if not item.ready:
        raise StudyError("item stimuli are not ready for a response")
    try:
        values = list(payload)
    except TypeError:
        raise StudyError("response payload must be a sequence") from None
    if len(values) != len(item.stimuli):
        raise StudyError(
            f"expected {len(item.stimuli)} answers, got {len(values)}"
        )
    if task_kind == "bimodal":
        for v in values:
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise StudyError(f"ratings must be integers, got {v!r}")
            if not RATING_MIN <= v <= RATING_MAX:
                raise StudyError(
                    f"ratings must lie in [{RATING_MIN}, {RATING_MAX}], got {v}"
                )
    else:
        for v in values:
            if not isinstance(v, (bool, np.bool_)):
                raise StudyError(f"classifications must be booleans, got {v!r}")


# -- item construction ------------------------------------------------------


def bimodal_concept_grid() -> np.ndarray:
    """All ordered mode pairs from the calibration lengths, C(5,2) = 10."""
    lens = LINE_LENGTHS
    pairs = [
        (lens[i], lens[j])
        for i in range(len(lens))
        for j in range(i + 1, len(lens))
    ]
    return np.array(pairs, dtype=np.float64)


def bimodal_stimuli(concept, rng) -> tuple[list, list]:
    order = rng.permutation(len(LINE_LENGTHS))
    stimuli = [LINE_LENGTHS[k] for k in order]
    modes = set(np.asarray(concept, dtype=np.float64))
    labels = ["high" if s in modes else "low" for s in stimuli]
    return stimuli, labels


def boolean_test_stimuli(task, concept, shown, rng) -> tuple[list, list]:
    """Two consistent and two inconsistent candidates, shuffled, never
    repeating a shown example."""
    mask = task.consistent_mask(concept)
    shown = {int(s) for s in shown}
    pos_pool = [i for i in np.flatnonzero(mask) if i not in shown]
    neg_pool = [i for i in np.flatnonzero(~mask) if i not in shown]
    if len(pos_pool) < 2 or len(neg_pool) < 2:
        raise StudyError("not enough unseen candidates for test stimuli")
    pos = rng.choice(len(pos_pool), size=2, replace=False)
    neg = rng.choice(len(neg_pool), size=2, replace=False)
    stimuli = [pos_pool[k] for k in pos] + [neg_pool[k] for k in neg]
    labels = ["pos", "pos", "neg", "neg"]
    order = rng.permutation(N_TEST_IMAGES)
    return [stimuli[k] for k in order], [labels[k] for k in order]


def _boolean_concepts(task, rng) -> np.ndarray:
    """Five single-property and five two-property concepts, shuffled."""
    picked = []
    for count in (1, 2):
        pool = task.concepts[task.concepts.sum(axis=1) == count]
        if len(pool) < 5:
            raise StudyError(
                f"task exposes only {len(pool)} concepts with {count} "
                "properties, need 5"
            )
        rows = rng.choice(len(pool), size=5, replace=False)
        picked.append(pool[rows])
    concepts = np.concatenate(picked, axis=0)
    return concepts[rng.permutation(len(concepts))]


def _teacher_examples(task, concepts, teacher, student, rng):
    if teacher is None or student is None:
        raise StudyError("condition 'teacher' needs a trained checkpoint")
    trace = rollout_teach(
        teacher, student, task, concepts, task.spec.k_teach, "eval", rng
    )
    if task.spec.discrete:
        return [[int(i) for i in row] for row in trace.candidate_indices]
    return [[float(v) for v in row[:, 0]] for row in trace.examples]


def build_study_items(
    task_kind: str,
    condition: str,
    rng: np.random.Generator,
    task=None,
    teacher=None,
    student=None,
    interactive: bool = False,
) -> list:
    """The full item sequence for one session.

    Bimodal sessions cover all ten mode pairs; boolean sessions draw five
    single-property and five two-property concepts. Shown examples come
    from the example prior (condition "random") or from an eval rollout
    of the trained pair (condition "teacher"). Interactive sessions get
    empty items; examples and stimuli are produced live.
    """
    if task_kind not in STUDY_TASKS:
        raise StudyError(f"unknown study task {task_kind!r}")
    if condition not in CONDITIONS:
        raise StudyError(f"unknown condition {condition!r}")
    if task is None:
        task = make_task(task_kind)
    if task_kind == "bimodal":
        concepts = bimodal_concept_grid()
        concepts = concepts[rng.permutation(len(concepts))]
    else:
        concepts = _boolean_concepts(task, rng)

    if interactive:
        return [StudyItem(i, c, shown=[]) for i, c in enumerate(concepts)]

    if condition == "teacher":
        shown = _teacher_examples(task, concepts, teacher, student, rng)
    elif task_kind == "bimodal":
        shown = [
            [float(task.prior_example_batch(c[None, :], rng)[0, 0]) for _ in range(2)]
            for c in concepts
        ]
    else:
        cols = [task.sample_prior_indices(concepts, rng) for _ in range(2)]
        shown = [[int(a), int(b)] for a, b in zip(*cols)]

    items = []
    for i, c in enumerate(concepts):
        if task_kind == "bimodal":
            stimuli, labels = bimodal_stimuli(c, rng)
        else:
            stimuli, labels = boolean_test_stimuli(task, c, shown[i], rng)
        items.append(StudyItem(i, c, shown[i], stimuli, labels))
    return items


# -- scoring ----------------------------------------------------------------


def _bimodal_item_correct(item: StudyItem, ratings) -> bool:
    for rating, label in zip(ratings, item.labels):
        if label == "high" and rating <= RATING_CUTOFF:
            return False
        if label == "low" and rating > RATING_CUTOFF:
            return False
    return True


def _boolean_item_accuracy(item: StudyItem, classifications) -> float:
    hits = [
        bool(ans) == (label == "pos")
        for ans, label in zip(classifications, item.labels)
    ]
    return float(np.mean(hits))


def score_session(session: StudySession) -> dict:
    """Accuracy report for a finished session.

    Bimodal items are right or wrong as a whole; boolean items score the
    fraction of the four test images classified correctly. The session
    accuracy is the mean over items either way.
    """
    if not session.complete:
        raise StudyError(
            f"session {session.session_id} has "
            f"{session.current_index}/{session.n_items} responses, "
            "cannot score an incomplete session"
        )
    rows = []
    for item in session.items:
        answer = session.responses[item.index]
        if session.task_kind == "bimodal":
            correct = _bimodal_item_correct(item, answer)
            rows.append({"index": item.index, "correct": correct, "score": float(correct)})
        else:
            acc = _boolean_item_accuracy(item, answer)
            rows.append({"index": item.index, "accuracy": acc, "score": acc})
    return {
        "session_id": session.session_id,
        "task": session.task_kind,
        "condition": session.condition,
        "mode": session.mode,
        "n_items": session.n_items,
        "items": rows,
        "accuracy": float(np.mean([r["score"] for r in rows])),
    }


def aggregate_reports(reports) -> dict:
    """Mean accuracy per condition across scored sessions."""
    by_condition = {}
    for rep in reports:
        by_condition.setdefault(rep["condition"], []).append(rep["accuracy"])
    return {
        cond: {"mean_accuracy": float(np.mean(vals)), "n_sessions": len(vals)}
        for cond, vals in sorted(by_condition.items())
    }
