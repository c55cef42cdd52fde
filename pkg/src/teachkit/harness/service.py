"""HTTP session service for human-study runs.

Every state change is appended to a per-session JSONL log before it is
acknowledged, so a restarted service rebuilds all sessions from disk and
scoring stays a pure function of the log. Hidden concepts and stimulus
labels never leave the server until the session is complete; the result
endpoint then reveals them next to the per-item scores.

Interactive sessions put the participant in the student seat. Each item
starts with one example produced from a zero guess, after which the
participant alternates posting a concept guess and fetching the next
example. Emissions are the modal candidate (discrete) or the raw head
output (continuous), so the exchange is reproducible from the logged
guesses alone.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from ..nets import teacher_step, zero_state
from ..tasks import make_task
from ..training import load_pair
from .study import (
    StudyError,
    StudyItem,
    StudySession,
    bimodal_stimuli,
    boolean_test_stimuli,
    build_study_items,
    score_session,
)


class ServiceError(Exception):
    """Maps to an HTTP error response with a stable code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad_request(message: str) -> ServiceError:
    return ServiceError(400, "invalid_request", message)


def _wrong_state(message: str) -> ServiceError:
    return ServiceError(409, "wrong_state", message)


class TaskBundle:
    """A task definition plus its optional trained pair."""

    def __init__(self, kind: str, checkpoint_dir=None):
        self.kind = kind
        self.task = make_task(kind)
        self.student = None
        self.teacher = None
        if checkpoint_dir is not None:
            pair = load_pair(checkpoint_dir, self.task)
            self.student = pair.student
            self.teacher = pair.teacher

    @property
    def has_teacher(self) -> bool:
        return self.teacher is not None


class LiveSession:
    """A study session plus the serving-side scratch state."""

    def __init__(self, session: StudySession, seed: int):
        self.session = session
        self.seed = seed
        self.rng = np.random.default_rng([seed, 1])
        self.teacher_state = None
        self.pending_guess = None
        self.lock = threading.Lock()


class StudyService:
    """Session registry, event log, and the study state machine.

    The HTTP layer in ``create_app`` is a thin adapter over this class;
    tests and the scoring CLI drive it directly.
    """

    def __init__(self, registry: dict, storage: Path):
        self.registry = dict(registry)
        self.storage = Path(storage)
        self.storage.mkdir(parents=True, exist_ok=True)
        self.sessions = {}
        self._create_lock = threading.Lock()
        self._resume()

    # -- logging ------------------------------------------------------------

    def _log(self, session_id: str, event: str, payload: dict):
        record = {
            "ts": time.time(),
            "session_id": session_id,
            "event": event,
            "payload": payload,
        }
        path = self.storage / f"{session_id}.jsonl"
        with open(path, "a") as f:
            f.write(json.dumps(record, sort_keys=True) + "\n")

    # -- session lifecycle ----------------------------------------------------

    def _bundle(self, kind: str) -> TaskBundle:
        if kind not in self.registry:
            raise _bad_request(
                f"task {kind!r} is not served, available: "
                f"{sorted(self.registry)}"
            )
        return self.registry[kind]

    def create_session(
        self, task: str, condition: str, mode: str, seed=None
    ) -> str:
        bundle = self._bundle(task)
        if condition not in ("random", "teacher"):
            raise _bad_request(f"unknown condition {condition!r}")
        if mode not in ("passive", "interactive"):
            raise _bad_request(f"unknown mode {mode!r}")
        if condition == "teacher" and not bundle.has_teacher:
            raise _bad_request(
                f"task {task!r} has no trained checkpoint loaded, "
                "condition 'teacher' is unavailable"
            )
        if seed is None:
            seed = secrets.randbits(32)
        seed = int(seed)
        try:
            items = build_study_items(
                task,
                condition,
                np.random.default_rng([seed, 0]),
                task=bundle.task,
                teacher=bundle.teacher,
                student=bundle.student,
                interactive=(mode == "interactive"),
            )
        except StudyError as exc:
            raise _bad_request(str(exc)) from exc
        session_id = secrets.token_hex(8)
        session = StudySession(session_id, task, condition, mode, items)
        live = LiveSession(session, seed)
        with self._create_lock:
            self.sessions[session_id] = live
        self._log(
            session_id,
            "created",
            {
                "task": task,
                "condition": condition,
                "mode": mode,
                "seed": seed,
                "items": [item.to_dict() for item in items],
            },
        )
        if mode == "interactive":
            with live.lock:
                self._begin_item(live)
        return session_id

    def _live(self, session_id: str) -> LiveSession:
        live = self.sessions.get(session_id)
        if live is None:
            raise ServiceError(
                404, "unknown_session", f"no session {session_id!r}"
            )
        return live

    # -- interactive machinery ------------------------------------------------

    def _begin_item(self, live: LiveSession):
        """Reset teacher state for the session's current item and emit the
        opening example from a zero guess."""
        s = live.session
        if s.complete or s.mode != "interactive":
            return
        bundle = self._bundle(s.task_kind)
        live.teacher_state = zero_state_for(bundle)
        live.pending_guess = None
        self._emit(live, np.zeros(bundle.task.spec.concept_dim))

    def _emit(self, live: LiveSession, guess: np.ndarray):
        s = live.session
        bundle = self._bundle(s.task_kind)
        item = s.current_item()
        if s.condition == "teacher":
            state, y = teacher_step(
                bundle.teacher, live.teacher_state, item.concept, guess
            )
            live.teacher_state = state
            if bundle.task.spec.discrete:
                example = int(np.argmax(y))
            else:
                example = float(y[0])
        elif bundle.task.spec.discrete:
            example = int(
                bundle.task.sample_prior_indices(item.concept[None, :], live.rng)[0]
            )
        else:
            example = float(
                bundle.task.prior_example_batch(item.concept[None, :], live.rng)[0, 0]
            )
        item.shown.append(example)
        payload = {
            "item": item.index,
            "k": len(item.shown),
            "guess_used": [float(v) for v in guess],
            "example": example,
        }
        if len(item.shown) == bundle.task.spec.k_teach:
            stimuli, labels = self._make_stimuli(bundle, item, live.rng)
            item.stimuli = stimuli
            item.labels = labels
            payload["stimuli"] = [s_ for s_ in stimuli]
            payload["labels"] = labels
        self._log(s.session_id, "emission", payload)
        live.pending_guess = None
        return example

    def _make_stimuli(self, bundle: TaskBundle, item: StudyItem, rng):
        if bundle.task.spec.kind == "bimodal":
            return bimodal_stimuli(item.concept, rng)
        return boolean_test_stimuli(bundle.task, item.concept, item.shown, rng)

    def _awaiting(self, live: LiveSession) -> str:
        s = live.session
        if s.mode == "passive":
            return "response"
        item = s.current_item()
        k = self._bundle(s.task_kind).task.spec.k_teach
        if len(item.shown) >= k:
            return "response"
        if live.pending_guess is not None:
            return "next_example"
        return "guess"

    # -- endpoint bodies --------------------------------------------------------

    def item_view(self, session_id: str) -> dict:
        live = self._live(session_id)
        with live.lock:
            s = live.session
            if s.complete:
                raise _wrong_state(
                    "session is complete, fetch the result instead"
                )
            item = s.current_item()
            bundle = self._bundle(s.task_kind)
            view = {
                "session_id": s.session_id,
                "task": s.task_kind,
                "condition": s.condition,
                "mode": s.mode,
                "status": s.status,
                "item_index": item.index,
                "n_items": s.n_items,
                "shown_examples": render_examples(bundle, item.shown),
                "stimuli": None
                if item.stimuli is None
                else render_examples(bundle, item.stimuli),
                "awaiting": self._awaiting(live),
            }
            return view

    def post_response(self, session_id: str, payload) -> dict:
        live = self._live(session_id)
        with live.lock:
            s = live.session
            if s.complete:
                raise _wrong_state("session is already complete")
            if self._awaiting(live) != "response":
                raise _wrong_state(
                    f"item {s.current_index} is awaiting "
                    f"'{self._awaiting(live)}', not a response"
                )
            ts = time.time()
            try:
                s.record_response(payload, ts)
            except StudyError as exc:
                raise _bad_request(str(exc)) from exc
            self._log(
                session_id,
                "response",
                {"item": s.current_index - 1, "answer": list(payload)},
            )
            if s.complete:
                result = score_session(s)
                self._log(session_id, "completed", {"result": result})
                return {"status": "complete", "answered": s.n_items}
            self._begin_item(live)
            return {"status": "active", "answered": s.current_index}

    def post_guess(self, session_id: str, guess) -> dict:
        live = self._live(session_id)
        with live.lock:
            s = live.session
            if s.complete:
                raise _wrong_state("session is already complete")
            if s.mode != "interactive":
                raise _wrong_state("guesses only apply to interactive sessions")
            bundle = self._bundle(s.task_kind)
            arr = _check_guess(bundle, guess)
            item = s.current_item()
            if len(item.shown) >= bundle.task.spec.k_teach:
                raise _wrong_state(
                    "all examples for this item are out, respond to the stimuli"
                )
            live.pending_guess = arr
            s.guesses.append((item.index, [float(v) for v in arr]))
            self._log(
                session_id,
                "guess",
                {"item": item.index, "guess": [float(v) for v in arr]},
            )
            return {"accepted": True, "item": item.index}

    def next_example(self, session_id: str) -> dict:
        live = self._live(session_id)
        with live.lock:
            s = live.session
            if s.complete:
                raise _wrong_state("session is already complete")
            if s.mode != "interactive":
                raise _wrong_state(
                    "next-example only applies to interactive sessions"
                )
            bundle = self._bundle(s.task_kind)
            item = s.current_item()
            if len(item.shown) >= bundle.task.spec.k_teach:
                raise _wrong_state("this item already has all its examples")
            if live.pending_guess is None:
                raise _wrong_state("post a guess before fetching an example")
            example = self._emit(live, live.pending_guess)
            return {
                "item": item.index,
                "example": render_examples(bundle, [example])[0],
                "k": len(item.shown),
                "awaiting": self._awaiting(live),
            }

    def result(self, session_id: str) -> dict:
        live = self._live(session_id)
        with live.lock:
            s = live.session
            if not s.complete:
                raise _wrong_state(
                    f"session has {s.current_index}/{s.n_items} responses, "
                    "result is available once complete"
                )
            bundle = self._bundle(s.task_kind)
            report = score_session(s)
            for row, item in zip(report["items"], s.items):
                row["concept"] = [float(v) for v in item.concept]
                row["shown_examples"] = render_examples(bundle, item.shown)
                row["stimuli"] = render_examples(bundle, item.stimuli)
                row["labels"] = item.labels
                row["answer"] = s.responses[item.index]
            return report

    # -- restart ------------------------------------------------------------------

    def _resume(self):
        for path in sorted(self.storage.glob("*.jsonl")):
            try:
                live = self._replay(path)
            except (ServiceError, StudyError, KeyError, ValueError) as exc:
                raise RuntimeError(
                    f"corrupt session log {path}: {exc}"
                ) from exc
            self.sessions[live.session.session_id] = live

    def _replay(self, path: Path) -> LiveSession:
        live = None
        for line in path.read_text().splitlines():
            record = json.loads(line)
            event = record["event"]
            payload = record["payload"]
            if event == "created":
                items = [StudyItem.from_dict(d) for d in payload["items"]]
                if live is not None:
                    raise ValueError("second 'created' event")
                session = StudySession(
                    record["session_id"],
                    payload["task"],
                    payload["condition"],
                    payload["mode"],
                    items,
                )
                live = LiveSession(session, payload["seed"])
                continue
            if live is None:
                raise ValueError(f"event {event!r} before 'created'")
            s = live.session
            if event == "emission":
                item = s.items[payload["item"]]
                bundle = self._bundle(s.task_kind)
                guess = np.asarray(payload["guess_used"], dtype=np.float64)
                if s.condition == "teacher":
                    if len(item.shown) == 0:
                        live.teacher_state = zero_state_for(bundle)
                    live.teacher_state, _ = teacher_step(
                        bundle.teacher, live.teacher_state, item.concept, guess
                    )
                item.shown.append(payload["example"])
                if "stimuli" in payload:
                    item.stimuli = list(payload["stimuli"])
                    item.labels = list(payload["labels"])
                live.pending_guess = None
            elif event == "guess":
                live.pending_guess = np.asarray(
                    payload["guess"], dtype=np.float64
                )
                s.guesses.append((payload["item"], payload["guess"]))
            elif event == "response":
                s.responses[payload["item"]] = list(payload["answer"])
                s.response_times[payload["item"]] = record["ts"]
            elif event == "completed":
                pass
            else:
                raise ValueError(f"unknown event {event!r}")
        if live is None:
            raise ValueError("log has no 'created' event")
        # the rng stream position cannot be replayed, reseed far away so a
        # resumed session never repeats the original stimulus draws
        live.rng = np.random.default_rng([live.seed, 2, s_len(live)])
        return live


def s_len(live: LiveSession) -> int:
    return sum(len(item.shown) for item in live.session.items)


def zero_state_for(bundle: TaskBundle):
    if bundle.teacher is None:
        return None
    return zero_state(bundle.teacher)


def _check_guess(bundle: TaskBundle, guess) -> np.ndarray:
    try:
        arr = np.asarray(list(guess), dtype=np.float64)
    except (TypeError, ValueError):
        raise _bad_request("guess must be a numeric vector") from None
    dim = bundle.task.spec.concept_dim
    if arr.shape != (dim,):
        raise _bad_request(
            f"guess must have {dim} entries for task {bundle.kind!r}, "
            f"got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise _bad_request("guess entries must be finite")
    return arr


def render_examples(bundle: TaskBundle, values) -> list:
    """Client form of examples or stimuli: floats for line lengths,
    property vectors for shape candidates."""
    if bundle.task.spec.kind == "boolean":
        vectors = bundle.task.property_vectors
        return [[float(v) for v in vectors[int(i)]] for i in values]
    return [float(v) for v in values]


def score_log(path) -> dict:
    """Recompute a completed session's result from its log alone."""
    path = Path(path)
    session = None
    items = None
    for line in path.read_text().splitlines():
        record = json.loads(line)
        payload = record["payload"]
        event = record["event"]
        if event == "created":
            items = [StudyItem.from_dict(d) for d in payload["items"]]
            session = StudySession(
                record["session_id"],
                payload["task"],
                payload["condition"],
                payload["mode"],
                items,
            )
        elif event == "emission":
            item = items[payload["item"]]
            item.shown.append(payload["example"])
            if "stimuli" in payload:
                item.stimuli = list(payload["stimuli"])
                item.labels = list(payload["labels"])
        elif event == "response":
            session.responses[payload["item"]] = list(payload["answer"])
            session.response_times[payload["item"]] = record["ts"]
    if session is None:
        raise StudyError(f"log {path} has no 'created' event")
    return score_session(session)


# -- HTTP layer ---------------------------------------------------------------


class CreateBody(BaseModel):
    task: str
    condition: str
    mode: str
    seed: "int | None" = None


class ResponseBody(BaseModel):
    ratings: "list[int] | None" = None
    classifications: "list[bool] | None" = None


class GuessBody(BaseModel):
    guess: "list[float]"


def create_app(registry: dict, storage):
    """FastAPI application over a ``StudyService``."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    service = StudyService(registry, Path(storage))
    app = FastAPI(title="teachkit study service")
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid_request", "message": str(exc.errors())},
        )

    @app.post("/sessions")
    def create_session(body: CreateBody):
        session_id = service.create_session(
            body.task, body.condition, body.mode, body.seed
        )
        live = service.sessions[session_id]
        return {
            "session_id": session_id,
            "status": "active",
            "n_items": live.session.n_items,
        }

    @app.get("/sessions/{session_id}/item")
    def get_item(session_id: str):
        return service.item_view(session_id)

    @app.post("/sessions/{session_id}/response")
    def post_response(session_id: str, body: ResponseBody):
        given = [v for v in (body.ratings, body.classifications) if v is not None]
        if len(given) != 1:
            raise _bad_request(
                "provide exactly one of 'ratings' or 'classifications'"
            )
        return service.post_response(session_id, given[0])

    @app.post("/sessions/{session_id}/guess")
    def post_guess(session_id: str, body: GuessBody):
        return service.post_guess(session_id, body.guess)

    @app.get("/sessions/{session_id}/next-example")
    def next_example(session_id: str):
        return service.next_example(session_id)

    @app.get("/sessions/{session_id}/result")
    def get_result(session_id: str):
        return service.result(session_id)

    return app


def build_registry(checkpoints: dict) -> dict:
    """Bundle tasks named in a {kind: checkpoint dir or None} table."""
    registry = {}
    for kind, ckpt in checkpoints.items():
        registry[kind] = TaskBundle(kind, ckpt)
    return registry


def serve(address: str, checkpoints: dict, storage):
    """Blocking entry point used by the command line."""
    import uvicorn

    host, _, port = address.partition(":")
    app = create_app(build_registry(checkpoints), storage)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
