"""Checkpoint files: a JSON manifest next to one flat binary blob.

Format "ckpt-v1": ``<stem>.json`` holds the entry table (name, shape, byte
offset into the data file) plus free-form metadata; ``<stem>.bin`` holds the
concatenated arrays as little-endian float64 in entry order. Writing the
same arrays twice produces byte-identical files, which the reproducibility
tests rely on.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .graph import GraphError
from .optim import ParamStore

FORMAT = "ckpt-v1"


def save_arrays(stem, arrays: dict[str, np.ndarray], meta: dict | None = None):
    stem = Path(stem)
    entries = []
    offset = 0
    chunks = []
    for name in sorted(arrays):
        a = np.asarray(arrays[name], dtype="<f8")
        # ascontiguousarray promotes 0-d to 1-d, so record the shape first
        shape = list(a.shape)
        entries.append({"name": name, "shape": shape, "offset": offset})
        chunks.append(np.ascontiguousarray(a).tobytes())
        offset += a.nbytes
    manifest = {
        "format": FORMAT,
        "data_file": stem.name + ".bin",
        "entries": entries,
        "meta": dict(meta or {}),
    }
    stem.parent.mkdir(parents=True, exist_ok=True)
    with open(stem.with_suffix(".json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(stem.with_suffix(".bin"), "wb") as f:
        f.write(b"".join(chunks))


def load_arrays(stem) -> tuple[dict[str, np.ndarray], dict]:
    stem = Path(stem)
    with open(stem.with_suffix(".json")) as f:
        manifest = json.load(f)
    if manifest.get("format") != FORMAT:
        raise GraphError(
            f"unsupported checkpoint format {manifest.get('format')!r}"
        )
    data = (stem.parent / manifest["data_file"]).read_bytes()
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["entries"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        a = np.frombuffer(
            data, dtype="<f8", count=count, offset=entry["offset"]
        ).astype(np.float64).reshape(shape)
        arrays[entry["name"]] = a
    return arrays, manifest["meta"]


def save_store(stem, store: ParamStore, meta: dict | None = None):
    meta = dict(meta or {})
    meta["step_count"] = store.step_count
    save_arrays(stem, store.state_arrays(), meta)


def load_store(stem, store: ParamStore) -> dict:
    arrays, meta = load_arrays(stem)
    store.load_state_arrays(arrays, meta["step_count"])
    return meta
