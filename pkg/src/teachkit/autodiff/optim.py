"""Parameter storage and Adam updates.

A ``ParamStore`` owns named float64 arrays together with their Adam moment
buffers and a shared step counter. Updates mutate the arrays in place so
graphs bound to them by name always see the current values.
"""

from __future__ import annotations

import numpy as np

from .backend import kernels as K
from .graph import GraphError, as_array


class ParamStore:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step_count: int = 0

    def add(self, name: str, value) -> np.ndarray:
        if name in self.params:
            raise GraphError(f"duplicate parameter {name!r}")
        value = as_array(value).copy()
        self.params[name] = value
        self.m[name] = np.zeros_like(value)
        self.v[name] = np.zeros_like(value)
        return value

    def names(self) -> list[str]:
        return sorted(self.params)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def bindings(self) -> dict[str, np.ndarray]:
        """A shallow view suitable for graph leaf binding."""
        return dict(self.params)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Every array needed to restore training exactly."""
        out: dict[str, np.ndarray] = {}
        for name in self.names():
            out[f"param/{name}"] = self.params[name]
            out[f"adam_m/{name}"] = self.m[name]
            out[f"adam_v/{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], step_count: int):
        expected = set(self.state_arrays())
        got = set(arrays)
        if expected != got:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise GraphError(
                f"parameter state mismatch; missing {missing}, unexpected {extra}"
            )
        for name in self.names():
            for store, key in (
                (self.params, f"param/{name}"),
                (self.m, f"adam_m/{name}"),
                (self.v, f"adam_v/{name}"),
            ):
                src = as_array(arrays[key], shape=store[name].shape)
                store[name][...] = src
        self.step_count = int(step_count)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is <= max_norm.

    Returns the pre-clip norm.
    """
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = total ** 0.5
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for name in grads:
            grads[name] = grads[name] * scale
    return norm


def adam_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """One bias-corrected Adam update.

    The gradient dict must cover exactly the store's parameters, one array
    each; alternating-phase training keeps each net's parameters in its own
    store, so a partial update here always means a caller bug.
    """
    missing = sorted(set(store.params) - set(grads))
    extra = sorted(set(grads) - set(store.params))
    if missing or extra:
        raise GraphError(
            f"gradient names do not match parameters; "
            f"missing {missing}, unexpected {extra}"
        )
    store.step_count += 1
    t = store.step_count
    for name in sorted(grads):
        g = grads[name]
        p = store.params[name]
        if g.shape != p.shape:
            raise GraphError(
                f"gradient for {name!r} has shape {g.shape}, "
                f"parameter is {p.shape}"
            )
        K.adam_update(
            p, store.m[name], store.v[name],
            np.ascontiguousarray(g), lr, beta1, beta2, eps, t,
        )
