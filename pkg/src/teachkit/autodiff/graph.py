"""Static compute graphs with reverse-mode differentiation.

A ``ComputeGraph`` is an ordered list of operation records over float64
arrays (scalars are shape-() arrays, vectors 1-D, matrices 2-D). Graphs are
built once per training/evaluation phase and re-executed with fresh leaf
bindings every iteration, so shape checking happens at build time and the
per-call work is plain array math.

``forward`` returns one value per node; ``backward`` accumulates
vector-Jacobian products from a scalar loss node down to the differentiable
leaves and returns them keyed by leaf name.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels as K


class GraphError(ValueError):
    """Raised for malformed graphs, bindings, or backward requests."""

    def __init__(self, message, node_id=None):
        if node_id is not None:
            message = f"node {node_id}: {message}"
        super().__init__(message)
        self.node_id = node_id


@dataclass(frozen=True)
class Node:
    op: str
    inputs: tuple[int, ...]
    shape: tuple[int, ...]
    attrs: tuple = ()
    name: str | None = None  # leaf / const nodes only
    diff: bool = False  # leaves: does gradient flow into this leaf?


def as_array(x, shape=None):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if shape is not None and a.shape != tuple(shape):
        raise GraphError(f"expected shape {tuple(shape)}, got {a.shape}")
    return a


class ComputeGraph:
    """Ordered operation records plus leaf declarations.

    Node ids are indices into ``nodes``; every node's inputs precede it, so
    forward evaluation is a single pass and backward a single reverse pass.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self.leaf_ids: dict[str, int] = {}
        self.consts: dict[int, np.ndarray] = {}
        self._needs_grad: list[bool] = []

    # -- construction ---------------------------------------------------

    def _append(self, node: Node) -> int:
        nid = len(self.nodes)
        self.nodes.append(node)
        needs = node.diff or any(self._needs_grad[i] for i in node.inputs)
        self._needs_grad.append(needs)
        return nid

    def _shape(self, nid: int) -> tuple[int, ...]:
        try:
            return self.nodes[nid].shape
        except (IndexError, TypeError):
            raise GraphError(f"unknown input node id {nid}")

    def leaf(self, name: str, shape, diff: bool = False) -> int:
        if name in self.leaf_ids:
            raise GraphError(f"duplicate leaf name {name!r}")
        nid = self._append(
            Node("leaf", (), tuple(shape), name=name, diff=diff)
        )
        self.leaf_ids[name] = nid
        return nid

    def const(self, value, name: str | None = None) -> int:
        value = as_array(value)
        nid = self._append(Node("const", (), value.shape, name=name))
        self.consts[nid] = value
        return nid

    def matmul(self, a: int, b: int) -> int:
        sa, sb = self._shape(a), self._shape(b)
        if len(sa) != 2 or len(sb) != 2 or sa[1] != sb[0]:
            raise GraphError(
                f"matmul of {sa} x {sb}", node_id=len(self.nodes)
            )
        return self._append(Node("matmul", (a, b), (sa[0], sb[1])))

    def _binary_same(self, op: str, a: int, b: int) -> int:
        sa, sb = self._shape(a), self._shape(b)
        if sa != sb:
            raise GraphError(f"{op} of {sa} vs {sb}", node_id=len(self.nodes))
        return self._append(Node(op, (a, b), sa))

    def add(self, a: int, b: int) -> int:
        return self._binary_same("add", a, b)

    def sub(self, a: int, b: int) -> int:
        return self._binary_same("sub", a, b)

    def mul(self, a: int, b: int) -> int:
        return self._binary_same("mul", a, b)

    def add_bias(self, a: int, bias: int) -> int:
        sa, sb = self._shape(a), self._shape(bias)
        if len(sa) != 2 or sb != (sa[1],):
            raise GraphError(
                f"add_bias of {sa} with {sb}", node_id=len(self.nodes)
            )
        return self._append(Node("add_bias", (a, bias), sa))

    def affine(self, a: int, scale: float, shift: float = 0.0) -> int:
        return self._append(
            Node("affine", (a,), self._shape(a), attrs=(float(scale), float(shift)))
        )

    def _unary(self, op: str, a: int) -> int:
        return self._append(Node(op, (a,), self._shape(a)))

    def tanh(self, a: int) -> int:
        return self._unary("tanh", a)

    def sigmoid(self, a: int) -> int:
        return self._unary("sigmoid", a)

    def relu(self, a: int) -> int:
        return self._unary("relu", a)

    def lerp(self, a: int, b: int, w: int) -> int:
        sa, sb, sw = self._shape(a), self._shape(b), self._shape(w)
        if not (sa == sb == sw):
            raise GraphError(
                f"lerp of {sa}, {sb}, {sw}", node_id=len(self.nodes)
            )
        return self._append(Node("lerp", (a, b, w), sa))

    def softmax(self, a: int) -> int:
        sa = self._shape(a)
        if len(sa) != 2:
            raise GraphError(f"softmax of {sa}", node_id=len(self.nodes))
        return self._unary("softmax", a)

    def concat(self, *xs: int) -> int:
        shapes = [self._shape(x) for x in xs]
        if not shapes or any(len(s) != 2 for s in shapes):
            raise GraphError(f"concat of {shapes}", node_id=len(self.nodes))
        rows = shapes[0][0]
        if any(s[0] != rows for s in shapes):
            raise GraphError(
                f"concat row mismatch {shapes}", node_id=len(self.nodes)
            )
        cols = sum(s[1] for s in shapes)
        return self._append(Node("concat", tuple(xs), (rows, cols)))

    def slice_cols(self, a: int, start: int, stop: int) -> int:
        sa = self._shape(a)
        if len(sa) != 2 or not (0 <= start < stop <= sa[1]):
            raise GraphError(
                f"slice_cols [{start}:{stop}] of {sa}", node_id=len(self.nodes)
            )
        return self._append(
            Node("slice_cols", (a,), (sa[0], stop - start), attrs=(start, stop))
        )

    def reduce_sum(self, a: int) -> int:
        return self._append(Node("reduce_sum", (a,), ()))

    def squared_error(self, pred: int, target: int) -> int:
        sp, st = self._shape(pred), self._shape(target)
        if sp != st or len(sp) != 2:
            raise GraphError(
                f"squared_error of {sp} vs {st}", node_id=len(self.nodes)
            )
        return self._append(Node("squared_error", (pred, target), ()))

    def softmax_cross_entropy(self, logits: int, target: int) -> int:
        sl, st = self._shape(logits), self._shape(target)
        if sl != st or len(sl) != 2:
            raise GraphError(
                f"softmax_cross_entropy of {sl} vs {st}", node_id=len(self.nodes)
            )
        return self._append(Node("softmax_cross_entropy", (logits, target), ()))

    def gumbel_softmax(self, logits: int, noise: int, tau: int) -> int:
        sl, sn, stau = self._shape(logits), self._shape(noise), self._shape(tau)
        if sl != sn or len(sl) != 2 or stau != (1,):
            raise GraphError(
                f"gumbel_softmax of {sl}, noise {sn}, tau {stau}",
                node_id=len(self.nodes),
            )
        return self._append(Node("gumbel_softmax", (logits, noise, tau), sl))

    def harden(self, a: int) -> int:
        sa = self._shape(a)
        if len(sa) != 2:
            raise GraphError(f"harden of {sa}", node_id=len(self.nodes))
        return self._unary("harden", a)

    # -- execution --------------------------------------------------------

    def forward(self, bindings: dict[str, np.ndarray]) -> list:
        """Evaluate every node; returns values indexed by node id."""
        values: list = [None] * len(self.nodes)
        for nid, node in enumerate(self.nodes):
            if node.op == "leaf":
                if node.name not in bindings:
                    raise GraphError(f"unbound leaf {node.name!r}", node_id=nid)
                v = bindings[node.name]
                if (
                    not isinstance(v, np.ndarray)
                    or v.dtype != np.float64
                    or not v.flags.c_contiguous
                ):
                    v = as_array(v)
                if v.shape != node.shape:
                    raise GraphError(
                        f"leaf {node.name!r} bound with shape {v.shape}, "
                        f"declared {node.shape}",
                        node_id=nid,
                    )
                values[nid] = v
            elif node.op == "const":
                values[nid] = self.consts[nid]
            else:
                values[nid] = _FORWARD[node.op](node, values)
        return values

    def backward(self, values: list, loss_id: int) -> dict[str, np.ndarray]:
        """Gradients of the scalar node ``loss_id`` w.r.t. diff leaves."""
        node = self.nodes[loss_id]
        if node.shape != ():
            raise GraphError(
                f"loss node has shape {node.shape}, expected scalar",
                node_id=loss_id,
            )
        adjoint: list = [None] * len(self.nodes)
        adjoint[loss_id] = np.ones((), dtype=np.float64)
        grads: dict[str, np.ndarray] = {}
        for nid in range(loss_id, -1, -1):
            g = adjoint[nid]
            if g is None or not self._needs_grad[nid]:
                continue
            node = self.nodes[nid]
            if node.op == "leaf":
                if node.diff:
                    grads[node.name] = g
                continue
            if node.op == "const":
                continue
            in_grads = _BACKWARD[node.op](node, g, values[nid], values)
            for iid, ig in zip(node.inputs, in_grads):
                if ig is None or not self._needs_grad[iid]:
                    continue
                if adjoint[iid] is None:
                    adjoint[iid] = ig
                else:
                    adjoint[iid] = adjoint[iid] + ig
        return grads


# -- op kernels ------------------------------------------------------------


def _fw_matmul(node, values):
    a, b = (values[i] for i in node.inputs)
    return a @ b


def _bw_matmul(node, g, out, values):
    a, b = (values[i] for i in node.inputs)
    return g @ b.T, a.T @ g


def _fw_add(node, values):
    a, b = (values[i] for i in node.inputs)
    return a + b


def _bw_add(node, g, out, values):
    return g, g


def _fw_sub(node, values):
    a, b = (values[i] for i in node.inputs)
    return a - b


def _bw_sub(node, g, out, values):
    return g, -g


def _fw_mul(node, values):
    a, b = (values[i] for i in node.inputs)
    return a * b


def _bw_mul(node, g, out, values):
    a, b = (values[i] for i in node.inputs)
    return g * b, g * a


def _fw_add_bias(node, values):
    a, b = (values[i] for i in node.inputs)
    return a + b


def _bw_add_bias(node, g, out, values):
    return g, g.sum(axis=0)


def _fw_affine(node, values):
    scale, shift = node.attrs
    return values[node.inputs[0]] * scale + shift


def _bw_affine(node, g, out, values):
    return (g * node.attrs[0],)


def _fw_tanh(node, values):
    return K.tanh(values[node.inputs[0]])


def _bw_tanh(node, g, out, values):
    return (K.tanh_grad(g, out),)


def _fw_sigmoid(node, values):
    return K.sigmoid(values[node.inputs[0]])


def _bw_sigmoid(node, g, out, values):
    return (K.sigmoid_grad(g, out),)


def _fw_relu(node, values):
    return K.relu(values[node.inputs[0]])


def _bw_relu(node, g, out, values):
    return (K.relu_grad(g, values[node.inputs[0]]),)


def _fw_lerp(node, values):
    a, b, w = (values[i] for i in node.inputs)
    return K.lerp(a, b, w)


def _bw_lerp(node, g, out, values):
    a, b, w = (values[i] for i in node.inputs)
    return K.lerp_grad(g, a, b, w)


def _fw_softmax(node, values):
    return K.softmax_rows(values[node.inputs[0]])


def _bw_softmax(node, g, out, values):
    return (K.softmax_rows_grad(g, out),)


def _fw_concat(node, values):
    return np.concatenate([values[i] for i in node.inputs], axis=1)


def _bw_concat(node, g, out, values):
    grads = []
    start = 0
    for iid in node.inputs:
        cols = values[iid].shape[1]
        # compiled kernels need contiguous inputs, so don't hand out views
        grads.append(np.ascontiguousarray(g[:, start : start + cols]))
        start += cols
    return grads


def _fw_slice_cols(node, values):
    start, stop = node.attrs
    return np.ascontiguousarray(values[node.inputs[0]][:, start:stop])


def _bw_slice_cols(node, g, out, values):
    start, stop = node.attrs
    full = np.zeros_like(values[node.inputs[0]])
    full[:, start:stop] = g
    return (full,)


def _fw_reduce_sum(node, values):
    return np.asarray(values[node.inputs[0]].sum())


def _bw_reduce_sum(node, g, out, values):
    return (np.full_like(values[node.inputs[0]], float(g)),)


def _fw_squared_error(node, values):
    pred, target = (values[i] for i in node.inputs)
    d = pred - target
    return np.asarray((d * d).sum() / pred.shape[0])


def _bw_squared_error(node, g, out, values):
    pred, target = (values[i] for i in node.inputs)
    gp = (2.0 * float(g) / pred.shape[0]) * (pred - target)
    return gp, -gp


def _fw_softmax_cross_entropy(node, values):
    logits, target = (values[i] for i in node.inputs)
    mx = logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(logits - mx).sum(axis=1)) + mx[:, 0]
    return np.asarray((lse - (target * logits).sum(axis=1)).mean())


def _bw_softmax_cross_entropy(node, g, out, values):
    logits, target = (values[i] for i in node.inputs)
    scale = float(g) / logits.shape[0]
    gl = scale * (K.softmax_rows(logits) - target)
    gt = -scale * logits
    return gl, gt


def _fw_gumbel_softmax(node, values):
    logits, noise, tau = (values[i] for i in node.inputs)
    return K.softmax_rows((logits + noise) / tau[0])


def _bw_gumbel_softmax(node, g, out, values):
    tau = values[node.inputs[2]]
    gl = K.softmax_rows_grad(g, out) / tau[0]
    # noise enters exactly like the logits; temperature carries no gradient
    return gl, gl, None


def _fw_harden(node, values):
    soft = values[node.inputs[0]]
    out = np.zeros_like(soft)
    out[np.arange(soft.shape[0]), soft.argmax(axis=1)] = 1.0
    return out


def _bw_harden(node, g, out, values):
    # straight-through: gradient passes to the soft sample unchanged
    return (g,)


_FORWARD = {
    "matmul": _fw_matmul,
    "add": _fw_add,
    "sub": _fw_sub,
    "mul": _fw_mul,
    "add_bias": _fw_add_bias,
    "affine": _fw_affine,
    "tanh": _fw_tanh,
    "sigmoid": _fw_sigmoid,
    "relu": _fw_relu,
    "lerp": _fw_lerp,
    "softmax": _fw_softmax,
    "concat": _fw_concat,
    "slice_cols": _fw_slice_cols,
    "reduce_sum": _fw_reduce_sum,
    "squared_error": _fw_squared_error,
    "softmax_cross_entropy": _fw_softmax_cross_entropy,
    "gumbel_softmax": _fw_gumbel_softmax,
    "harden": _fw_harden,
}

_BACKWARD = {
    "matmul": _bw_matmul,
    "add": _bw_add,
    "sub": _bw_sub,
    "mul": _bw_mul,
    "add_bias": _bw_add_bias,
    "affine": _bw_affine,
    "tanh": _bw_tanh,
    "sigmoid": _bw_sigmoid,
    "relu": _bw_relu,
    "lerp": _bw_lerp,
    "softmax": _bw_softmax,
    "concat": _bw_concat,
    "slice_cols": _bw_slice_cols,
    "reduce_sum": _bw_reduce_sum,
    "squared_error": _bw_squared_error,
    "softmax_cross_entropy": _bw_softmax_cross_entropy,
    "gumbel_softmax": _bw_gumbel_softmax,
    "harden": _bw_harden,
}

OP_KINDS = tuple(_FORWARD)
