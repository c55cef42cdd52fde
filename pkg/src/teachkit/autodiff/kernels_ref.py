"""Reference numpy implementations of the hot numeric kernels.

The compiled extension (``_speedups``) implements the same functions with
fused loops; this module is the always-available fallback and the ground
truth the extension is tested against. All arrays are float64.
"""

import numpy as np

NAME = "numpy"


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_grad(g, y):
    # y is the forward output
    return g * y * (1.0 - y)


def tanh(x):
    return np.tanh(x)


def tanh_grad(g, y):
    return g * (1.0 - y * y)


def relu(x):
    return np.maximum(x, 0.0)


def relu_grad(g, x):
    return np.where(x > 0.0, g, 0.0)


def lerp(a, b, w):
    # a + w * (b - a): the gated blend used by recurrent cells
    return a + w * (b - a)


def lerp_grad(g, a, b, w):
    return g * (1.0 - w), g * w, g * (b - a)


def softmax_rows(x):
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_grad(g, y):
    # y is the forward output
    dot = (g * y).sum(axis=1, keepdims=True)
    return y * (g - dot)


def adam_update(p, m, v, grad, lr, beta1, beta2, eps, t):
    """One bias-corrected adaptive-moment step, in place on p, m, v."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
