# Fused float64 kernels for the graph engine's hot elementwise operations.
# Semantics mirror kernels_ref exactly; only temporaries and Python-level
# dispatch are saved.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp as c_exp, tanh as c_tanh, sqrt as c_sqrt, pow as c_pow

cnp.import_array()

NAME = "compiled"


cdef inline double _sigmoid_one(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + c_exp(-x))
    e = c_exp(x)
    return e / (1.0 + e)


def sigmoid(cnp.ndarray x):
    cdef cnp.ndarray out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _sigmoid_one(xv[i])
    return out


def sigmoid_grad(cnp.ndarray g, cnp.ndarray y):
    cdef cnp.ndarray out = np.empty_like(g)
    cdef double[::1] gv = g.ravel()
    cdef double[::1] yv = y.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] * yv[i] * (1.0 - yv[i])
    return out


def tanh(cnp.ndarray x):
    cdef cnp.ndarray out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = c_tanh(xv[i])
    return out


def tanh_grad(cnp.ndarray g, cnp.ndarray y):
    cdef cnp.ndarray out = np.empty_like(g)
    cdef double[::1] gv = g.ravel()
    cdef double[::1] yv = y.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out


def relu(cnp.ndarray x):
    cdef cnp.ndarray out = np.empty_like(x)
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = xv[i] if xv[i] > 0.0 else 0.0
    return out


def relu_grad(cnp.ndarray g, cnp.ndarray x):
    cdef cnp.ndarray out = np.empty_like(g)
    cdef double[::1] gv = g.ravel()
    cdef double[::1] xv = x.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] if xv[i] > 0.0 else 0.0
    return out


def lerp(cnp.ndarray a, cnp.ndarray b, cnp.ndarray w):
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double[::1] av = a.ravel()
    cdef double[::1] bv = b.ravel()
    cdef double[::1] wv = w.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = av.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = av[i] + wv[i] * (bv[i] - av[i])
    return out


def lerp_grad(cnp.ndarray g, cnp.ndarray a, cnp.ndarray b, cnp.ndarray w):
    cdef cnp.ndarray ga = np.empty_like(g)
    cdef cnp.ndarray gb = np.empty_like(g)
    cdef cnp.ndarray gw = np.empty_like(g)
    cdef double[::1] gv = g.ravel()
    cdef double[::1] av = a.ravel()
    cdef double[::1] bv = b.ravel()
    cdef double[::1] wv = w.ravel()
    cdef double[::1] gav = ga.ravel()
    cdef double[::1] gbv = gb.ravel()
    cdef double[::1] gwv = gw.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    with nogil:
        for i in range(n):
            gav[i] = gv[i] * (1.0 - wv[i])
            gbv[i] = gv[i] * wv[i]
            gwv[i] = gv[i] * (bv[i] - av[i])
    return ga, gb, gw


def softmax_rows(cnp.ndarray x):
    cdef cnp.ndarray out = np.empty_like(x)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, rows = xv.shape[0], cols = xv.shape[1]
    cdef double mx, s
    with nogil:
        for i in range(rows):
            mx = xv[i, 0]
            for j in range(1, cols):
                if xv[i, j] > mx:
                    mx = xv[i, j]
            s = 0.0
            for j in range(cols):
                ov[i, j] = c_exp(xv[i, j] - mx)
                s += ov[i, j]
            for j in range(cols):
                ov[i, j] /= s
    return out


def softmax_rows_grad(cnp.ndarray g, cnp.ndarray y):
    cdef cnp.ndarray out = np.empty_like(g)
    cdef double[:, ::1] gv = g
    cdef double[:, ::1] yv = y
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, rows = gv.shape[0], cols = gv.shape[1]
    cdef double dot
    with nogil:
        for i in range(rows):
            dot = 0.0
            for j in range(cols):
                dot += gv[i, j] * yv[i, j]
            for j in range(cols):
                ov[i, j] = yv[i, j] * (gv[i, j] - dot)
    return out


def adam_update(cnp.ndarray p, cnp.ndarray m, cnp.ndarray v, cnp.ndarray grad,
                double lr, double beta1, double beta2, double eps, long t):
    cdef double[::1] pv = p.ravel()
    cdef double[::1] mv = m.ravel()
    cdef double[::1] vv = v.ravel()
    cdef double[::1] gv = grad.ravel()
    cdef Py_ssize_t i, n = pv.shape[0]
    cdef double c1 = 1.0 - c_pow(beta1, t)
    cdef double c2 = 1.0 - c_pow(beta2, t)
    cdef double mhat, vhat
    with nogil:
        for i in range(n):
            mv[i] = beta1 * mv[i] + (1.0 - beta1) * gv[i]
            vv[i] = beta2 * vv[i] + (1.0 - beta2) * gv[i] * gv[i]
            mhat = mv[i] / c1
            vhat = vv[i] / c2
            pv[i] -= lr * mhat / (c_sqrt(vhat) + eps)
