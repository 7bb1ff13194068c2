# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-sample sweep kernels.

Same contract as fedsvm._sweeps_py; compiled with FP contraction off so
the arithmetic matches numpy's elementwise semantics operation for
operation within each step.
"""

import numpy as np

BACKEND_NAME = "compiled"


def sweep_classification(double[:, ::1] xs, double[::1] ys, double[::1] sq_norms,
                         double[::1] alpha, double[::1] w_start, double[::1] w,
                         double[::1] v, double c1, double inv_c2,
                         Py_ssize_t[::1] order, double[::1] deltas, double[::1] delta_w):
    cdef Py_ssize_t t, i, j
    cdef Py_ssize_t n_visits = order.shape[0]
    cdef Py_ssize_t d = xs.shape[1]
    cdef double scale = 1.0 + inv_c2
    cdef double xw, xv, raw, new, delta, y, cw, cv
    for t in range(n_visits):
        i = order[t]
        y = ys[i]
        xw = 0.0
        for j in range(d):
            xw += xs[i, j] * w[j]
        xv = 0.0
        for j in range(d):
            xv += xs[i, j] * v[j]
        raw = alpha[i] + (1.0 - y * xw - y * xv) / (sq_norms[i] * scale)
        new = 0.0 if raw < 0.0 else (c1 if raw > c1 else raw)
        delta = new - alpha[i]
        alpha[i] = new
        deltas[t] = delta
        cw = delta * y
        cv = cw * inv_c2
        for j in range(d):
            delta_w[j] += cw * xs[i, j]
        for j in range(d):
            w[j] = w_start[j] + delta_w[j]
        for j in range(d):
            v[j] += cv * xs[i, j]


def sweep_regression(double[:, ::1] xs, double[::1] ys, double[::1] sq_norms,
                     double[::1] alpha_minus, double[::1] alpha_plus, double[::1] dalpha,
                     double[::1] w_start, double[::1] w, double[::1] v,
                     double c1, double inv_c2, double epsilon,
                     Py_ssize_t[::1] order, double[::1] deltas, double[::1] delta_w):
    cdef Py_ssize_t t, i, j
    cdef Py_ssize_t n_visits = order.shape[0]
    cdef Py_ssize_t d = xs.shape[1]
    cdef double scale = 1.0 + inv_c2
    cdef double xw, xv, r, raw, new, delta, denom, m, cv
    for t in range(n_visits):
        i = order[t]
        denom = sq_norms[i] * scale

        xw = 0.0
        for j in range(d):
            xw += xs[i, j] * w[j]
        xv = 0.0
        for j in range(d):
            xv += xs[i, j] * v[j]
        r = xw + xv - ys[i]
        raw = alpha_minus[i] - (r + epsilon) / denom
        new = 0.0 if raw < 0.0 else (c1 if raw > c1 else raw)
        delta = new - alpha_minus[i]
        alpha_minus[i] = new
        deltas[2 * t] = delta
        cv = delta * inv_c2
        for j in range(d):
            delta_w[j] += delta * xs[i, j]
        for j in range(d):
            w[j] = w_start[j] + delta_w[j]
        for j in range(d):
            v[j] += cv * xs[i, j]

        xw = 0.0
        for j in range(d):
            xw += xs[i, j] * w[j]
        xv = 0.0
        for j in range(d):
            xv += xs[i, j] * v[j]
        r = xw + xv - ys[i]
        raw = alpha_plus[i] - (epsilon - r) / denom
        new = 0.0 if raw < 0.0 else (c1 if raw > c1 else raw)
        delta = -(new - alpha_plus[i])
        alpha_plus[i] = new
        deltas[2 * t + 1] = delta
        cv = delta * inv_c2
        for j in range(d):
            delta_w[j] += delta * xs[i, j]
        for j in range(d):
            w[j] = w_start[j] + delta_w[j]
        for j in range(d):
            v[j] += cv * xs[i, j]

        m = alpha_minus[i] if alpha_minus[i] < alpha_plus[i] else alpha_plus[i]
        if m != 0.0:
            alpha_minus[i] -= m
            alpha_plus[i] -= m
        dalpha[i] = alpha_minus[i] - alpha_plus[i]
