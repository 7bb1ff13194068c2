"""Numpy implementations of the per-sample sweep kernels.

Semantics match fedsvm._sweeps (the compiled module) operation for
operation; the backend module picks whichever is available. All arrays
are modified in place.

Contract shared by both kernels: on entry ``w == w_start`` and
``delta_w == 0``; after every visited sample ``w`` is rematerialized as
``w_start + delta_w`` elementwise, so the sweep's total shared-part
change is exactly ``delta_w`` and replaying the recorded deltas in order
reproduces it bit for bit.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def sweep_classification(xs, ys, sq_norms, alpha, w_start, w, v, c1, inv_c2, order, deltas, delta_w):
    """One pass of dual coordinate descent over ``order``.

    Per visit i: closed-form box-clamped minimizer of the dual in
    alpha_i, then rank-one updates of w, v, and the delta accumulator.
    ``deltas[t]`` records the alpha change of visit t.
    """
    scale = 1.0 + inv_c2
    for t in range(order.shape[0]):
        i = order[t]
        x = xs[i]
        y = ys[i]
        raw = alpha[i] + (1.0 - y * (x @ w) - y * (x @ v)) / (sq_norms[i] * scale)
        new = 0.0 if raw < 0.0 else (c1 if raw > c1 else raw)
        delta = new - alpha[i]
        alpha[i] = new
        deltas[t] = delta
        cw = delta * y
        delta_w += cw * x
        np.add(w_start, delta_w, out=w)
        v += (cw * inv_c2) * x


def sweep_regression(xs, ys, sq_norms, alpha_minus, alpha_plus, dalpha, w_start, w, v,
                     c1, inv_c2, epsilon, order, deltas, delta_w):
    """One pass over ``order`` for the tube-loss dual.

    Each visit takes one exact box step in alpha_minus_i, then one in
    alpha_plus_i (fresh residual), then cancels the common part of the
    pair, which lowers the objective without moving the model. Two delta
    entries are recorded per visit: the signed dalpha changes of the two
    steps, in order.
    """
    scale = 1.0 + inv_c2
    for t in range(order.shape[0]):
        i = order[t]
        x = xs[i]
        denom = sq_norms[i] * scale

        r = (x @ w) + (x @ v) - ys[i]
        raw = alpha_minus[i] - (r + epsilon) / denom
        new = 0.0 if raw < 0.0 else (c1 if raw > c1 else raw)
        d = new - alpha_minus[i]
        alpha_minus[i] = new
        deltas[2 * t] = d
        delta_w += d * x
        np.add(w_start, delta_w, out=w)
        v += (d * inv_c2) * x

        r = (x @ w) + (x @ v) - ys[i]
        raw = alpha_plus[i] - (epsilon - r) / denom
        new = 0.0 if raw < 0.0 else (c1 if raw > c1 else raw)
        d = -(new - alpha_plus[i])
        alpha_plus[i] = new
        deltas[2 * t + 1] = d
        delta_w += d * x
        np.add(w_start, delta_w, out=w)
        v += (d * inv_c2) * x

        m = alpha_minus[i] if alpha_minus[i] < alpha_plus[i] else alpha_plus[i]
        if m != 0.0:
            alpha_minus[i] -= m
            alpha_plus[i] -= m
        dalpha[i] = alpha_minus[i] - alpha_plus[i]
