"""Pure numpy/scipy evaluation kernels.

Same contract as the compiled extension `_kernels_c`: vectorized normal
CDF, effect-density evaluation by distribution code, and fused
Gauss-Kronrod panel sums for the two rate integrands.  Distribution
codes and parameter layouts:

  0  asymmetric Laplace        [mu, tau, q]
  1  spike-and-slab            [slab_weight, spike_mu, spike_tau, spike_q,
                                n_intervals, total_length, lo1, hi1, ...]
  2  scaled shifted chi-square [df/2 - 1, norm_const, shift, scale]
  3  normal                    [mean, sd]
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from ._gk import NODES, WEIGHTS_G7, WEIGHTS_K15

BACKEND_NAME = "python"


def phi(x):
    """Standard normal CDF, elementwise."""
    return ndtr(np.asarray(x, dtype=np.float64))


def density(code, params, x):
    """Effect density g(x) for the coded distribution, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(params, dtype=np.float64)
    if code == 0:
        mu, tau, q = p[0], p[1], p[2]
        z = (x - mu) / tau
        return q * (1.0 - q) / tau * np.exp(-z * np.where(x <= mu, q - 1.0, q))
    if code == 1:
        w = p[0]
        spike = density(0, p[1:4], x)
        out = (1.0 - w) * spike
        total = p[5]
        n_iv = int(p[4])
        inside = np.zeros(x.shape, dtype=bool)
        for i in range(n_iv):
            lo, hi = p[6 + 2 * i], p[7 + 2 * i]
            inside |= (x >= lo) & (x <= hi)
        return out + np.where(inside, w / total, 0.0)
    if code == 2:
        a, c, shift, scale = p[0], p[1], p[2], p[3]
        t = x / scale + shift
        out = np.zeros(x.shape, dtype=np.float64)
        pos = t > 0.0
        tp = t[pos]
        out[pos] = (c / scale) * np.power(tp, a) * np.exp(-0.5 * tp)
        return out
    if code == 3:
        mean, sd = p[0], p[1]
        z = (x - mean) / sd
        return np.exp(-0.5 * z * z) / (sd * np.sqrt(2.0 * np.pi))
    raise ValueError(f"unknown distribution code {code}")


def panel_rates(code, params, a, b, l, u):
    """Kronrod-15 panel integrals of the two rate integrands.

    Component 0: g(t) * (Phi(l - t) + Phi(t - u))      (discovery rate)
    Component 1: g(t) * (Phi(l - t) if the panel lies right of 0
                 else Phi(t - u))                      (error numerator)

    Panels must not straddle 0.  Returns (vals, errs), each of shape
    (len(a), 2), where errs is the |K15 - G7| estimate.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center[:, None] + half[:, None] * NODES[None, :]
    g = density(code, params, x.ravel()).reshape(x.shape)
    b1 = ndtr(l - x)
    b2 = ndtr(x - u)
    f_rate = g * (b1 + b2)
    f_err = g * np.where((center > 0.0)[:, None], b1, b2)
    k15 = np.stack([half * (f_rate @ WEIGHTS_K15), half * (f_err @ WEIGHTS_K15)], axis=1)
    g7 = np.stack([half * (f_rate @ WEIGHTS_G7), half * (f_err @ WEIGHTS_G7)], axis=1)
    return k15, np.abs(k15 - g7)
