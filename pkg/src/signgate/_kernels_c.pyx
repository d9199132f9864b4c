# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels.

Contract and distribution codes mirror `_kernels_py`; the Kronrod node
tables are imported from `_gk` at module init so both backends share one
source of truth.
"""
from libc.math cimport erfc, exp, fabs, pow

import numpy as np

from ._gk import NODES, WEIGHTS_G7, WEIGHTS_K15

BACKEND_NAME = "c"

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327

_XK = np.ascontiguousarray(NODES)
_WK = np.ascontiguousarray(WEIGHTS_K15)
_WG = np.ascontiguousarray(WEIGHTS_G7)

cdef double[::1] XK = _XK
cdef double[::1] WK = _WK
cdef double[::1] WG = _WG


cdef inline double _phi(double x) noexcept nogil:
    return 0.5 * erfc(-x * INV_SQRT2)


cdef double _density_one(int code, double* p, int plen, double x) noexcept nogil:
    cdef double mu, tau, q, z, w, total, val, a, c, shift, scale, t, mean, sd
    cdef int n_iv, i
    if code == 0:
        mu = p[0]; tau = p[1]; q = p[2]
        z = (x - mu) / tau
        if x <= mu:
            return q * (1.0 - q) / tau * exp(z * (1.0 - q))
        return q * (1.0 - q) / tau * exp(-z * q)
    if code == 1:
        w = p[0]
        val = (1.0 - w) * _density_one(0, p + 1, 3, x)
        n_iv = <int> p[4]
        total = p[5]
        for i in range(n_iv):
            if p[6 + 2 * i] <= x <= p[7 + 2 * i]:
                val += w / total
                break
        return val
    if code == 2:
        a = p[0]; c = p[1]; shift = p[2]; scale = p[3]
        t = x / scale + shift
        if t <= 0.0:
            return 0.0
        return (c / scale) * pow(t, a) * exp(-0.5 * t)
    if code == 3:
        mean = p[0]; sd = p[1]
        z = (x - mean) / sd
        return exp(-0.5 * z * z) * INV_SQRT_2PI / sd
    return 0.0


def phi(x):
    """Standard normal CDF, elementwise."""
    arr = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef double[::1] xv = arr
    out = np.empty(arr.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _phi(xv[i])
    return out.reshape(np.shape(x))


def density(code, params, x):
    """Effect density g(x) for the coded distribution, elementwise."""
    arr = np.ascontiguousarray(x, dtype=np.float64).ravel()
    pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[::1] xv = arr
    cdef double[::1] pv = pa
    out = np.empty(arr.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef int code_c = code
    cdef int plen = pv.shape[0]
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _density_one(code_c, &pv[0], plen, xv[i])
    return out.reshape(np.shape(x))


def panel_rates(code, params, a, b, double l, double u):
    """Kronrod-15 panel integrals of the two rate integrands.

    Same contract as `_kernels_py.panel_rates`: component 0 is the
    discovery-rate integrand, component 1 the sign-error numerator;
    panels must not straddle 0; returns (vals, errs) of shape (n, 2).
    """
    aa = np.ascontiguousarray(a, dtype=np.float64)
    bb = np.ascontiguousarray(b, dtype=np.float64)
    pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[::1] av = aa
    cdef double[::1] bv = bb
    cdef double[::1] pv = pa
    cdef Py_ssize_t n = av.shape[0]
    vals = np.empty((n, 2), dtype=np.float64)
    errs = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] vv = vals
    cdef double[:, ::1] ev = errs
    cdef int code_c = code
    cdef int plen = pv.shape[0]
    cdef Py_ssize_t i, j
    cdef double center, half, t, g, p1, p2, fr, fe
    cdef double k15_r, k15_e, g7_r, g7_e
    cdef bint pos
    with nogil:
        for i in range(n):
            center = 0.5 * (av[i] + bv[i])
            half = 0.5 * (bv[i] - av[i])
            pos = center > 0.0
            k15_r = k15_e = g7_r = g7_e = 0.0
            for j in range(15):
                t = center + half * XK[j]
                g = _density_one(code_c, &pv[0], plen, t)
                p1 = _phi(l - t)
                p2 = _phi(t - u)
                fr = g * (p1 + p2)
                fe = g * (p1 if pos else p2)
                k15_r += WK[j] * fr
                k15_e += WK[j] * fe
                g7_r += WG[j] * fr
                g7_e += WG[j] * fe
            vv[i, 0] = half * k15_r
            vv[i, 1] = half * k15_e
            ev[i, 0] = fabs(half * (k15_r - g7_r))
            ev[i, 1] = fabs(half * (k15_e - g7_e))
    return vals, errs
