"""Special functions, adaptive quadrature, root-finding, scalar maximization.

Everything here is a pure function of its arguments: identical inputs
give bit-identical outputs, so callers may evaluate concurrently and
cache freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from ._gk import NODES, WEIGHTS_G7, WEIGHTS_K15, adaptive_panels
from .errors import BracketError, QuadratureError

__all__ = [
    "Interval",
    "std_normal_cdf",
    "std_normal_quantile",
    "integrate",
    "find_root",
    "maximize_scalar",
    "DEFAULT_QUAD_TOL",
    "DEFAULT_ROOT_TOL",
    "DEFAULT_OPT_TOL",
]

DEFAULT_QUAD_TOL = 1e-8  # relative
DEFAULT_ROOT_TOL = 1e-8  # absolute, on the argument
DEFAULT_OPT_TOL = 1e-4  # absolute, on the argument

_STD_NORMAL = NormalDist()


@dataclass(frozen=True, slots=True)
class Interval:
    """An oriented interval; IEEE infinities mark half-infinite endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if not self.lo < self.hi:
            raise ValueError(f"empty interval: [{self.lo}, {self.hi}]")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)


_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, relatively accurate deep into both tails.

    Routed through erfc rather than erf: the erf form loses all
    precision below roughly 1e-16 where 1 + erf cancels.
    """
    return 0.5 * math.erfc(-x * _INV_SQRT2)


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF on 0 < p < 1.

    Raises
    ------
    ValueError
        If p lies outside the open unit interval.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {p}")
    return _STD_NORMAL.inv_cdf(p)


def _vectorized(f):
    """Wrap f so it maps an ndarray of points to an ndarray of values."""
    probed = {"vector": None}

    def call(x):
        if probed["vector"] is None:
            try:
                out = np.asarray(f(x), dtype=np.float64)
                probed["vector"] = out.shape == x.shape
            except (TypeError, ValueError):
                probed["vector"] = False
            if probed["vector"]:
                return out
        if probed["vector"]:
            return np.asarray(f(x), dtype=np.float64)
        return np.array([f(t) for t in x], dtype=np.float64)

    return call


def _panel_evaluator(f):
    def evaluate(a, b):
        center = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = center[:, None] + half[:, None] * NODES[None, :]
        fx = f(x.ravel()).reshape(x.shape)
        k15 = half * (fx @ WEIGHTS_K15)
        g7 = half * (fx @ WEIGHTS_G7)
        return k15[:, None], np.abs(k15 - g7)[:, None]

    return evaluate


def _extend_tail(eval_panels, start, direction, tol, max_windows=64):
    """Truncation point for an infinite tail, by doubling windows.

    Windows of width 1, 2, 4, ... are added away from `start` until two
    consecutive windows each contribute a negligible share, judged by a
    single Kronrod panel per window.
    """
    segments = []
    accum = 0.0
    width = 1.0
    edge = start
    quiet = 0
    for _ in range(max_windows):
        nxt = edge + direction * width
        lo, hi = (edge, nxt) if direction > 0 else (nxt, edge)
        segments.append((lo, hi))
        contrib = float(eval_panels(np.array([lo]), np.array([hi]))[0][0, 0])
        accum += contrib
        if abs(contrib) <= 0.125 * tol * abs(accum) and accum != 0.0:
            quiet += 1
            if quiet >= 2:
                return segments
        else:
            quiet = 0
        edge = nxt
        width *= 2.0
    if accum == 0.0:
        # Nothing seen out to width ~2^64: treat the tail as empty.
        return segments
    raise QuadratureError(
        f"tail toward {'+inf' if direction > 0 else '-inf'} did not become "
        f"negligible within {max_windows} doubling windows from {start}"
    )


def integrate(
    f,
    domain: Interval,
    tol: float = DEFAULT_QUAD_TOL,
    kinks=(),
    max_panels: int = 2000,
) -> float:
    """Integrate f over domain to a relative tolerance.

    Parameters
    ----------
    f : callable
        Integrand; may accept an ndarray (preferred) or a scalar.
        Smooth between declared kinks.
    domain : Interval
        Endpoints may be infinite; tails are truncated where their
        contribution is negligible relative to the accumulated value.
    tol : float
        Relative error target.
    kinks : iterable of float
        Points where f is continuous but not smooth, or jumps; panels
        never straddle them.
    max_panels : int
        Adaptive subdivision budget.

    Raises
    ------
    QuadratureError
        If subdivision or tail extension fails to converge.
    """
    fv = _vectorized(f)
    evaluate = _panel_evaluator(fv)

    interior = sorted({float(k) for k in kinks if domain.lo < k < domain.hi})
    lo_f = math.isfinite(domain.lo)
    hi_f = math.isfinite(domain.hi)
    # Finite anchors bound the core panels; infinite sides grow outward
    # from the outermost anchor by doubling windows.
    anchors = ([domain.lo] if lo_f else []) + interior + ([domain.hi] if hi_f else [])
    if not anchors:
        anchors = [-1.0, 1.0]
    segments = [(anchors[i], anchors[i + 1]) for i in range(len(anchors) - 1)]
    if not lo_f:
        segments = _extend_tail(evaluate, anchors[0], -1.0, tol) + segments
    if not hi_f:
        segments = segments + _extend_tail(evaluate, anchors[-1], +1.0, tol)
    # Floor the convergence target at unit scale so signed integrands
    # that cancel exactly (total near 0) still terminate; tol is then an
    # absolute bound for small totals and relative for large ones.
    totals = adaptive_panels(evaluate, segments, tol, max_panels=max_panels, abs_floor=1.0)
    return float(totals[0])


def find_root(f, bracket: Interval, tol: float = DEFAULT_ROOT_TOL) -> float:
    """Brent's method on a sign-changing bracket.

    Returns x with |f(x)| at a sign change and bracket width <= tol.
    Deterministic: identical inputs give bit-identical output.

    Raises
    ------
    BracketError
        If f(lo) and f(hi) have the same (nonzero) sign.
    """
    a, b = bracket.lo, bracket.hi
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("root bracket must be finite")
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise BracketError(f"f({a})={fa} and f({b})={fb} do not straddle zero")

    c, fc = a, fa
    d = e = b - a
    for _ in range(200):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * np.finfo(float).eps * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        b = b + (d if abs(d) > tol1 else math.copysign(tol1, xm))
        fb = f(b)
    raise BracketError("root iteration budget exhausted")


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_PRE_GRID = 17


def maximize_scalar(f, domain: Interval, tol: float = DEFAULT_OPT_TOL):
    """Golden-section maximization seeded by a coarse pre-grid.

    A 17-point interior grid guards against mild non-unimodality; the
    grid winner's neighbors bracket the golden-section search.  The
    returned argmax is always interior to the (open) domain.

    Returns
    -------
    (argmax, max) : tuple of float
    """
    lo, hi = domain.lo, domain.hi
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("maximization domain must be finite")
    xs = [lo + (hi - lo) * i / (_PRE_GRID + 1) for i in range(1, _PRE_GRID + 1)]
    fs = [f(x) for x in xs]
    best = max(range(_PRE_GRID), key=lambda i: fs[i])
    x_best, f_best = xs[best], fs[best]
    a = xs[best - 1] if best > 0 else lo
    b = xs[best + 1] if best < _PRE_GRID - 1 else hi

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    if fc > f_best:
        x_best, f_best = c, fc
    if fd > f_best:
        x_best, f_best = d, fd
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            if fc > f_best:
                x_best, f_best = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            if fd > f_best:
                x_best, f_best = d, fd
    return x_best, f_best
