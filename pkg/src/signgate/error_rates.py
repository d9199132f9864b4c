"""Quadrature evaluation of the marginal sign error and discovery rates.

For an acceptance region A(alpha, s) = (l, u) with l = Phi^-1(alpha*s)
and u = Phi^-1(1 - alpha*(1-s)), one experiment with effect theta is
rejected downward with probability B1 = Phi(l - theta) and upward with
probability B2 = Phi(theta - u).  Averaging over the effect law G:

  msdr  = E[B1 + B2]                      (rejection probability)
  gamma = E[B1 1(theta>0) + B2 1(theta<0)] (sign-error numerator)
  mser  = gamma / msdr                    (error rate given rejection)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from ._backend import kernels
from ._gk import adaptive_panels
from .distributions import EffectDistribution
from .errors import DegenerateRegionError
from .numerics import DEFAULT_QUAD_TOL, std_normal_quantile

__all__ = [
    "AcceptanceRegion",
    "RateTriple",
    "b1",
    "b2",
    "rate_triple",
    "lemma_bound",
]


@dataclass(frozen=True)
class AcceptanceRegion:
    """The pair (alpha, s) with derived endpoints (l, u) of A(alpha, s).

    alpha in (0,1) is the experimentwise type I error rate; s in (0,1)
    splits it between the tails.  l < u holds for every alpha < 1; the
    region straddles 0 exactly when alpha*s < 1/2 and alpha*(1-s) < 1/2
    (true at any practical operating level, not enforced here).
    """

    alpha: float
    s: float
    l: float = field(init=False, repr=False)
    u: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must be in (0, 1), got {self.s}")
        object.__setattr__(self, "l", std_normal_quantile(self.alpha * self.s))
        object.__setattr__(self, "u", std_normal_quantile(1.0 - self.alpha * (1.0 - self.s)))

    @property
    def symmetric(self) -> bool:
        return self.s == 0.5


@dataclass(frozen=True)
class RateTriple:
    """mser = gamma/msdr by construction, so mser * msdr recovers gamma."""

    mser: float
    msdr: float
    gamma: float

    @classmethod
    def from_components(cls, gamma: float, msdr: float) -> "RateTriple":
        return cls(mser=gamma / msdr, msdr=msdr, gamma=gamma)


def b1(theta, region: AcceptanceRegion):
    """Pr(Y < l | theta): downward rejection probability."""
    out = ndtr(region.l - np.asarray(theta, dtype=np.float64))
    return float(out) if np.isscalar(theta) or np.ndim(theta) == 0 else out


def b2(theta, region: AcceptanceRegion):
    """Pr(Y > u | theta): upward rejection probability."""
    out = ndtr(np.asarray(theta, dtype=np.float64) - region.u)
    return float(out) if np.isscalar(theta) or np.ndim(theta) == 0 else out


def rate_triple(
    G: EffectDistribution, region: AcceptanceRegion, tol: float = DEFAULT_QUAD_TOL
) -> RateTriple:
    """Exact rates for region under G, by adaptive quadrature.

    The integration domain is G's mass interval split at 0 (the sign
    indicators switch there; G is atomless so the point itself carries
    no mass) and at G's declared kink points.

    Raises
    ------
    DegenerateRegionError
        If the discovery rate underflows (msdr < 1e-300); alpha > 0
        makes msdr > 0 analytically, so this flags numerical underflow
        only.
    """
    code, params = G._kernel_spec()
    mi = G.mass_interval
    cuts = {mi.lo, mi.hi, 0.0}
    cuts.update(G.kink_points)
    pts = sorted(c for c in cuts if mi.lo <= c <= mi.hi)
    segments = [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]

    def evaluate(a, b):
        return kernels.panel_rates(code, params, a, b, region.l, region.u)

    msdr, gamma = adaptive_panels(evaluate, segments, tol)
    if msdr < 1e-300:
        raise DegenerateRegionError(
            f"discovery rate underflow for alpha={region.alpha}, s={region.s}"
        )
    return RateTriple.from_components(float(gamma), float(msdr))


def lemma_bound(region: AcceptanceRegion, pi0: float) -> float:
    """Upper bound alpha*s*pi0 + alpha*(1-s)*(1-pi0) on the numerator gamma."""
    if not 0.0 <= pi0 <= 1.0:
        raise ValueError(f"pi0 must be in [0, 1], got {pi0}")
    return region.alpha * (region.s * pi0 + (1.0 - region.s) * (1.0 - pi0))
