"""Effect-size distributions and the asymmetric-Laplace moment estimator.

Every distribution implements one contract: a density, the positive-mass
probability, a seeded sampler, declared kink points (where the density
is non-smooth or jumps, so quadrature panels never straddle them), and a
finite interval carrying all but <= 1e-12 of the mass.  Objects are
immutable and hashable; samplers draw from an explicit caller-owned RNG.
"""
from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import chdtrc, chdtri

from ._backend import kernels
from .errors import DegenerateFitError
from .numerics import Interval, find_root

__all__ = [
    "EffectDistribution",
    "AsymmetricLaplace",
    "SpikeSlab",
    "ShiftedChiSq",
    "NormalEffect",
    "fit_ald_moments",
    "effect_from_config",
]

# Per-side tail mass left outside mass_interval.
_TAIL_MASS = 1e-13


class EffectDistribution(abc.ABC):
    """Contract for the effect-size law G.

    G must be atomless with G({0}) = 0, so sign errors are well defined
    against the sampled effects.
    """

    @abc.abstractmethod
    def _kernel_spec(self):
        """(code, params) consumed by the evaluation kernels."""

    @property
    @abc.abstractmethod
    def prob_positive(self) -> float:
        """pi0 = Pr(theta > 0)."""

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n independent draws using the caller's generator."""

    @property
    @abc.abstractmethod
    def kink_points(self) -> tuple:
        """Points where the density is non-smooth; quadrature split points."""

    @property
    @abc.abstractmethod
    def mass_interval(self) -> Interval:
        """Finite interval carrying at least 1 - 1e-12 of the mass."""

    @abc.abstractmethod
    def scaled(self, factor: float) -> "EffectDistribution":
        """Distribution of factor * theta (factor > 0)."""

    def density(self, theta):
        """Density g(theta); accepts a scalar or an ndarray."""
        code, params = self._kernel_spec()
        arr = np.asarray(theta, dtype=np.float64)
        out = kernels.density(code, params, np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out


def _positive_factor(factor) -> float:
    factor = float(factor)
    if not factor > 0.0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return factor


@dataclass(frozen=True)
class AsymmetricLaplace(EffectDistribution):
    """Asymmetric Laplace law with location mu, scale tau, skew q.

    Density q(1-q)/tau * exp(-((theta-mu)/tau) * [q - 1(theta <= mu)]);
    Pr(theta <= mu) = q, so with mu = 0 the positive mass is 1 - q.
    """

    mu: float
    tau: float
    q: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {self.q}")

    def _kernel_spec(self):
        return 0, np.array([self.mu, self.tau, self.q])

    def cdf(self, theta: float) -> float:
        z = (theta - self.mu) / self.tau
        if theta <= self.mu:
            return self.q * math.exp(z * (1.0 - self.q))
        return 1.0 - (1.0 - self.q) * math.exp(-z * self.q)

    @property
    def prob_positive(self) -> float:
        return 1.0 - self.cdf(0.0)

    def sample(self, rng, n):
        u = np.maximum(rng.random(n), np.finfo(np.float64).tiny)
        lower = self.mu + self.tau / (1.0 - self.q) * np.log(u / self.q)
        upper = self.mu - self.tau / self.q * np.log((1.0 - u) / (1.0 - self.q))
        return np.where(u <= self.q, lower, upper)

    @property
    def kink_points(self):
        return (self.mu,)

    @property
    def mass_interval(self):
        lo = self.mu + self.tau / (1.0 - self.q) * math.log(_TAIL_MASS / self.q)
        hi = self.mu - self.tau / self.q * math.log(_TAIL_MASS / (1.0 - self.q))
        return Interval(lo, hi)

    def scaled(self, factor):
        factor = _positive_factor(factor)
        return AsymmetricLaplace(self.mu * factor, self.tau * factor, self.q)

    def moments(self):
        """(mean, variance); the mean formula assumes mu shifts it only."""
        q, tau = self.q, self.tau
        mean = self.mu + tau * (1.0 - 2.0 * q) / (q * (1.0 - q))
        var = tau * tau * (1.0 - 2.0 * q + 2.0 * q * q) / ((1.0 - q) ** 2 * q * q)
        return mean, var


@dataclass(frozen=True)
class SpikeSlab(EffectDistribution):
    """Mixture of a near-zero spike and a uniform slab on disjoint intervals."""

    spike: AsymmetricLaplace
    slab_intervals: tuple
    slab_weight: float

    def __post_init__(self):
        if not 0.0 < self.slab_weight < 1.0:
            raise ValueError(f"slab_weight must be in (0, 1), got {self.slab_weight}")
        ivs = tuple(self.slab_intervals)
        if not ivs:
            raise ValueError("slab needs at least one interval")
        for iv in ivs:
            if not isinstance(iv, Interval):
                raise ValueError("slab_intervals must contain Interval objects")
            if not iv.finite:
                raise ValueError("slab intervals must be finite")
        ordered = sorted(ivs, key=lambda iv: iv.lo)
        for left, right in zip(ordered, ordered[1:]):
            if left.hi > right.lo:
                raise ValueError(f"slab intervals overlap near {right.lo}")
        object.__setattr__(self, "slab_intervals", tuple(ordered))

    @property
    def _total_length(self) -> float:
        return sum(iv.hi - iv.lo for iv in self.slab_intervals)

    def _kernel_spec(self):
        head = [
            self.slab_weight,
            self.spike.mu,
            self.spike.tau,
            self.spike.q,
            float(len(self.slab_intervals)),
            self._total_length,
        ]
        for iv in self.slab_intervals:
            head.extend((iv.lo, iv.hi))
        return 1, np.array(head)

    @property
    def prob_positive(self) -> float:
        slab_pos = sum(max(0.0, iv.hi - max(iv.lo, 0.0)) for iv in self.slab_intervals)
        return (
            (1.0 - self.slab_weight) * self.spike.prob_positive
            + self.slab_weight * slab_pos / self._total_length
        )

    def sample(self, rng, n):
        # A fixed number of uniforms per call keeps the stream layout
        # independent of which component each draw lands in.
        take_slab = rng.random(n) < self.slab_weight
        spike_draws = self.spike.sample(rng, n)
        pos = rng.random(n) * self._total_length
        lengths = np.array([iv.hi - iv.lo for iv in self.slab_intervals])
        edges = np.concatenate([[0.0], np.cumsum(lengths)])
        idx = np.clip(np.searchsorted(edges, pos, side="right") - 1, 0, len(lengths) - 1)
        los = np.array([iv.lo for iv in self.slab_intervals])
        slab_draws = los[idx] + (pos - edges[idx])
        return np.where(take_slab, slab_draws, spike_draws)

    @property
    def kink_points(self):
        pts = [self.spike.mu]
        for iv in self.slab_intervals:
            pts.extend((iv.lo, iv.hi))
        return tuple(sorted(set(pts)))

    @property
    def mass_interval(self):
        spike_iv = self.spike.mass_interval
        lo = min([spike_iv.lo] + [iv.lo for iv in self.slab_intervals])
        hi = max([spike_iv.hi] + [iv.hi for iv in self.slab_intervals])
        return Interval(lo, hi)

    def scaled(self, factor):
        factor = _positive_factor(factor)
        return SpikeSlab(
            self.spike.scaled(factor),
            tuple(Interval(iv.lo * factor, iv.hi * factor) for iv in self.slab_intervals),
            self.slab_weight,
        )


def _chisq_norm_const(df: int) -> float:
    half = 0.5 * df
    return math.exp(-half * math.log(2.0) - math.lgamma(half))


@dataclass(frozen=True)
class ShiftedChiSq(EffectDistribution):
    """theta = V - shift with V ~ chi-square(df); support (-shift, inf)."""

    df: int
    shift: float

    def __post_init__(self):
        if int(self.df) != self.df or self.df < 1:
            raise ValueError(f"df must be a positive integer, got {self.df}")
        object.__setattr__(self, "df", int(self.df))

    def _kernel_spec(self):
        return 2, np.array([0.5 * self.df - 1.0, _chisq_norm_const(self.df), self.shift, 1.0])

    @property
    def prob_positive(self) -> float:
        if self.shift <= 0.0:
            return 1.0
        return float(chdtrc(self.df, self.shift))

    def sample(self, rng, n):
        return rng.chisquare(self.df, n) - self.shift

    @property
    def kink_points(self):
        return (-self.shift,)

    @property
    def mass_interval(self):
        return Interval(-self.shift, float(chdtri(self.df, _TAIL_MASS)) - self.shift)

    def scaled(self, factor):
        return _ScaledChiSq(self.df, self.shift, _positive_factor(factor))


@dataclass(frozen=True)
class _ScaledChiSq(EffectDistribution):
    """theta = factor * (V - shift); carries the Table-1 style rescaling."""

    df: int
    shift: float
    factor: float

    def _base(self) -> ShiftedChiSq:
        return ShiftedChiSq(self.df, self.shift)

    def _kernel_spec(self):
        return 2, np.array(
            [0.5 * self.df - 1.0, _chisq_norm_const(self.df), self.shift, self.factor]
        )

    @property
    def prob_positive(self) -> float:
        return self._base().prob_positive

    def sample(self, rng, n):
        return self.factor * self._base().sample(rng, n)

    @property
    def kink_points(self):
        return (-self.shift * self.factor,)

    @property
    def mass_interval(self):
        base = self._base().mass_interval
        return Interval(base.lo * self.factor, base.hi * self.factor)

    def scaled(self, factor):
        return _ScaledChiSq(self.df, self.shift, self.factor * _positive_factor(factor))


@dataclass(frozen=True)
class NormalEffect(EffectDistribution):
    """Normal effect law; the symmetric reference case."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0.0:
            raise ValueError(f"sd must be positive, got {self.sd}")

    def _kernel_spec(self):
        return 3, np.array([self.mean, self.sd])

    @property
    def prob_positive(self) -> float:
        return float(kernels.phi(np.array([self.mean / self.sd]))[0])

    def sample(self, rng, n):
        return self.mean + self.sd * rng.standard_normal(n)

    @property
    def kink_points(self):
        return ()

    @property
    def mass_interval(self):
        return Interval(self.mean - 8.5 * self.sd, self.mean + 8.5 * self.sd)

    def scaled(self, factor):
        factor = _positive_factor(factor)
        return NormalEffect(self.mean * factor, self.sd * factor)


_FIT_FLOOR = 1e-6
_FALLBACK_TAU = 1e-4
_Q_CLAMP = 1e-3


def fit_ald_moments(y_values) -> AsymmetricLaplace:
    """Moment-based asymmetric Laplace fit with mu fixed to 0.

    Matches the sample mean and sample variance of the observations to
    the model moments E[Y] = tau(1-2q)/(q(1-q)) and
    Var[Y] = 1 + tau^2(1-2q+2q^2)/((1-q)^2 q^2), reduced to a bracketed
    one-dimensional root-find in q.

    Parameters
    ----------
    y_values : Dataset or array-like
        Observed unit-variance statistics, length >= 2.

    Returns
    -------
    AsymmetricLaplace with mu = 0.

    Raises
    ------
    DegenerateFitError
        If the sample variance is at most 1 + 1e-6 (no excess variance
        to attribute to effects); carries fallback parameters
        (q = 0.5, tau = 1e-4).

    Notes
    -----
    When ybar^2 >= s^2 - 1 the mean equation has no solution in (0, 1);
    q is then clamped to 1e-3 (or 1 - 1e-3) and tau matches the variance
    equation alone.
    """
    arr = np.asarray(getattr(y_values, "y", y_values), dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("moment fit needs a 1-D sample of size >= 2")
    ybar = float(arr.mean())
    s2 = float(arr.var(ddof=1))
    v = s2 - 1.0
    if v <= _FIT_FLOOR:
        raise DegenerateFitError(
            f"sample variance {s2} leaves no excess over the noise variance",
            fallback=AsymmetricLaplace(0.0, _FALLBACK_TAU, 0.5),
        )
    if ybar == 0.0:
        return AsymmetricLaplace(0.0, math.sqrt(v / 8.0), 0.5)

    def tau_of(q: float) -> float:
        d = 1.0 - 2.0 * q + 2.0 * q * q
        return q * (1.0 - q) * math.sqrt(v / d)

    if ybar * ybar >= v:
        q_hat = _Q_CLAMP if ybar > 0.0 else 1.0 - _Q_CLAMP
        return AsymmetricLaplace(0.0, tau_of(q_hat), q_hat)

    def mean_gap(q: float) -> float:
        d = 1.0 - 2.0 * q + 2.0 * q * q
        return (1.0 - 2.0 * q) * math.sqrt(v / d) - ybar

    q_hat = find_root(mean_gap, Interval(1e-9, 1.0 - 1e-9), tol=1e-13)
    return AsymmetricLaplace(0.0, tau_of(q_hat), q_hat)


_EFFECT_TAGS = ("ald", "spike_slab", "shifted_chisq", "normal")


def _require_keys(d: dict, required, optional=(), where="effect"):
    for key in required:
        if key not in d:
            raise ValueError(f"{where}: missing key '{key}'")
    allowed = set(required) | set(optional)
    for key in d:
        if key not in allowed:
            raise ValueError(f"{where}: unknown key '{key}'")


def effect_from_config(spec: dict) -> EffectDistribution:
    """Build a distribution from its tagged-union configuration entry.

    Exactly one of the tags 'ald', 'spike_slab', 'shifted_chisq',
    'normal' must be present; see the shipped scenario files for the
    field layout.  Raises ValueError naming the offending key.
    """
    if not isinstance(spec, dict):
        raise ValueError("effect: expected a table")
    tags = [t for t in _EFFECT_TAGS if t in spec]
    if len(tags) != 1 or len(spec) != 1:
        raise ValueError(f"effect: expected exactly one of {_EFFECT_TAGS}")
    tag = tags[0]
    body = spec[tag]
    if not isinstance(body, dict):
        raise ValueError(f"effect.{tag}: expected a table")
    if tag == "ald":
        _require_keys(body, ("mu", "tau", "q"), where="effect.ald")
        return AsymmetricLaplace(float(body["mu"]), float(body["tau"]), float(body["q"]))
    if tag == "spike_slab":
        _require_keys(
            body, ("spike", "slab_intervals", "slab_weight"), where="effect.spike_slab"
        )
        spike_body = body["spike"]
        if not isinstance(spike_body, dict):
            raise ValueError("effect.spike_slab.spike: expected a table")
        _require_keys(spike_body, ("mu", "tau", "q"), where="effect.spike_slab.spike")
        spike = AsymmetricLaplace(
            float(spike_body["mu"]), float(spike_body["tau"]), float(spike_body["q"])
        )
        raw = body["slab_intervals"]
        try:
            intervals = tuple(Interval(float(lo), float(hi)) for lo, hi in raw)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"effect.spike_slab.slab_intervals: {exc}") from exc
        return SpikeSlab(spike, intervals, float(body["slab_weight"]))
    if tag == "shifted_chisq":
        _require_keys(body, ("df", "shift"), where="effect.shifted_chisq")
        return ShiftedChiSq(int(body["df"]), float(body["shift"]))
    _require_keys(body, ("mean", "sd"), where="effect.normal")
    return NormalEffect(float(body["mean"]), float(body["sd"]))
