import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from signgate import (
    AsymmetricLaplace,
    Interval,
    NormalEffect,
    ShiftedChiSq,
    SpikeSlab,
    effect_from_config,
    fit_ald_moments,
)
from signgate.errors import DegenerateFitError
from signgate.numerics import integrate

# High-precision reference values (40-digit arithmetic).
ALD_UNIT_DENSITY_AT_1 = 0.15163266492815836  # ALD(0, 1, 1/2) at x = 1
CHISQ3_TAIL_AT_3 = 0.39162517627108896  # Pr(chi2_3 > 3)

RNG = lambda: np.random.default_rng(20240817)


def total_mass(G):
    mi = G.mass_interval
    return integrate(lambda x: G.density(x), mi, tol=1e-10,
                     kinks=[k for k in G.kink_points if mi.lo < k < mi.hi])


class TestAsymmetricLaplace:
    def test_density_reference(self):
        G = AsymmetricLaplace(0.0, 1.0, 0.5)
        assert G.density(1.0) == pytest.approx(ALD_UNIT_DENSITY_AT_1, rel=1e-14)
        assert G.density(1.0) == pytest.approx(0.25 * math.exp(-0.5), rel=1e-14)

    @given(st.floats(0.05, 3.0), st.floats(0.05, 0.95), st.floats(-2.0, 2.0))
    def test_density_integrates_to_one(self, tau, q, mu):
        assert total_mass(AsymmetricLaplace(mu, tau, q)) == pytest.approx(1.0, abs=1e-8)

    @given(st.floats(0.05, 3.0), st.floats(0.05, 0.95))
    def test_cdf_matches_density(self, tau, q):
        G = AsymmetricLaplace(0.0, tau, q)
        grid = [-2.0 * tau, -0.3, 0.0, 0.5, 3.0 * tau]
        for x in grid:
            mass = integrate(lambda t: G.density(t), Interval(-math.inf, x),
                             tol=1e-11, kinks=[0.0] if x > 0 else [])
            assert G.cdf(x) == pytest.approx(mass, abs=1e-8)

    def test_cdf_at_kink_is_q(self):
        for q in (0.1, 0.37, 0.8):
            assert AsymmetricLaplace(1.5, 0.7, q).cdf(1.5) == pytest.approx(q, rel=1e-14)

    @given(st.floats(0.05, 3.0), st.floats(0.05, 0.95))
    def test_moments_match_quadrature(self, tau, q):
        G = AsymmetricLaplace(0.0, tau, q)
        mean, var = G.moments()
        mi = G.mass_interval
        m1 = integrate(lambda x: x * G.density(x), mi, tol=1e-11, kinks=[0.0])
        m2 = integrate(lambda x: x * x * G.density(x), mi, tol=1e-11, kinks=[0.0])
        assert mean == pytest.approx(m1, rel=1e-7, abs=1e-7)
        assert var == pytest.approx(m2 - m1 * m1, rel=1e-7, abs=1e-7)

    def test_symmetric_variance(self):
        _, var = AsymmetricLaplace(0.0, 0.5, 0.5).moments()
        assert var == pytest.approx(8.0 * 0.25, rel=1e-14)  # 8 tau^2

    def test_prob_positive(self):
        assert AsymmetricLaplace(0.0, 1.0, 0.3).prob_positive == pytest.approx(0.7, rel=1e-14)

    def test_sampling_moments(self):
        G = AsymmetricLaplace(0.0, 0.4, 0.25)
        draws = G.sample(RNG(), 200_000)
        mean, var = G.moments()
        assert draws.mean() == pytest.approx(mean, abs=4.0 * math.sqrt(var / 2e5))
        assert draws.var() == pytest.approx(var, rel=0.05)

    def test_sampling_skew_split(self):
        G = AsymmetricLaplace(0.0, 0.4, 0.2)
        draws = G.sample(RNG(), 100_000)
        assert (draws <= 0.0).mean() == pytest.approx(0.2, abs=0.006)

    def test_validation(self):
        with pytest.raises(ValueError):
            AsymmetricLaplace(0.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            AsymmetricLaplace(0.0, -1.0, 0.5)
        with pytest.raises(ValueError):
            AsymmetricLaplace(0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            AsymmetricLaplace(0.0, 1.0, 1.0)

    def test_scaled(self):
        G = AsymmetricLaplace(0.0, 0.3, 0.4)
        H = G.scaled(2.0)
        for x in (-0.7, 0.0, 1.3):
            assert H.density(x) == pytest.approx(G.density(x / 2.0) / 2.0, rel=1e-12)

    def test_kinks_at_location(self):
        assert 1.5 in AsymmetricLaplace(1.5, 1.0, 0.5).kink_points


class TestSpikeSlab:
    def mix(self):
        return SpikeSlab(
            AsymmetricLaplace(0.0, 0.1, 0.5),
            (Interval(-4.0, -2.0), Interval(2.0, 4.0)),
            0.01,
        )

    def test_density_integrates_to_one(self):
        assert total_mass(self.mix()) == pytest.approx(1.0, abs=1e-8)

    def test_density_inside_and_outside_slab(self):
        G = self.mix()
        # uniform over total length 4, weight 1%
        assert G.density(3.0) == pytest.approx(
            0.99 * AsymmetricLaplace(0.0, 0.1, 0.5).density(3.0) + 0.01 / 4.0, rel=1e-12
        )
        assert G.density(5.0) == pytest.approx(
            0.99 * AsymmetricLaplace(0.0, 0.1, 0.5).density(5.0), rel=1e-12
        )

    def test_kinks_cover_interval_edges(self):
        kinks = self.mix().kink_points
        for edge in (-4.0, -2.0, 2.0, 4.0, 0.0):
            assert edge in kinks

    def test_sample_slab_fraction(self):
        draws = self.mix().sample(RNG(), 200_000)
        in_slab = ((np.abs(draws) >= 2.0) & (np.abs(draws) <= 4.0)).mean()
        assert in_slab == pytest.approx(0.01, abs=0.002)

    def test_prob_positive(self):
        assert self.mix().prob_positive == pytest.approx(0.5, rel=1e-12)
        one_sided = SpikeSlab(
            AsymmetricLaplace(0.0, 0.1, 0.3), (Interval(2.0, 4.0),), 0.01
        )
        assert one_sided.prob_positive == pytest.approx(0.99 * 0.7 + 0.01, rel=1e-12)

    def test_validation(self):
        spike = AsymmetricLaplace(0.0, 0.1, 0.5)
        with pytest.raises(ValueError):
            SpikeSlab(spike, (), 0.01)
        with pytest.raises(ValueError):
            SpikeSlab(spike, (Interval(0.0, 2.0), Interval(1.0, 3.0)), 0.01)  # overlap
        with pytest.raises(ValueError):
            SpikeSlab(spike, (Interval(2.0, 4.0),), 1.5)

    def test_interval_order_normalized(self):
        G = SpikeSlab(
            AsymmetricLaplace(0.0, 0.1, 0.5),
            (Interval(2.0, 4.0), Interval(-4.0, -2.0)),
            0.01,
        )
        assert G.slab_intervals[0].lo == -4.0


class TestShiftedChiSq:
    def test_density_integrates_to_one(self):
        assert total_mass(ShiftedChiSq(3.0, 3.0)) == pytest.approx(1.0, abs=1e-8)

    def test_prob_positive_reference(self):
        assert ShiftedChiSq(3.0, 3.0).prob_positive == pytest.approx(
            CHISQ3_TAIL_AT_3, rel=1e-12
        )

    def test_density_zero_below_support(self):
        assert ShiftedChiSq(3.0, 3.0).density(-3.0) == 0.0
        assert ShiftedChiSq(3.0, 3.0).density(-4.0) == 0.0

    def test_sample_mean(self):
        draws = ShiftedChiSq(3.0, 3.0).sample(RNG(), 200_000)
        assert draws.mean() == pytest.approx(0.0, abs=0.03)
        assert draws.var() == pytest.approx(6.0, rel=0.03)

    def test_scaled_density(self):
        G = ShiftedChiSq(3.0, 3.0)
        H = G.scaled(0.5)
        for x in (-1.0, 0.5, 2.0):
            assert H.density(x) == pytest.approx(2.0 * G.density(2.0 * x), rel=1e-12)
        draws = H.sample(RNG(), 100_000)
        assert draws.var() == pytest.approx(1.5, rel=0.05)

    def test_validation(self):
        with pytest.raises(ValueError):
            ShiftedChiSq(0.0, 1.0)
        with pytest.raises(ValueError):
            ShiftedChiSq(-2.0, 1.0)


class TestNormalEffect:
    def test_density(self):
        G = NormalEffect(1.0, 2.0)
        x = 0.3
        want = math.exp(-((x - 1.0) / 2.0) ** 2 / 2.0) / (2.0 * math.sqrt(2.0 * math.pi))
        assert G.density(x) == pytest.approx(want, rel=1e-13)

    def test_density_integrates_to_one(self):
        assert total_mass(NormalEffect(-0.5, 1.7)) == pytest.approx(1.0, abs=1e-8)

    def test_prob_positive(self):
        from signgate.numerics import std_normal_cdf

        assert NormalEffect(1.0, 2.0).prob_positive == pytest.approx(
            std_normal_cdf(0.5), rel=1e-13
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            NormalEffect(0.0, 0.0)


def two_point_sample(mean, var):
    """Smallest sample with prescribed mean and ddof=1 variance."""
    d = math.sqrt(var / 2.0)
    return np.array([mean - d, mean + d])


class TestMomentFit:
    def test_symmetric_exact(self):
        y = two_point_sample(0.0, 1.32)
        fit = fit_ald_moments(y)
        assert fit.q == 0.5
        assert fit.tau == pytest.approx(math.sqrt(0.32 / 8.0), rel=1e-12)

    @given(st.floats(0.1, 0.9), st.floats(0.05, 1.5))
    def test_population_moments_recovered(self, q, tau):
        G = AsymmetricLaplace(0.0, tau, q)
        mean, var = G.moments()
        fit = fit_ald_moments(two_point_sample(mean, var + 1.0))
        assert fit.q == pytest.approx(q, abs=1e-9)
        assert fit.tau == pytest.approx(tau, rel=1e-8)

    def test_large_sample_recovery(self):
        G = AsymmetricLaplace(0.0, 0.15, 0.3)
        rng = np.random.default_rng(7)
        theta = G.sample(rng, 50_000)
        y = theta + rng.standard_normal(50_000)
        fit = fit_ald_moments(y)
        assert fit.q == pytest.approx(0.3, abs=0.03)
        assert fit.tau == pytest.approx(0.15, abs=0.02)

    def test_degenerate_raises_with_fallback(self):
        rng = np.random.default_rng(3)
        y = 0.5 * rng.standard_normal(1000)  # variance well below 1
        with pytest.raises(DegenerateFitError) as err:
            fit_ald_moments(y)
        fb = err.value.fallback
        assert fb.q == 0.5
        assert fb.tau == pytest.approx(1e-4)

    def test_mean_dominates_variance_clamps(self):
        # mean^2 >= excess variance: no q solves the mean equation
        fit = fit_ald_moments(two_point_sample(3.0, 1.5))
        assert fit.q == pytest.approx(1e-3)
        fit_neg = fit_ald_moments(two_point_sample(-3.0, 1.5))
        assert fit_neg.q == pytest.approx(1.0 - 1e-3)

    def test_accepts_dataset(self):
        from signgate import Dataset

        y = two_point_sample(0.0, 2.0)
        assert fit_ald_moments(Dataset(y)) == fit_ald_moments(y)

    def test_too_small(self):
        with pytest.raises(ValueError):
            fit_ald_moments(np.array([1.0]))


class TestEffectFromConfig:
    def test_ald(self):
        G = effect_from_config({"ald": {"mu": 0.0, "tau": 0.2, "q": 0.3}})
        assert G == AsymmetricLaplace(0.0, 0.2, 0.3)

    def test_spike_slab(self):
        G = effect_from_config(
            {
                "spike_slab": {
                    "spike": {"mu": 0.0, "tau": 0.1, "q": 0.5},
                    "slab_intervals": [[2.0, 4.0]],
                    "slab_weight": 0.01,
                }
            }
        )
        assert isinstance(G, SpikeSlab)
        assert G.slab_weight == 0.01

    def test_shifted_chisq(self):
        assert effect_from_config({"shifted_chisq": {"df": 3, "shift": 3.0}}) == ShiftedChiSq(3.0, 3.0)

    def test_normal(self):
        assert effect_from_config({"normal": {"mean": 0.0, "sd": 2.0}}) == NormalEffect(0.0, 2.0)

    @pytest.mark.parametrize(
        "spec",
        [
            {},
            {"ald": {"mu": 0.0, "tau": 0.2, "q": 0.3}, "normal": {"mean": 0, "sd": 1}},
            {"ald": {"mu": 0.0, "tau": 0.2}},
            {"ald": {"mu": 0.0, "tau": 0.2, "q": 0.3, "x": 1}},
            {"gaussian": {"mean": 0.0, "sd": 1.0}},
            {"ald": 7},
        ],
    )
    def test_rejects_malformed(self, spec):
        with pytest.raises(ValueError):
            effect_from_config(spec)

    def test_error_names_key(self):
        with pytest.raises(ValueError, match="effect.ald"):
            effect_from_config({"ald": {"mu": 0.0, "tau": 0.2, "q": 0.3, "x": 1}})
