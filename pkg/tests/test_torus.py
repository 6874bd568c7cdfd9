import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmkin.torus import (TWO_PI, BiasModel, NoiseModel,
                            acceptance_probability, half_angle_offset,
                            pair_midpoint, sample_wrapped_gaussian, wrap,
                            wrapped_gaussian_density)

# theta-function series summed to K = 50 at 50 digits (mpmath), frozen
DENSITY_AT_0_SIGMA_PI_10 = 7.978845608028653558798921
DENSITY_AT_05_SIGMA_PI_10 = 2.248535116428639015912238
DENSITY_AT_2_SIGMA_1 = 0.3394954892391941105697202


class TestWrap:
    def test_identity(self):
        assert wrap(0.0) == 0.0

    def test_period(self):
        assert wrap(TWO_PI) == 0.0

    def test_negative_half_pi(self):
        assert wrap(-math.pi / 2) == pytest.approx(3 * math.pi / 2, abs=1e-15)

    def test_tiny_negative_stays_in_range(self):
        assert 0.0 <= wrap(-1e-20) < TWO_PI

    def test_array_input(self):
        out = wrap(np.array([0.0, TWO_PI, -math.pi / 2]))
        assert out.shape == (3,)
        assert np.all((out >= 0) & (out < TWO_PI))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            wrap(float("nan"))
        with pytest.raises(ValueError):
            wrap(float("inf"))

    @given(st.floats(min_value=-1e6, max_value=1e6))
    def test_idempotent(self, x):
        assert wrap(wrap(x)) == wrap(x)

    @given(st.floats(min_value=-1e6, max_value=1e6))
    def test_range(self, x):
        assert 0.0 <= wrap(x) < TWO_PI


class TestPairMidpoint:
    def test_bisector(self):
        assert pair_midpoint(0.0, math.pi / 2) == pytest.approx(math.pi / 4)

    def test_antipodal_degenerate(self):
        assert pair_midpoint(0.0, math.pi) is None

    def test_across_wrap_point(self):
        # (1,0) + (0,-1) = (1,-1): phase -pi/4, canonically 7*pi/4
        assert pair_midpoint(3 * math.pi / 2, 0.0) == pytest.approx(7 * math.pi / 4)

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b = rng.random(2) * TWO_PI
            assert pair_midpoint(a, b) == pytest.approx(pair_midpoint(b, a), abs=1e-12)

    def test_matches_normalized_vector_sum(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b = rng.random(2) * TWO_PI
            mid = pair_midpoint(a, b)
            vx = math.cos(a) + math.cos(b)
            vy = math.sin(a) + math.sin(b)
            norm = math.hypot(vx, vy)
            assert math.cos(mid) == pytest.approx(vx / norm, abs=1e-12)
            assert math.sin(mid) == pytest.approx(vy / norm, abs=1e-12)


class TestHalfAngleOffset:
    def test_equal_phases(self):
        assert half_angle_offset(math.pi / 4, math.pi / 4) == 0.0

    def test_quarter_turn(self):
        assert half_angle_offset(math.pi / 2, 0.0) == pytest.approx(math.pi / 4)

    def test_conjugate_symmetry(self):
        assert half_angle_offset(0.0, math.pi / 2) == pytest.approx(-math.pi / 4)

    def test_antipodal_degenerate(self):
        assert half_angle_offset(0.0, math.pi) is None

    def test_nonnegative_real_part_bulk(self):
        # cos(offset) >= 0, i.e. the midpoint is never more than a quarter
        # turn from either member of the pair
        rng = np.random.default_rng(3)
        a = rng.random(1_000_000) * TWO_PI
        b = rng.random(1_000_000) * TWO_PI
        half = np.remainder(0.5 * (a - b), math.pi)
        half = np.where(half > math.pi / 2, half - math.pi, half)
        assert np.all(np.cos(half) >= -1e-15)

    def test_range(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            a, b = rng.random(2) * TWO_PI
            off = half_angle_offset(a, b)
            if off is not None:
                assert -math.pi / 2 < off <= math.pi / 2

    def test_agrees_with_midpoint(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a, b = rng.random(2) * TWO_PI
            mid = pair_midpoint(a, b)
            off = half_angle_offset(a, b)
            # offset is the signed angle from the midpoint to the first phase
            expect = math.remainder(a - mid, TWO_PI)
            assert off == pytest.approx(expect, abs=1e-12)


class TestNoiseModel:
    def test_sigma_scaling_exact(self):
        model = NoiseModel(gamma=0.05, n_particles=1000)
        assert model.sigma == TWO_PI * 0.05 / math.sqrt(1000)

    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(gamma=-1.0, n_particles=10)
        with pytest.raises(ValueError):
            NoiseModel(gamma=0.1, n_particles=1)
        with pytest.raises(ValueError):
            NoiseModel(gamma=0.1, n_particles=10, truncation_k=0)

    def test_deterministic_limit_flagged(self):
        with pytest.warns(RuntimeWarning):
            model = NoiseModel(gamma=0.0, n_particles=10)
        assert model.deterministic
        assert model.sample(np.random.default_rng(0)) == 0.0
        with pytest.raises(ValueError):
            model.density(0.0)


class TestWrappedGaussianDensity:
    def _model(self, sigma, n=100):
        # pick gamma so that 2*pi*gamma/sqrt(n) == sigma
        return NoiseModel(gamma=sigma * math.sqrt(n) / TWO_PI, n_particles=n)

    def test_frozen_peak_value(self):
        model = self._model(math.pi / 10)
        assert wrapped_gaussian_density(0.0, model) == pytest.approx(
            DENSITY_AT_0_SIGMA_PI_10, rel=1e-14)

    def test_frozen_offpeak_values(self):
        assert wrapped_gaussian_density(0.5, self._model(math.pi / 10)) == pytest.approx(
            DENSITY_AT_05_SIGMA_PI_10, rel=1e-14)
        assert wrapped_gaussian_density(2.0, self._model(1.0)) == pytest.approx(
            DENSITY_AT_2_SIGMA_1, rel=1e-14)

    @pytest.mark.parametrize("sigma", [0.01, 0.1, 1.0, math.pi])
    def test_normalization(self, sigma):
        model = self._model(sigma)
        theta = (np.arange(4096) + 0.5) * (TWO_PI / 4096)
        integral = wrapped_gaussian_density(theta, model).mean()
        assert integral == pytest.approx(1.0, abs=1e-10)

    def test_even(self):
        model = self._model(0.3)
        theta = np.linspace(0.01, math.pi, 57)
        left = wrapped_gaussian_density(theta, model)
        right = wrapped_gaussian_density(TWO_PI - theta, model)
        np.testing.assert_allclose(left, right, rtol=1e-12)

    def test_sigma_zero_errors(self):
        with pytest.warns(RuntimeWarning):
            model = NoiseModel(gamma=0.0, n_particles=4)
        with pytest.raises(ValueError):
            wrapped_gaussian_density(1.0, model)


class TestSampler:
    def test_circular_mean_near_zero(self):
        model = NoiseModel(gamma=0.5, n_particles=100)  # sigma = pi/10
        rng = np.random.default_rng(10)
        draws = sample_wrapped_gaussian(model, rng, size=1_000_000)
        resultant = np.exp(1j * draws).mean()
        # |circular mean angle| < 3 sigma / sqrt(n)
        assert abs(np.angle(resultant)) < 3 * model.sigma / 1000

    def test_chi2_against_density(self):
        model = NoiseModel(gamma=1.0, n_particles=40)  # sigma ~ 0.99
        rng = np.random.default_rng(11)
        draws = sample_wrapped_gaussian(model, rng, size=1_000_000)
        counts = np.bincount((draws * 64 / TWO_PI).astype(int), minlength=64)
        centers = (np.arange(64) + 0.5) * (TWO_PI / 64)
        p = wrapped_gaussian_density(centers, model)
        p /= p.sum()
        expected = 1_000_000 * p
        chi2 = ((counts - expected) ** 2 / expected).sum()
        # 99.9% quantile of chi2 with 63 dof
        assert chi2 < 106.1

    def test_small_sigma_tail(self):
        model = NoiseModel(gamma=math.pi / 100 * math.sqrt(100) / TWO_PI,
                           n_particles=100)  # sigma = pi/100
        rng = np.random.default_rng(12)
        draws = sample_wrapped_gaussian(model, rng, size=1_000_000)
        dist = np.minimum(draws, TWO_PI - draws)
        assert np.count_nonzero(dist > 6 * model.sigma) <= 2

    def test_second_moment(self):
        model = NoiseModel(gamma=0.5, n_particles=100)  # sigma = pi/10
        rng = np.random.default_rng(13)
        draws = sample_wrapped_gaussian(model, rng, size=1_000_000)
        centered = np.where(draws > math.pi, draws - TWO_PI, draws)
        assert np.mean(centered**2) == pytest.approx(model.sigma**2, rel=0.01)

    def test_scalar_draw_in_range(self):
        model = NoiseModel(gamma=0.3, n_particles=10)
        rng = np.random.default_rng(14)
        for _ in range(100):
            x = sample_wrapped_gaussian(model, rng)
            assert 0.0 <= x < TWO_PI


class TestAcceptance:
    def test_peak_normalization(self):
        bias = BiasModel(gamma_prime=0.2, n_particles=50)
        assert acceptance_probability(0.0, bias) == 1.0

    def test_even(self):
        bias = BiasModel(gamma_prime=0.2, n_particles=50)
        x = np.linspace(0.0, math.pi / 2, 33)
        np.testing.assert_allclose(acceptance_probability(x, bias),
                                   acceptance_probability(-x, bias), rtol=1e-12)

    def test_range(self):
        bias = BiasModel(gamma_prime=1.0, n_particles=4)
        x = np.linspace(-math.pi / 2 + 1e-9, math.pi / 2, 101)
        h = acceptance_probability(x, bias)
        assert np.all((h > 0) & (h <= 1))

    def test_one_sigma_value(self):
        # tau <= pi/20 makes the periodization negligible: H(tau) = e^{-1/2}
        n = 64
        gamma_prime = (math.pi / 20) * math.sqrt(n) / TWO_PI
        bias = BiasModel(gamma_prime=gamma_prime, n_particles=n)
        assert bias.tau == pytest.approx(math.pi / 20)
        assert acceptance_probability(bias.tau, bias) == pytest.approx(
            math.exp(-0.5), abs=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            BiasModel(gamma_prime=0.0, n_particles=10)
