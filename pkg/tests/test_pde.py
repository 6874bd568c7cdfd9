import math

import numpy as np
import pytest

from swarmkin.oracle import (CorrelationParams, FourierMarginal, m_density,
                             m_fourier, marginal_recursion)
from swarmkin.pde import (GridField, PdeParams, bdg_hierarchy_rhs,
                          bdg_nonlinear_diffusion_step, bdg_stable_dt,
                          cl_f1_solve, cl_f2_solve,
                          cl_hierarchy_residual_fourier)
from swarmkin.torus import TWO_PI

GAMMA = 1.0 / 20.0


@pytest.fixture(scope="module")
def params():
    return CorrelationParams.from_gamma(GAMMA)


def band_limited_pair_field(p, g):
    """Stationary pair correlation synthesized from the resolved modes only."""
    n = np.fft.fftfreq(g, d=1.0 / g)
    coeffs = np.where(n[:, None] + n[None, :] == 0, m_fourier(n[:, None], p), 0.0)
    return GridField(np.fft.ifft2(coeffs * g * g).real)


class TestClF1Solve:
    def test_uniform_unchanged(self):
        out = cl_f1_solve(GridField(np.ones(64)), PdeParams(sigma=0.4, t_end=3.0))
        np.testing.assert_allclose(out.values, 1.0, atol=1e-14)

    def test_single_mode_exact(self):
        g = 128
        theta = np.arange(g) * TWO_PI / g
        sigma, t = 0.4, 2.5
        out = cl_f1_solve(GridField(1.0 + np.cos(theta)),
                          PdeParams(sigma=sigma, t_end=t))
        expected = 1.0 + math.exp(-0.5 * sigma**2 * t) * np.cos(theta)
        np.testing.assert_allclose(out.values, expected, atol=1e-13)

    def test_mean_preserved(self):
        rng = np.random.default_rng(41)
        f0 = GridField(1.0 + 0.2 * rng.standard_normal(64))
        out = cl_f1_solve(f0, PdeParams(sigma=0.3, t_end=1.0))
        assert out.mean == pytest.approx(f0.mean, abs=1e-14)

    def test_requires_1d(self):
        with pytest.raises(ValueError):
            cl_f1_solve(GridField(np.ones((8, 8))), PdeParams(sigma=0.1))


class TestClF2Solve:
    def test_converges_to_stationary_pair_correlation(self, params):
        g = 256
        p = PdeParams(sigma=params.sigma, dt=0.5, t_end=12.0)
        out = cl_f2_solve(GridField(np.ones(g)), GridField(np.ones((g, g))), p)
        band = band_limited_pair_field(params, g)
        assert np.max(np.abs(out.values - band.values)) < 1e-8
        # against the pointwise analytic density the error is the spectral tail
        grid = np.arange(g) * TWO_PI / g
        pointwise = m_density(grid[:, None] - grid[None, :], params)
        tail = 2.0 / (params.sigma_bar**2 * (g // 2 - 1))
        assert np.max(np.abs(out.values - pointwise)) < tail

    def test_band_limited_equilibrium_is_stationary(self, params):
        g = 128
        band = band_limited_pair_field(params, g)
        out = cl_f2_solve(GridField(np.ones(g)), band,
                          PdeParams(sigma=params.sigma, dt=0.25, t_end=1.0))
        assert np.max(np.abs(out.values - band.values)) < 1e-10

    def test_off_source_mode_decay_rate(self):
        g = 64
        sigma = 0.3
        theta = np.arange(g) * TWO_PI / g
        n1, n2 = 2, 1
        mode = np.cos(n1 * theta[:, None] + n2 * theta[None, :])
        t = 0.7
        out = cl_f2_solve(GridField(np.zeros(g)), GridField(mode.copy()),
                          PdeParams(sigma=sigma, dt=0.35, t_end=t))
        rate = 2.0 + 0.5 * sigma**2 * (n1**2 + n2**2)
        np.testing.assert_allclose(out.values, math.exp(-rate * t) * mode,
                                   atol=1e-12)

    def test_mass_mode_tracks_source(self, params):
        g = 64
        out = cl_f2_solve(GridField(np.ones(g)), GridField(np.ones((g, g))),
                          PdeParams(sigma=params.sigma, dt=0.5, t_end=8.0))
        assert out.mean == pytest.approx(1.0, abs=1e-12)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            cl_f2_solve(GridField(np.ones(32)), GridField(np.ones((64, 64))),
                        PdeParams(sigma=0.1))


class TestNonlinearDiffusion:
    def _params(self, f, sigma=0.3, tau=0.1):
        p = PdeParams(sigma=sigma, tau=tau, dt=1.0, t_end=1.0)
        return PdeParams(sigma=sigma, tau=tau, dt=bdg_stable_dt(f, p), t_end=1.0)

    def test_uniform_stationary(self):
        f = GridField(np.ones(64))
        out = bdg_nonlinear_diffusion_step(f, self._params(f))
        np.testing.assert_array_equal(out.values, f.values)

    def test_mass_conserved(self):
        g = 128
        theta = np.arange(g) * TWO_PI / g
        f = GridField(1.0 + 0.5 * np.cos(theta))
        p = self._params(f)
        cur = f
        for _ in range(50):
            cur = bdg_nonlinear_diffusion_step(cur, p)
        assert cur.mean == pytest.approx(f.mean, abs=1e-12)

    def test_energy_dissipation_matches_identity(self):
        # d/dt int F^2 = -4 (s^2 - t^2) int F (F')^2 for the semi-discrete flux
        g = 256
        theta = np.arange(g) * TWO_PI / g
        f = GridField(1.0 + 0.5 * np.cos(theta))
        p = self._params(f)
        out = bdg_nonlinear_diffusion_step(f, p)
        dtheta = TWO_PI / g
        energy_rate = (np.sum(out.values**2) - np.sum(f.values**2)) * dtheta / p.dt
        v, vr = f.values, np.roll(f.values, -1)
        face = 0.5 * (v + vr)
        grad = (vr - v) / dtheta
        expected = -4.0 * (p.sigma**2 - p.tau**2) * np.sum(face * grad**2) * dtheta
        assert energy_rate == pytest.approx(expected, rel=1e-3)
        assert energy_rate < 0

    def test_energy_monotone(self):
        g = 64
        theta = np.arange(g) * TWO_PI / g
        cur = GridField(1.0 + 0.5 * np.cos(theta))
        p = self._params(cur)
        energies = [np.sum(cur.values**2)]
        for _ in range(500):
            cur = bdg_nonlinear_diffusion_step(cur, p)
            energies.append(np.sum(cur.values**2))
        diffs = np.diff(energies)
        assert np.all(diffs <= 1e-14)

    def test_backwards_refused(self):
        f = GridField(np.ones(32))
        with pytest.raises(ValueError, match="backwards"):
            bdg_nonlinear_diffusion_step(f, PdeParams(sigma=0.1, tau=0.2, dt=1e-5))

    def test_degenerate_scale_identity(self):
        f = GridField(1.0 + 0.1 * np.cos(np.arange(32) * TWO_PI / 32))
        with pytest.warns(RuntimeWarning, match="degenerate"):
            out = bdg_nonlinear_diffusion_step(f, PdeParams(sigma=0.2, tau=0.2,
                                                            dt=1e-5))
        np.testing.assert_array_equal(out.values, f.values)

    def test_cfl_violation_raises(self):
        f = GridField(1.0 + 0.5 * np.cos(np.arange(32) * TWO_PI / 32))
        with pytest.raises(ValueError, match="CFL"):
            bdg_nonlinear_diffusion_step(f, PdeParams(sigma=0.5, tau=0.0, dt=1.0))


class TestBdgHierarchyRhs:
    def test_uniform_annihilated(self):
        p = PdeParams(sigma=0.4, tau=0.1)
        out = bdg_hierarchy_rhs(GridField(np.ones((64, 64))), p, k=1)
        np.testing.assert_allclose(out.values, 0.0, atol=1e-12)
        out3 = bdg_hierarchy_rhs(GridField(np.ones((24, 24, 24))), p, k=2)
        np.testing.assert_allclose(out3.values, 0.0, atol=1e-12)

    def test_pair_correlation_annihilated(self, params):
        # the symmetrized second derivative kills functions of theta1 - theta2
        g = 128
        n = np.fft.fftfreq(g, d=1.0 / g)
        coeffs = np.where(n[:, None] + n[None, :] == 0,
                          m_fourier(n[:, None], params), 0.0)
        field = GridField(np.fft.ifft2(coeffs * g * g).real)
        out = bdg_hierarchy_rhs(field, PdeParams(sigma=0.4, tau=0.1), k=1)
        assert np.max(np.abs(out.values)) < 1e-9

    def test_random_difference_polynomials_annihilated(self):
        g = 64
        theta = np.arange(g) * TWO_PI / g
        rng = np.random.default_rng(42)
        diff = theta[:, None] - theta[None, :]
        field = np.ones((g, g))
        for n, (a, b) in enumerate(rng.standard_normal((4, 2)), start=1):
            field += a * np.cos(n * diff) + b * np.sin(n * diff)
        out = bdg_hierarchy_rhs(GridField(field), PdeParams(sigma=0.3, tau=0.2), k=1)
        assert np.max(np.abs(out.values)) < 1e-10

    def test_k2_against_symbolic_derivative(self):
        # f3 = phi(theta1 - theta2): each pairing contributes phi'' on its
        # diagonal restriction, so the total is 2 (s^2 - t^2) phi''
        g = 48
        theta = np.arange(g) * TWO_PI / g
        phi = lambda x: 1 + 0.3 * np.cos(x) + 0.1 * np.sin(2 * x)  # noqa: E731
        phidd = lambda x: -0.3 * np.cos(x) - 0.4 * np.sin(2 * x)  # noqa: E731
        f3 = phi(theta[:, None, None] - theta[None, :, None]) + \
            0.0 * theta[None, None, :]
        p = PdeParams(sigma=0.5, tau=0.2)
        out = bdg_hierarchy_rhs(GridField(f3), p, k=2)
        expected = (p.sigma**2 - p.tau**2) * 2.0 * phidd(theta[:, None] - theta[None, :])
        np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_unsupported_k(self):
        with pytest.raises(ValueError, match="unsupported"):
            bdg_hierarchy_rhs(GridField(np.ones((4, 4, 4, 4))),
                              PdeParams(sigma=0.1), k=3)
        with pytest.raises(ValueError):
            bdg_hierarchy_rhs(GridField(np.ones((8, 8))), PdeParams(sigma=0.1), k=2)


class TestHierarchyResidual:
    def test_recursion_is_stationary_k2(self, params):
        fm1 = marginal_recursion(1, params, n_max=64)
        fm2 = marginal_recursion(2, params, n_max=64)
        assert cl_hierarchy_residual_fourier(fm2, fm1, params) < 1e-12

    def test_recursion_is_stationary_k3(self, params):
        fm2 = marginal_recursion(2, params, n_max=16)
        fm3 = marginal_recursion(3, params, n_max=16)
        assert cl_hierarchy_residual_fourier(fm3, fm2, params) < 1e-12

    def test_chaotic_ansatz_obstruction(self, params):
        # the product ansatz leaves the full delta-source mass at every
        # diagonal mode: residual exactly 2 there
        n_max = 16
        fm1 = FourierMarginal(k=1, n_max=n_max, coefficients={(0,): 1.0})
        fm2 = FourierMarginal(k=2, n_max=n_max, coefficients={(0, 0): 1.0})
        assert cl_hierarchy_residual_fourier(fm2, fm1, params) == pytest.approx(2.0)
        sb2 = params.sigma_bar**2
        for n in (1, 2, 5, n_max - 1):
            gain = 2.0
            ck = fm2.get((n, -n))
            res = gain - 2.0 * ck - sb2 * 2 * n**2 * ck
            assert res == 2.0

    def test_inconsistent_truncation_rejected(self, params):
        fm1 = marginal_recursion(1, params, n_max=8)
        fm2 = marginal_recursion(2, params, n_max=16)
        with pytest.raises(ValueError):
            cl_hierarchy_residual_fourier(fm2, fm1, params)
        fm3 = marginal_recursion(3, params, n_max=8)
        with pytest.raises(ValueError):
            cl_hierarchy_residual_fourier(fm3, fm3, params)


class TestGridField:
    def test_square_required(self):
        with pytest.raises(ValueError):
            GridField(np.ones((4, 8)))

    def test_params_validation(self):
        with pytest.raises(ValueError):
            PdeParams(sigma=-0.1)
        with pytest.raises(ValueError):
            PdeParams(sigma=0.1, dt=0.0)
