"""Poisson-kernel quadrature and the Holder-norm characterisation."""

import math

import numpy as np
import pytest

from levyflow.errors import InsufficientDecades, QuadratureFailure
from levyflow.holder import (
    PoissonKernelGrid,
    commutator,
    holder_seminorm_estimate,
    kernel_theta_derivative,
    poisson_integral,
    poisson_theta_derivative,
)
from levyflow.semigroup import CappedPower, Constant, Sinusoid, fit_loglog

SIN = Sinusoid(freq=(1.0,))
ONE = Constant(1.0)


class TestKernel:
    def test_normalisation_across_theta(self):
        for th in PoissonKernelGrid(n_theta_decades=8).theta_grid:
            assert poisson_integral(ONE, float(th), 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_pointwise_derivative_bound(self):
        # |d_theta p_theta(x)| <= C (theta + |x|)^(-d-1)
        u = np.linspace(-20.0, 20.0, 801)
        for th in (0.25, 1.0, 4.0):
            ratio = np.abs(kernel_theta_derivative(u, th)) * (th + np.abs(u)) ** 2
            assert ratio.max() <= 2.0 / math.pi + 1e-9

    def test_far_field_decay(self):
        # theta large, f compactly supported: |P f(0)| <= c_d theta^-d ||f||_1
        f = CappedPower(beta=0.5)  # varies only on |x| <= 1, then constant 1
        g = lambda x: f(x) - 1.0   # compactly supported version
        val = poisson_integral(CappedPower(beta=0.5), 1000.0, 0.0)
        # P of the constant 1 is 1; the compact part is O(1/theta)
        assert abs(val - 1.0) <= (1.0 / math.pi) / 1000.0 * 2.1


class TestPoissonIntegral:
    def test_sinusoid_multiplier(self):
        assert poisson_integral(SIN, 1.0, math.pi / 2) == pytest.approx(
            math.exp(-1.0), abs=1e-8)

    def test_derivative_sinusoid(self):
        assert poisson_theta_derivative(SIN, 1.0, math.pi / 2) == pytest.approx(
            -math.exp(-1.0), abs=1e-8)

    def test_derivative_constant_zero(self):
        assert poisson_theta_derivative(ONE, 1.0, 0.3) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("f,x,th", [
        (SIN, 0.43, 0.7), (CappedPower(beta=0.5), 0.2, 0.3),
        (CappedPower(beta=0.3), -0.6, 1.3),
    ])
    def test_derivative_matches_finite_difference(self, f, x, th):
        d_an = poisson_theta_derivative(f, th, x, tol=1e-9)
        eps = th * 1e-4
        d_fd = (poisson_integral(f, th + eps, x, tol=1e-9)
                - poisson_integral(f, th - eps, x, tol=1e-9)) / (2.0 * eps)
        assert abs(d_an - d_fd) / abs(d_an) <= 1e-5

    def test_unreachable_tolerance_raises(self):
        with pytest.raises(QuadratureFailure):
            poisson_integral(SIN, 1.0, 0.0, tol=1e-13)


class TestCommutator:
    def test_g_equals_one_oddness(self):
        assert commutator(SIN, ONE, 1.0, 0.0) == pytest.approx(0.0, abs=1e-9)

    def test_constant_f_exact_zero(self):
        assert commutator(Constant(2.0), SIN, 0.5, 0.3) == 0.0

    def test_reduces_to_derivative_for_unit_g(self):
        f = CappedPower(beta=0.5)
        a = commutator(f, ONE, 0.5, 0.7)
        b = poisson_theta_derivative(f, 0.5, 0.7)
        assert a == pytest.approx(b, abs=1e-9)

    def test_theta_scaling_one_sided(self):
        # bound C [f]_beta ||g|| theta^(gamma-1) for any gamma <= beta
        f, g = CappedPower(beta=0.6), SIN
        thetas = 2.0 ** (-np.arange(0, 10, dtype=float))
        xs = np.linspace(-4.0, 4.0, 17)
        sups = [max(abs(commutator(f, g, float(th), float(x))) for x in xs)
                for th in thetas]
        slope, _, _ = fit_loglog(thetas, sups)
        gamma = 0.3
        assert slope >= gamma - 1.0 - 0.1


class TestSeminorm:
    @pytest.mark.parametrize("beta", [0.3, 0.5])
    def test_slope_matches_declared_beta(self, beta):
        out = holder_seminorm_estimate(CappedPower(beta=beta), beta)
        assert out["slope"] == pytest.approx(beta - 1.0, abs=0.1)
        assert np.isfinite(out["seminorm_estimate"])

    def test_smooth_function_slope_zero(self):
        out = holder_seminorm_estimate(SIN, 1.0)
        assert out["slope"] == pytest.approx(0.0, abs=0.1)

    def test_mis_declared_beta_diverges(self):
        # a 0.3-Holder function tested at beta = 0.5: the scaled sup grows
        # along slope -0.7 as theta -> 0
        out = holder_seminorm_estimate(CappedPower(beta=0.3), 0.5)
        assert out["slope"] == pytest.approx(-0.7, abs=0.1)
        assert out["scaled"][-1] > 2.0 * out["scaled"][0]

    def test_refinement_stability(self):
        grid = PoissonKernelGrid()
        coarse = grid.theta_grid[::2]
        fine = grid.theta_grid
        a = holder_seminorm_estimate(CappedPower(beta=0.5), 0.5, theta_grid=coarse)
        b = holder_seminorm_estimate(CappedPower(beta=0.5), 0.5, theta_grid=fine)
        assert 0.5 <= b["seminorm_estimate"] / a["seminorm_estimate"] <= 2.0

    def test_insufficient_decades(self):
        with pytest.raises(InsufficientDecades):
            holder_seminorm_estimate(SIN, 1.0, theta_grid=[1.0, 0.5, 0.25])
