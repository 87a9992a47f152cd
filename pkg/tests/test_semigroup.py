"""Semigroup evaluation, gradient weights, scaling fits, negative moments."""

import math

import numpy as np
import pytest

from levyflow.errors import InsufficientDecades
from levyflow.models import (
    CylindricalStable,
    IsotropicStable,
    RelativisticStable,
    StableSubordinator,
    SubordinateBM,
)
from levyflow.semigroup import (
    CappedPower,
    Constant,
    Sinusoid,
    SmoothedIndicator,
    apply_semigroup,
    fit_gradient_scaling,
    gradient_semigroup,
    negative_moment,
)

CAUCHY = IsotropicStable(alpha=1.0, dim=1)


class TestHolderDeclarations:
    @pytest.mark.parametrize("f", [
        Sinusoid(freq=(1.3,)), CappedPower(beta=0.5), CappedPower(beta=0.8),
        SmoothedIndicator(radius=0.3, width=0.4), Constant(2.0),
    ])
    def test_declared_pair_holds_on_grid(self, f):
        beta, lam = f.holder
        rng = np.random.default_rng(3)
        x = rng.uniform(-3, 3, (400, 1))
        y = rng.uniform(-2, 2, (400, 1))
        lhs = np.abs(f(x + y) - f(x))
        assert (lhs <= lam * np.abs(y[:, 0]) ** beta + 1e-12).all()


class TestApplySemigroup:
    def test_sinusoid_multiplier_spectral(self):
        val, bound = apply_semigroup(CAUCHY, Sinusoid(freq=(1.0,)), 1.0,
                                     [math.pi / 2], method="spectral")
        assert val == pytest.approx(math.exp(-1.0), abs=1e-10)
        assert bound < 1e-10

    def test_constant_conservative(self):
        val, se = apply_semigroup(CAUCHY, Constant(3.0), 0.5, [0.2],
                                  n_samples=10_000, master_seed=1)
        assert val == pytest.approx(3.0, abs=1e-12)

    def test_subordination_identity_mc(self):
        m = RelativisticStable(alpha=1.2, m=1.0)
        f = Sinusoid(freq=(1.0,))
        val, se = apply_semigroup(m, f, 0.7, [0.4], n_samples=200_000, master_seed=5)
        phi = float(m.subordinator.laplace_exponent(0.5))
        assert abs(val - math.exp(-0.7 * phi) * math.sin(0.4)) <= 3.0 * se

    def test_mc_agrees_with_spectral(self):
        f = CappedPower(beta=0.5)
        mc, se = apply_semigroup(CAUCHY, f, 0.5, [0.3], n_samples=400_000,
                                 master_seed=7)
        sp, bound = apply_semigroup(CAUCHY, f, 0.5, [0.3], method="spectral")
        assert abs(mc - sp) <= 3.0 * se + bound


class TestGradientSemigroup:
    def test_cauchy_sinusoid(self):
        est, se = gradient_semigroup(CAUCHY, Sinusoid(freq=(1.0,)), 0.5, [0.0],
                                     n_samples=200_000, master_seed=3)
        assert abs(est[0] - math.exp(-0.5)) <= 3.0 * se[0]

    def test_constant_centred(self):
        est, se = gradient_semigroup(CAUCHY, Constant(5.0), 0.5, [0.1],
                                     n_samples=50_000, master_seed=4)
        assert est[0] == 0.0

    def test_cylindrical_cross_component_vanishes(self):
        m = CylindricalStable(blocks=((1.2, 1), (1.8, 1)))
        f = Sinusoid(freq=(1.0, 0.0))
        est, se = gradient_semigroup(m, f, 0.5, [0.0, 0.0], n_samples=100_000,
                                     master_seed=6)
        assert abs(est[1]) <= 3.0 * se[1] + 1e-12

    def test_agrees_with_finite_difference(self):
        # central difference of T_t f with common random numbers
        m = SubordinateBM(StableSubordinator(rho=0.6, scale=1.0), dim=1)
        f = CappedPower(beta=0.7)
        t, x, eps, n = 0.4, 0.6, 1e-3, 300_000
        est, se = gradient_semigroup(m, f, t, [x], n_samples=n, master_seed=8)
        from levyflow.rng import RngStream
        from levyflow.semigroup import sample_terminal

        rng = RngStream(8, 0).generator()
        (z,) = sample_terminal(m, t, n, rng)
        diff = (f(np.array([x + eps]) + z) - f(np.array([x - eps]) + z)) / (2 * eps)
        fd, fd_se = diff.mean(), diff.std(ddof=1) / math.sqrt(n)
        assert abs(est[0] - fd) <= 3.0 * math.hypot(se[0], fd_se) + 1e-3


class TestGradientScaling:
    def test_subbm_capped_power_slopes(self):
        t_grid = [2.0 ** (-k) for k in range(1, 11)]
        fit = fit_gradient_scaling(CAUCHY, CappedPower(beta=0.5), t_grid,
                                   n_samples=50_000, master_seed=11)
        assert fit.slope == pytest.approx(-0.5, abs=0.1)
        fit = fit_gradient_scaling(CAUCHY, CappedPower(beta=1.0), t_grid,
                                   n_samples=50_000, master_seed=12)
        assert fit.slope == pytest.approx(0.0, abs=0.1)

    def test_scale_invariance_of_slope(self):
        # slope is exactly invariant under f -> c f (log shift cancels)
        t_grid = [2.0 ** (-k) for k in range(1, 6)]
        a = fit_gradient_scaling(CAUCHY, CappedPower(beta=0.5, amplitude=1.0),
                                 t_grid, n_samples=20_000, master_seed=13)
        b = fit_gradient_scaling(CAUCHY, CappedPower(beta=0.5, amplitude=7.0),
                                 t_grid, n_samples=20_000, master_seed=13)
        assert a.slope == pytest.approx(b.slope, abs=1e-9)
        assert b.intercept - a.intercept == pytest.approx(math.log(7.0), abs=1e-9)

    def test_insufficient_decades(self):
        with pytest.raises(InsufficientDecades):
            fit_gradient_scaling(CAUCHY, CappedPower(beta=0.5), [0.5, 0.25],
                                 n_samples=1000)


class TestNegativeMoment:
    def test_closed_form_half(self):
        # rho = 1/2, p = 1/2, t = 1: E S^(-1/2) = 2/sqrt(pi)
        spec = StableSubordinator(rho=0.5)
        out = negative_moment(spec, 0.5, [1.0], n_samples=400_000, master_seed=3)
        target = 2.0 / math.sqrt(math.pi)
        assert out["oracle"][0] == pytest.approx(target, rel=1e-8)
        assert abs(out["mc"][0] - out["oracle"][0]) <= 3.0 * out["se"][0]

    def test_quadrature_oracle_independent(self):
        # generic-oracle value for rho = 0.6, p = 0.4 against the Gamma form
        spec = StableSubordinator(rho=0.6)
        out = negative_moment(spec, 0.4, [0.7], n_samples=10_000, master_seed=4)
        closed = math.gamma(0.4 / 0.6) / (0.6 * math.gamma(0.4)) * 0.7 ** (-0.4 / 0.6)
        assert out["oracle"][0] == pytest.approx(closed, rel=1e-6)

    def test_self_similar_ratio(self):
        spec = StableSubordinator(rho=0.5)
        out = negative_moment(spec, 0.3, [1.0, 0.25], n_samples=200_000,
                              master_seed=5)
        # E S_t^-p = t^(-p/rho) E S_1^-p exactly
        ratio = out["mc"][0] / out["mc"][1]
        assert ratio == pytest.approx(0.25 ** 0.6, rel=0.02)

    def test_slope(self):
        spec = StableSubordinator(rho=0.5)
        out = negative_moment(spec, 0.3, [2.0 ** (-k) for k in range(8)],
                              n_samples=100_000, master_seed=6)
        assert out["slope"] == pytest.approx(-0.6, abs=0.05)

    def test_mc_matches_oracle_everywhere(self):
        spec = StableSubordinator(rho=0.5)
        out = negative_moment(spec, 0.5, [2.0 ** (-k) for k in range(6)],
                              n_samples=200_000, master_seed=7)
        assert (np.abs(out["mc"] - out["oracle"]) <= 3.0 * out["se"]).all()
