"""Transform structure, transformed SDE, flow derivative, convergence ladders."""

import math

import numpy as np
import pytest

from levyflow.errors import (
    AdmissibilityError,
    InverseNoConvergence,
    R0SearchFailure,
    StateEscape,
)
from levyflow.models import IsotropicStable, radial_levy_density
from levyflow.pde import CappedPowerDrift, SolverGrid, ZeroDrift, mollify_drift, solve_mild, SinusoidField
from levyflow.rng import RngStream
from levyflow.samplers import sample_subordinate_bm_path
from levyflow.zvonkin import (
    build_transform,
    direct_euler_flow,
    phi,
    phi_inverse,
    select_r0,
    solve_flow,
    tail_integral_direct,
    transformed_drift_a,
    transformed_jump_g,
)


class TestThresholdRule:
    def test_zero_drift_gives_half(self):
        assert select_r0(0.0, 0.5) == 0.5

    def test_spec_arithmetic(self):
        # C0 = 1, gamma = 1/2: r0 = 1/2 fails (0.707 + 0.75 > 1) but
        # r0 = 1/4 passes (0.5 + 0.375 < 1)
        assert 1.0 * 0.5 ** 0.5 + 1.5 * 0.5 > 1.0
        assert 1.0 * 0.25 ** 0.5 + 1.5 * 0.25 < 1.0
        assert select_r0(1.0, 0.5) == 0.25

    def test_unsatisfiable(self):
        with pytest.raises(R0SearchFailure):
            select_r0(1e9, 1e-6)


class TestTrivialTransform:
    @pytest.fixture(scope="class")
    def trivial(self):
        grid = SolverGrid(half_period=32.0, n_x=2048, n_steps=64)
        return build_transform(IsotropicStable(alpha=1.5, dim=1), ZeroDrift(),
                               gamma=0.15, grid=grid)

    def test_identity_structure(self, trivial):
        assert trivial.r0 == 0.5
        assert trivial.c0 == 0.0
        ys = np.linspace(-10, 10, 41)
        np.testing.assert_array_equal(phi_inverse(trivial, 0.3, ys), ys)
        np.testing.assert_allclose(transformed_jump_g(trivial, 0.2, ys, 0.7), 0.7)
        np.testing.assert_allclose(transformed_drift_a(trivial, 0.2, ys), 0.0)

    def test_flow_reproduces_raw_path(self, trivial):
        m = IsotropicStable(alpha=1.5, dim=1)
        path = sample_subordinate_bm_path(m, 64, 100, master_seed=21)
        fs = solve_flow(trivial, path, 0.3)
        zcum = np.cumsum(path.z_incr[:, :, 0], axis=1)
        live = fs.alive
        assert np.abs(fs.x[live, 1:] - (0.3 + zcum[live])).max() <= 1e-12
        np.testing.assert_allclose(fs.grad_x[live], 1.0)
        # accumulator equals W_{S_t} for the zero-drift flow
        wcum = np.cumsum(np.diff(path.w_vals[:, :, 0], axis=1), axis=1)
        assert np.abs(fs.bismut_acc[live, 1:] - wcum[live]).max() <= 1e-12


class TestTransformStructure:
    def test_contraction_norm(self, transform_15_07):
        sol = transform_15_07.solution
        assert sol.grad_sup + sol.grad_holder <= 0.5

    def test_bilipschitz_sandwich(self, transform_15_07):
        rng = RngStream(5, 0).generator()
        xs, ys = rng.uniform(-24, 24, 10_000), rng.uniform(-24, 24, 10_000)
        for t in (0.0, 0.5, 1.0):
            r = np.abs(phi(transform_15_07, t, xs) - phi(transform_15_07, t, ys)) \
                / np.abs(xs - ys)
            assert r.min() >= 0.5 and r.max() <= 1.5

    def test_inverse_round_trip(self, transform_15_07):
        rng = RngStream(6, 0).generator()
        ys = rng.uniform(-24, 24, 10_000)
        rt = phi(transform_15_07, 0.3, phi_inverse(transform_15_07, 0.3, ys))
        assert np.abs(rt - ys).max() <= 1e-9

    def test_jump_map_bounds_held_out(self, transform_15_07):
        tr = transform_15_07
        rng = RngStream(7, 0).generator()
        ys = rng.uniform(-20, 20, 2000)
        zs = rng.uniform(-3, 3, 2000)
        gv = transformed_jump_g(tr, 0.4, ys, zs)
        assert (np.abs(gv) <= 1.5 * np.abs(zs) + 1e-12).all()
        eps = 2.0 ** -10
        for z in (0.01, 0.1, 0.5, 2.0):
            dg = np.abs(transformed_jump_g(tr, 0.6, ys + eps, z)
                        - transformed_jump_g(tr, 0.6, ys - eps, z)) / (2 * eps)
            assert dg.max() <= tr.c0 * min(1.0, abs(z) ** tr.gamma)

    def test_threshold_rule_holds(self, transform_15_07):
        tr = transform_15_07
        assert tr.c0 * tr.r0 ** tr.gamma + 1.5 * tr.r0 < 1.0

    def test_drift_bounded(self, transform_15_07):
        tr = transform_15_07
        sup_a = float(np.abs(tr.a_grid).max())
        assert sup_a <= tr.c2 * (1.0 + tr.drift.bound_sup) + 1e-9

    def test_admissibility_guard(self):
        grid = SolverGrid(half_period=16.0, n_x=512, n_steps=32)
        with pytest.raises(AdmissibilityError):
            # beta = 0.2 < beta0 = 0.25 for alpha = 1.5
            build_transform(IsotropicStable(alpha=1.5, dim=1),
                            CappedPowerDrift(beta=0.2), gamma=0.02, grid=grid)

    def test_inverse_iteration_cap_raises(self, transform_15_07):
        # an unreachable tolerance within the iteration budget must surface
        # as a convergence failure, never a silent wrong answer
        with pytest.raises(InverseNoConvergence):
            phi_inverse(transform_15_07, 0.3, np.array([0.1, 0.4]), max_iter=1)


class TestTailIntegral:
    def test_synthetic_sinusoid_u(self, pde_grid_pi):
        # with u_t = a(t) sin(x), the grid tail operator matches a direct
        # quadrature oracle of the jump integral at grid nodes to 1e-6
        model = IsotropicStable(alpha=1.5, dim=1)
        grid = pde_grid_pi
        tr = build_transform(model, ZeroDrift(), gamma=0.15, grid=grid)
        sol = solve_mild(model, ZeroDrift(), SinusoidField(1.0), lam=1.0,
                         grid=grid, gamma=0.15)
        tr.solution = sol
        from levyflow.zvonkin import _tail_multiplier

        kappa = radial_levy_density(model)
        mult = _tail_multiplier(kappa, 0.25, grid.xi, None)
        tail_grid = np.fft.irfft(np.fft.rfft(sol.u, axis=1) * mult[None, :],
                                 n=grid.n_x, axis=1)
        i_t = 64
        # the solver's u row IS a single Fourier mode: recover its amplitude
        # and hand the oracle the analytic function (same object both routes)
        sin_row = np.sin(grid.x)
        amp = float(sol.u[i_t] @ sin_row / (sin_row @ sin_row))
        exact_u = lambda xx: amp * np.sin(np.asarray(xx, dtype=float))
        for node in (512, 900, 1300):
            xq = float(grid.x[node])
            direct = tail_integral_direct(exact_u, kappa, 0.25, xq,
                                          sup_u=sol.sup_u)
            assert abs(direct - tail_grid[i_t, node]) <= 1e-6

    def test_closed_form_consistency(self, pde_grid_pi):
        # u = sin: int (u(x+z) - u(x)) nu(dz) over |z| >= r0 equals
        # psi_tail(1) sin(x) with psi_tail from cosine quadrature
        from scipy import integrate as sint

        model = IsotropicStable(alpha=1.5, dim=1)
        kappa = radial_levy_density(model)
        osc, _ = sint.quad(lambda r: 2.0 * kappa(r), 0.25, 10_000.0,
                           weight="cos", wvar=1.0, limit=2000)
        mass, _ = sint.quad(lambda r: 2.0 * kappa(r), 0.25, 10_000.0, limit=400)
        direct = tail_integral_direct(lambda x: np.sin(np.asarray(x)), kappa,
                                      0.25, 0.7)
        assert direct == pytest.approx((osc - mass) * math.sin(0.7), abs=1e-6)


class TestFlow:
    def test_split_threshold_applied(self, transform_15_07, model_15):
        path = sample_subordinate_bm_path(model_15, 256, 50, master_seed=31)
        fs = solve_flow(transform_15_07, path, 0.0)
        assert fs.path.r0 == transform_15_07.r0
        if fs.path.big_z.size:
            assert (np.abs(fs.path.big_z) > transform_15_07.r0).all()

    def test_x_is_inverse_of_y(self, transform_15_07, model_15):
        path = sample_subordinate_bm_path(model_15, 256, 50, master_seed=32)
        fs = solve_flow(transform_15_07, path, 0.5)
        i = 128
        xrec = phi_inverse(transform_15_07, 0.5, fs.y[:, i])
        np.testing.assert_allclose(xrec, fs.x[:, i], atol=1e-9)

    def test_gradient_identity_at_zero(self, transform_15_07, model_15):
        path = sample_subordinate_bm_path(model_15, 256, 20, master_seed=33)
        fs = solve_flow(transform_15_07, path, 0.3)
        np.testing.assert_allclose(fs.grad_x[:, 0], 1.0, atol=1e-10)

    def test_gradient_matches_pathwise_difference(self, transform_15_07, model_15):
        path = sample_subordinate_bm_path(model_15, 256, 500, master_seed=34)
        eps = 1e-4
        fs = solve_flow(transform_15_07, path, 0.3)
        fp = solve_flow(transform_15_07, path, 0.3 + eps)
        fm = solve_flow(transform_15_07, path, 0.3 - eps)
        keep = fs.alive & fp.alive & fm.alive
        fd = (fp.x[keep, -1] - fm.x[keep, -1]) / (2 * eps)
        assert np.abs(fs.grad_x[keep, -1] - fd).mean() <= 5e-3

    def test_direct_vs_transformed_consistency(self, flow_grid):
        # nearly Lipschitz drift: the two schemes agree within the Euler
        # budget estimated from a refinement study on common noise
        m = IsotropicStable(alpha=1.5, dim=1)
        b = CappedPowerDrift(beta=0.9, amplitude=1.0)
        tr = build_transform(m, b, gamma=0.15, grid=flow_grid)
        fine = sample_subordinate_bm_path(m, 512, 400, master_seed=35)
        coarse_z = fine.z_incr.reshape(400, 256, 2, 1).sum(axis=2)
        import dataclasses

        coarse = dataclasses.replace(
            fine, t_grid=fine.t_grid[::2], z_incr=coarse_z,
            small_comp=coarse_z.copy(),
            s_vals=fine.s_vals[:, ::2], w_vals=fine.w_vals[:, ::2],
            big_rep=np.empty(0, dtype=np.int64),
            big_step=np.empty(0, dtype=np.int64),
            big_z=np.empty((0, 1)), r0=None,
        )
        fs = solve_flow(tr, coarse, 0.3)
        xd, ad = direct_euler_flow(b, coarse, 0.3)
        keep = fs.alive & ad
        gap = np.abs(fs.x - xd).max(axis=1)[keep].mean()
        # refinement-estimated bias of each scheme (h vs h/2, common noise)
        xf, af = direct_euler_flow(b, fine, 0.3)
        bias_direct = np.abs(xf[:, ::2] - xd).max(axis=1)[keep & af].mean()
        fs_fine = solve_flow(tr, fine, 0.3)
        live = keep & af & fs_fine.alive
        bias_transformed = np.abs(fs_fine.x[:, ::2] - fs.x).max(axis=1)[live].mean()
        assert gap <= 3.0 * (bias_direct + bias_transformed + 1e-3)

    def test_euler_refinement_order(self, transform_15_07, model_15):
        import dataclasses

        fine = sample_subordinate_bm_path(model_15, 1024, 300, master_seed=36)

        def coarsen(p, k):
            z = p.z_incr.reshape(p.n_rep, p.n_steps // k, k, 1).sum(axis=2)
            return dataclasses.replace(
                p, t_grid=p.t_grid[::k], z_incr=z, small_comp=z.copy(),
                s_vals=p.s_vals[:, ::k], w_vals=p.w_vals[:, ::k],
                big_rep=np.empty(0, dtype=np.int64),
                big_step=np.empty(0, dtype=np.int64),
                big_z=np.empty((0, 1)), r0=None)

        runs = {k: solve_flow(transform_15_07, coarsen(fine, k), 0.3)
                for k in (4, 2, 1)}
        live = runs[4].alive & runs[2].alive & runs[1].alive
        d_coarse = np.abs(runs[4].y - runs[2].y[:, ::2]).max(axis=1)[live].mean()
        d_fine = np.abs(runs[2].y - runs[1].y[:, ::2]).max(axis=1)[live].mean()
        zeta = math.log2(d_coarse / d_fine)
        assert zeta > 0.0  # positive empirical strong order

    def test_moment_bounds_finite_stable(self, transform_15_07, model_15):
        stats = {}
        for x0 in (-1.0, 0.0, 1.0):
            path = sample_subordinate_bm_path(model_15, 256, 1000, master_seed=37)
            fs = solve_flow(transform_15_07, path, x0)
            sup = np.abs(fs.grad_y).max(axis=1)[fs.alive]
            stats[x0] = [float((sup ** p).mean()) for p in (2, 4)]
        vals = np.array(list(stats.values()))
        assert np.isfinite(vals).all()
        assert vals.max() / vals.min() < 10.0

    def test_start_outside_domain_raises(self, transform_15_07, model_15):
        path = sample_subordinate_bm_path(model_15, 256, 2, master_seed=40)
        with pytest.raises(StateEscape):
            solve_flow(transform_15_07, path, 100.0)

    def test_mollification_ladder_decreases(self, model_15, drift_07, flow_grid):
        from levyflow.pde import choose_lambda

        lam, _ = choose_lambda(model_15, drift_07, drift_07, 0.15, grid=flow_grid)
        path = sample_subordinate_bm_path(model_15, 256, 300, master_seed=38)
        flows = {}
        for n in (4, 8, 16):
            tr = build_transform(model_15, mollify_drift(drift_07, n), 0.15,
                                 grid=flow_grid, lam=lam)
            flows[n] = solve_flow(tr, path, 0.3)
        d = {}
        for n in (4, 8):
            a, b2 = flows[n], flows[2 * n]
            keep = a.alive & b2.alive
            d[n] = float(np.minimum(np.abs(a.x - b2.x).max(axis=1), 1.0)[keep].mean())
        assert d[8] < d[4]
