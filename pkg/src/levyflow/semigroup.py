"""Transition semigroup evaluation and gradient-scaling diagnostics.

``apply_semigroup`` estimates E f(x + Z_t) by Monte Carlo (all families) or
through the exact Fourier multiplier on a periodic grid (isotropic stable,
deterministic).  ``gradient_semigroup`` uses the subordination weight
W_{S_t}/S_t per block, centred by f(x) for variance control.  The scaling
fits recover the decay exponent of the gradient norm in t, the quantitative
anchor the verification harness checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InsufficientDecades, UnsupportedModel
from .models import (
    CylindricalStable,
    IsotropicStable,
    StableTypeDensity,
    SubordinateBM,
    symbol,
)
from .rng import RngStream
from .samplers import (
    _big_jump_mass,
    _sample_radii_sum_of_powers,
    _sample_radii_thinning,
    _small_moment,
    sample_subordinator_increments,
)
from .models import SumOfPowersKappa

__all__ = [
    "Sinusoid",
    "CappedPower",
    "SmoothedIndicator",
    "Constant",
    "sample_terminal",
    "apply_semigroup",
    "gradient_semigroup",
    "gradient_on_grid",
    "fit_gradient_scaling",
    "negative_moment",
    "char_function_check",
    "fit_loglog",
]


# ---------------------------------------------------------------------------
# Closed-form test functions with declared Holder data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sinusoid:
    """f(x) = amplitude * sin(freq . x + phase); Lipschitz."""

    freq: tuple = (1.0,)
    phase: float = 0.0
    amplitude: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.sin(x @ np.asarray(self.freq) + self.phase)

    @property
    def holder(self):
        return 1.0, self.amplitude * float(np.linalg.norm(self.freq))


@dataclass(frozen=True)
class CappedPower:
    """f(x) = amplitude * min(|x - center|^beta, 1); genuinely beta-Holder."""

    beta: float
    center: tuple = (0.0,)
    amplitude: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return self.amplitude * np.minimum(r ** self.beta, 1.0)

    @property
    def holder(self):
        return self.beta, self.amplitude


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


@dataclass(frozen=True)
class SmoothedIndicator:
    """Bump: 1 inside radius, 0 beyond radius + width, quintic ramp between."""

    center: tuple = (0.0,)
    radius: float = 0.5
    width: float = 0.5
    amplitude: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return self.amplitude * _smoothstep((self.radius + self.width - r) / self.width)

    @property
    def holder(self):
        # max slope of the quintic ramp is 15/8
        return 1.0, self.amplitude * 1.875 / self.width


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.value)

    @property
    def holder(self):
        return 1.0, 0.0


# ---------------------------------------------------------------------------
# One-shot terminal sampling (vectorised, single stream)
# ---------------------------------------------------------------------------


def sample_terminal(model, t, n, rng, r0=0.25, return_weights=False):
    """Draw n samples of Z_t, optionally with the subordination gradient weight.

    The weight has coordinates W^j_{S^j_t} / S^j_t within block j; it requires
    a subordinated family.  Returns (z,) or (z, weight).
    """
    if isinstance(model, (SubordinateBM, IsotropicStable, CylindricalStable)):
        if isinstance(model, CylindricalStable):
            subs = model.block_subordinators()
            dims = [dj for _a, dj in model.blocks]
        elif isinstance(model, IsotropicStable):
            subs, dims = [model.subordinator()], [model.dim]
        else:
            subs, dims = [model.subordinator], [model.dim]
        d = sum(dims)
        z = np.empty((n, d))
        w = np.empty((n, d)) if return_weights else None
        col = 0
        for sub, dj in zip(subs, dims):
            s = sample_subordinator_increments(sub, t, rng, size=n)
            g = rng.standard_normal((n, dj)) * np.sqrt(s)[:, None]
            z[:, col:col + dj] = g
            if return_weights:
                w[:, col:col + dj] = g / s[:, None]
            col += dj
        z += np.asarray(model.eta)[None, :] * t
        return (z, w) if return_weights else (z,)
    if isinstance(model, StableTypeDensity):
        if return_weights:
            raise UnsupportedModel("gradient weights need a subordinated family")
        kappa, d = model.kappa, model.dim
        var_total = _small_moment(kappa, d, r0, 2.0)
        z = rng.standard_normal((n, d)) * math.sqrt(var_total / d * t)
        mass = _big_jump_mass(kappa, d, r0)
        counts = rng.poisson(mass * t, size=n)
        total = int(counts.sum())
        if total:
            if isinstance(kappa, SumOfPowersKappa):
                radii = _sample_radii_sum_of_powers(kappa, d, r0, total, rng)
            else:
                radii = _sample_radii_thinning(kappa, d, r0, total, rng)
            if d == 1:
                dirs = np.where(rng.uniform(size=total) < 0.5, -1.0, 1.0)[:, None]
            else:
                g = rng.standard_normal((total, d))
                dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
            owner = np.repeat(np.arange(n), counts)
            np.add.at(z, owner, radii[:, None] * dirs)
        z += np.asarray(model.eta)[None, :] * t
        return (z,)
    raise UnsupportedModel(type(model).__name__)


# ---------------------------------------------------------------------------
# Semigroup application
# ---------------------------------------------------------------------------


def apply_semigroup(model, f, t, x, n_samples=100_000, master_seed=0, stream_id=0,
                    method="mc", r0=0.25, spectral_opts=None):
    """T_t f(x) = E f(x + Z_t) with a standard error (MC) or aliasing bound.

    ``method='spectral'`` is available for 1-d isotropic stable models: exact
    multiplier exp(-t |xi|^alpha) on a periodic grid, deterministic output.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if method == "spectral":
        if not (isinstance(model, IsotropicStable) and model.dim == 1):
            raise UnsupportedModel("spectral path implemented for 1-d isotropic stable")
        opts = {"half_period": 8.0 * math.pi, "n_grid": 4096}
        opts.update(spectral_opts or {})
        L, n = opts["half_period"], opts["n_grid"]
        grid = -L + 2.0 * L * np.arange(n) / n
        vals = f(grid[:, None])
        coef = np.fft.rfft(vals)
        xi = math.pi * np.arange(n // 2 + 1) / L
        out = np.fft.irfft(coef * np.exp(-t * xi ** model.alpha), n=n)
        # top-octave band energy as the aliasing proxy
        bound = 2.0 * np.abs(coef[3 * (n // 8):]).sum() / n
        xm = np.mod(x[0] + L, 2.0 * L) - L
        val = float(np.interp(xm, grid, out, period=2.0 * L))
        return val, bound
    rng = RngStream(master_seed, stream_id).generator()
    (z,) = sample_terminal(model, t, n_samples, rng, r0=r0)
    vals = f(x[None, :] + z)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_samples))
    return est, se


def gradient_semigroup(model, f, t, x, n_samples=100_000, master_seed=0, stream_id=0):
    """grad T_t f(x) via the per-block weight E[(S^i_t)^{-1} W^i (f(x+Z_t) - f(x))]."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rng = RngStream(master_seed, stream_id).generator()
    z, w = sample_terminal(model, t, n_samples, rng, return_weights=True)
    fv = (f(x[None, :] + z) - f(x)).astype(float)
    terms = w * fv[:, None]
    est = terms.mean(axis=0)
    se = terms.std(axis=0, ddof=1) / math.sqrt(n_samples)
    return est, se


def gradient_on_grid(model, f, t, xs, n_samples=100_000, master_seed=0, stream_id=0,
                     chunk=16):
    """Gradient estimates at many points with common samples, shape (nx, d)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    rng = RngStream(master_seed, stream_id).generator()
    z, w = sample_terminal(model, t, n_samples, rng, return_weights=True)
    out = np.empty((xs.shape[0], xs.shape[1]))
    f0 = f(xs)
    for i in range(0, xs.shape[0], chunk):
        blk = xs[i:i + chunk]
        fv = f(blk[:, None, :] + z[None, :, :]) - f0[i:i + chunk, None]
        out[i:i + chunk] = fv @ w / n_samples
    return out


def fit_loglog(xvals, yvals):
    """Least-squares slope/intercept/residual of log y against log x."""
    lx, ly = np.log(np.asarray(xvals, dtype=float)), np.log(np.asarray(yvals, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    residual = float(np.sqrt(res[0] / len(lx))) if res.size else 0.0
    return float(slope), float(intercept), residual


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    t_grid: np.ndarray
    values: np.ndarray


def _block_orders(model):
    """Per-coordinate stability index (for the self-similar grid scaling)."""
    d = len(np.atleast_1d(model.eta))
    if isinstance(model, CylindricalStable):
        out = np.empty(d)
        for (a, _dj), sl in zip(model.blocks, model.block_slices()):
            out[sl] = a
        return out
    if isinstance(model, IsotropicStable):
        return np.full(d, model.alpha)
    if isinstance(model, SubordinateBM):
        return np.full(d, model.subordinator.stability_index)
    if isinstance(model, StableTypeDensity):
        return np.full(d, model.alpha2)
    raise UnsupportedModel(type(model).__name__)


def scaling_x_grid(model, f, t, points=33, span=4.0):
    """33-point-per-dimension window around the test function's rough point.

    The sup of |grad T_t f| concentrates at distance ~ t^(1/alpha) from the
    Holder point (stable scaling), so the window spans [-span, span] in the
    self-similar coordinate u = (x - center) / t^(1/alpha), per block order.
    A fixed absolute grid saturates to max |grad f| and hides the exponent.
    """
    center = np.atleast_1d(np.asarray(getattr(f, "center", (0.0,)), dtype=float))
    d = len(np.atleast_1d(model.eta))
    if center.size != d:
        center = np.zeros(d)
    orders = _block_orders(model)
    axis = np.linspace(-span, span, points)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    u = np.stack([m.ravel() for m in mesh], axis=-1)
    return center[None, :] + u * t ** (1.0 / orders)[None, :]


def fit_gradient_scaling(model, f, t_grid, n_samples=200_000, master_seed=0,
                         stream_id=0, points=33):
    """Fitted slope of log max_x |grad T_t f| against log t.

    The sup norm is approximated by the max over the self-similar 33-point
    window per dimension (a lower bound of the sup; the exponent, not the
    constant, is the testable content).  Requires at least 3 dyadic decades.
    """
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if math.log2(t_grid[-1] / t_grid[0]) < 3.0 - 1e-9:
        raise InsufficientDecades("t grid must span at least 3 dyadic decades")
    sup = np.empty(len(t_grid))
    for k, t in enumerate(t_grid):
        xs = scaling_x_grid(model, f, t, points=points)
        est = gradient_on_grid(model, f, t, xs, n_samples=n_samples,
                               master_seed=master_seed, stream_id=stream_id + k)
        sup[k] = float(np.abs(est).max())
    slope, intercept, residual = fit_loglog(t_grid, sup)
    return ScalingFit(slope, intercept, residual, t_grid, sup)


# ---------------------------------------------------------------------------
# Subordinator negative moments
# ---------------------------------------------------------------------------


def negative_moment(spec, p, t_grid, n_samples=200_000, master_seed=0, stream_id=0):
    """E S_t^(-p): Monte Carlo per t, Laplace-identity quadrature oracle, slope.

    Oracle: E S_t^(-p) = Gamma(p)^(-1) int_0^inf lam^(p-1) exp(-t phi(lam)) dlam.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0,1)")
    t_grid = np.asarray(t_grid, dtype=float)
    rng = RngStream(master_seed, stream_id).generator()
    mc = np.empty(len(t_grid))
    se = np.empty(len(t_grid))
    oracle = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        s = sample_subordinator_increments(spec, t, rng, size=n_samples)
        vals = s ** (-p)
        mc[i] = vals.mean()
        se[i] = vals.std(ddof=1) / math.sqrt(n_samples)

        def integrand(lam, t=t):
            return lam ** (p - 1.0) * math.exp(-t * float(spec.laplace_exponent(lam)))

        v1, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
        v2, _ = integrate.quad(integrand, 1.0, np.inf, limit=200)
        oracle[i] = (v1 + v2) / math.gamma(p)
    slope, intercept, residual = fit_loglog(t_grid, mc)
    return {
        "t": t_grid, "mc": mc, "se": se, "oracle": oracle,
        "slope": slope, "intercept": intercept, "residual": residual,
    }


# ---------------------------------------------------------------------------
# Characteristic-function fidelity
# ---------------------------------------------------------------------------


def char_function_check(model, xi_list, t=1.0, n_samples=100_000, master_seed=0,
                        stream_id=0, r0=0.25):
    """MC average of cos(xi . Z_t) against exp(-t Re psi(xi)) per test frequency."""
    rng = RngStream(master_seed, stream_id).generator()
    (z,) = sample_terminal(model, t, n_samples, rng, r0=r0)
    rows = []
    eta = np.asarray(model.eta, dtype=float)
    for xi in xi_list:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        vals = np.cos(z @ xi)
        est = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(n_samples))
        oracle = math.exp(-t * symbol(model, xi)) * math.cos(float(xi @ eta) * t)
        rows.append({"xi": tuple(xi), "mc": est, "se": se, "oracle": oracle})
    return rows
