"""Levy process model families, their jump measures, and parameter admissibility.

The supported families are the concrete example classes the rest of the
package can sample and analyse:

* rotationally invariant stable (optionally truncated at radius 1),
* subordinate Brownian motion for an explicit subordinator (stable or
  relativistic, i.e. exponentially tilted stable),
* cylindrical stable: independent rotationally invariant stable blocks,
* stable-type: a radial jump density squeezed between two power laws near 0.

Scale conventions.  The stable subordinator is parameterised by its Laplace
exponent ``phi(lam) = scale * lam**rho``; a subordinate Brownian motion built
from it has characteristic exponent ``phi(|xi|^2 / 2)``.  Rotationally
invariant alpha-stable blocks therefore carry ``scale = 2**(alpha/2)`` so the
exponent is exactly ``|xi|**alpha`` (alpha = 2 rho), e.g. ``alpha = 1`` in one
dimension is the standard Cauchy process.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate, special

from .errors import DivergentMoment, InadmissibleModel, UnsupportedModel

__all__ = [
    "StableSubordinator",
    "RelativisticSubordinator",
    "SumOfPowersKappa",
    "ModulatedKappa",
    "IsotropicStable",
    "SubordinateBM",
    "CylindricalStable",
    "StableTypeDensity",
    "RelativisticStable",
    "TruncatedStable",
    "HypothesisParams",
    "MeasureDecomposition",
    "sphere_area",
    "stable_density_constant",
    "symbol",
    "radial_levy_density",
    "small_jump_moment",
    "hypothesis_params",
    "admissible_beta",
    "decompose",
]


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def stable_density_constant(d: int, alpha: float) -> float:
    """Coefficient C with nu(dz) = C |z|^(-d-alpha) dz for exponent |xi|^alpha."""
    return (
        alpha
        * 2.0 ** (alpha - 1.0)
        * math.gamma((d + alpha) / 2.0)
        / (math.pi ** (d / 2.0) * math.gamma(1.0 - alpha / 2.0))
    )


# ---------------------------------------------------------------------------
# Subordinators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StableSubordinator:
    """One-sided rho-stable subordinator, phi(lam) = scale * lam**rho.

    rho = 1 is the degenerate identity time change S_t = scale * t (Brownian
    subordination); it has no jump measure.
    """

    rho: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0,1], got {self.rho}")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")

    def laplace_exponent(self, lam):
        return self.scale * np.asarray(lam, dtype=float) ** self.rho

    @property
    def stability_index(self) -> float:
        """alpha of the subordinate Brownian motion built from this subordinator."""
        return 2.0 * self.rho

    def levy_density(self, s):
        """Density of the subordinator's Levy measure on (0, infinity)."""
        if self.rho >= 1.0:
            raise UnsupportedModel("identity subordinator has no jump measure")
        s = np.asarray(s, dtype=float)
        c = self.scale * self.rho / math.gamma(1.0 - self.rho)
        return c * s ** (-1.0 - self.rho)


@dataclass(frozen=True)
class RelativisticSubordinator:
    """Tilted stable subordinator with phi(lam) = (lam + m**(2/alpha))**(alpha/2) - m."""

    alpha: float
    m: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0,2), got {self.alpha}")
        if self.m <= 0.0:
            raise ValueError("m must be positive")

    @property
    def theta(self) -> float:
        """Tilting rate m**(2/alpha)."""
        return self.m ** (2.0 / self.alpha)

    def laplace_exponent(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (lam + self.theta) ** (self.alpha / 2.0) - self.m

    @property
    def stability_index(self) -> float:
        return self.alpha

    def levy_density(self, s):
        s = np.asarray(s, dtype=float)
        rho = self.alpha / 2.0
        c = rho / math.gamma(1.0 - rho)
        return c * s ** (-1.0 - rho) * np.exp(-self.theta * s)


SubordinatorSpec = Union[StableSubordinator, RelativisticSubordinator]


def stable_subordinator_for_index(alpha: float) -> StableSubordinator:
    """Subordinator realizing the rotationally invariant alpha-stable process."""
    return StableSubordinator(rho=alpha / 2.0, scale=2.0 ** (alpha / 2.0))


# ---------------------------------------------------------------------------
# Radial jump-density descriptors (stable-type family)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SumOfPowersKappa:
    """kappa(r) = sum_i c_i r^(-d-a_i), each term either global or cut at r=1.

    ``terms`` is a tuple of (coefficient, exponent, truncated) entries.  The
    first term must be the global (untruncated) leading power; it plays the
    role of the smooth reference part in the three-way measure split.
    """

    dim: int
    terms: tuple  # ((c, alpha, truncated), ...)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("need at least one power term")
        for c, a, _trunc in self.terms:
            if c <= 0 or not 0.0 < a < 2.0:
                raise ValueError(f"bad power term ({c}, {a})")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c, a, trunc in self.terms:
            term = c * r ** (-self.dim - a)
            if trunc:
                term = np.where(r <= 1.0, term, 0.0)
            out = out + term
        return out

    @property
    def alpha1(self) -> float:
        return min(a for _, a, _t in self.terms)

    @property
    def alpha2(self) -> float:
        return max(a for _, a, _t in self.terms)

    @property
    def c1(self) -> float:
        # lower sandwich constant on (0,1]: the alpha1 term alone
        return min(c for c, a, _t in self.terms if a == self.alpha1)

    @property
    def c2(self) -> float:
        # upper sandwich constant on (0,1]: all terms bounded by r^(-d-alpha2)
        return sum(c for c, _a, _t in self.terms)

    @property
    def lead(self):
        """(c, alpha) of the untruncated leading term."""
        for c, a, trunc in self.terms:
            if not trunc:
                return c, a
        raise ValueError("descriptor has no global leading term")


@dataclass(frozen=True)
class ModulatedKappa:
    """kappa(r) = base * r^(-d-alpha) * (1 + m sin(log r)), |m| < 1.

    Oscillates between (1-|m|) and (1+|m|) times the pure power, so the
    sandwich constants are c1 = base(1-|m|), c2 = base(1+|m|) with
    alpha1 = alpha2 = alpha.  No closed-form radial CDF: sampled by thinning.
    """

    dim: int
    base: float
    alpha: float
    m: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0,2)")
        if not 0.0 <= abs(self.m) < 1.0:
            raise ValueError("|m| must be < 1")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.base * r ** (-self.dim - self.alpha) * (1.0 + self.m * np.sin(np.log(r)))

    @property
    def alpha1(self) -> float:
        return self.alpha

    @property
    def alpha2(self) -> float:
        return self.alpha

    @property
    def c1(self) -> float:
        return self.base * (1.0 - abs(self.m))

    @property
    def c2(self) -> float:
        return self.base * (1.0 + abs(self.m))

    @property
    def lead(self):
        return self.c1, self.alpha


RadialKappa = Union[SumOfPowersKappa, ModulatedKappa]


# ---------------------------------------------------------------------------
# Model families
# ---------------------------------------------------------------------------


def _zero_eta(dim):
    return tuple(0.0 for _ in range(dim))


@dataclass(frozen=True)
class IsotropicStable:
    """Rotationally invariant alpha-stable process, exponent |xi|**alpha.

    ``intensity`` overrides the jump-density coefficient (kappa = intensity *
    |z|^(-d-alpha)); by default it is the constant matching the exponent.
    Overriding it only affects measure-level quadrature, never sampling.
    """

    alpha: float
    dim: int = 1
    intensity: float | None = None
    eta: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0,2), got {self.alpha}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.eta:
            object.__setattr__(self, "eta", _zero_eta(self.dim))

    @property
    def density_constant(self) -> float:
        if self.intensity is not None:
            return self.intensity
        return stable_density_constant(self.dim, self.alpha)

    def subordinator(self) -> StableSubordinator:
        return stable_subordinator_for_index(self.alpha)


@dataclass(frozen=True)
class SubordinateBM:
    """Z_t = W_{S_t} + eta*t for an explicit subordinator S independent of W."""

    subordinator: SubordinatorSpec
    dim: int = 1
    eta: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.eta:
            object.__setattr__(self, "eta", _zero_eta(self.dim))

    @property
    def alpha(self) -> float:
        return self.subordinator.stability_index


@dataclass(frozen=True)
class CylindricalStable:
    """Independent rotationally invariant stable blocks (alpha_j, dim_j)."""

    blocks: tuple  # ((alpha_j, dim_j), ...)
    eta: tuple = ()

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("need at least one block")
        for a, dj in self.blocks:
            if not 0.0 < a < 2.0 or dj < 1:
                raise ValueError(f"bad block ({a}, {dj})")
        if not self.eta:
            object.__setattr__(self, "eta", _zero_eta(self.dim))

    @property
    def dim(self) -> int:
        return int(sum(dj for _a, dj in self.blocks))

    @property
    def alpha_min(self) -> float:
        return min(a for a, _d in self.blocks)

    @property
    def alpha_max(self) -> float:
        return max(a for a, _d in self.blocks)

    def block_slices(self):
        out, j = [], 0
        for _a, dj in self.blocks:
            out.append(slice(j, j + dj))
            j += dj
        return out

    def block_subordinators(self):
        return [stable_subordinator_for_index(a) for a, _d in self.blocks]


@dataclass(frozen=True)
class StableTypeDensity:
    """Levy measure with radial density squeezed between two powers near 0."""

    kappa: RadialKappa
    dim: int = 1
    eta: tuple = ()

    def __post_init__(self):
        if self.dim != self.kappa.dim:
            raise ValueError("kappa descriptor dimension mismatch")
        if self.kappa.alpha1 > self.kappa.alpha2:
            raise ValueError("alpha1 must be <= alpha2")
        if not self.eta:
            object.__setattr__(self, "eta", _zero_eta(self.dim))

    @property
    def alpha1(self) -> float:
        return self.kappa.alpha1

    @property
    def alpha2(self) -> float:
        return self.kappa.alpha2


def RelativisticStable(alpha: float, m: float, dim: int = 1, eta: tuple = ()) -> SubordinateBM:
    """Symmetric relativistic alpha-stable process (subordinate BM form)."""
    return SubordinateBM(RelativisticSubordinator(alpha=alpha, m=m), dim=dim, eta=eta)


def TruncatedStable(alpha: float, dim: int = 1, intensity: float | None = None,
                    eta: tuple = ()) -> StableTypeDensity:
    """alpha-stable-like density cut off at radius 1."""
    c = intensity if intensity is not None else stable_density_constant(dim, alpha)
    kappa = SumOfPowersKappa(dim=dim, terms=((c, alpha, True),))
    # the truncated power has no global lead term; the split handles it below
    return StableTypeDensity(kappa=kappa, dim=dim, eta=eta)


LevyModel = Union[IsotropicStable, SubordinateBM, CylindricalStable, StableTypeDensity]


# ---------------------------------------------------------------------------
# Characteristic exponents
# ---------------------------------------------------------------------------


def _radial_mean_cos(d: int, s):
    """E[cos(s * u_1)] for u uniform on the unit sphere in R^d."""
    s = np.asarray(s, dtype=float)
    if d == 1:
        return np.cos(s)
    # Gamma(d/2) (2/s)^(d/2-1) J_{d/2-1}(s)
    nu = d / 2.0 - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = math.gamma(d / 2.0) * (2.0 / s) ** nu * special.jv(nu, s)
    return np.where(s == 0.0, 1.0, out)


def _radial_exponent(kappa: Callable, d: int, rho: float) -> float:
    """int (1 - cos(xi . z)) kappa(|z|) dz for |xi| = rho, radial kappa."""
    if rho == 0.0:
        return 0.0
    area = sphere_area(d)

    def integrand(r):
        return area * kappa(r) * r ** (d - 1) * (1.0 - _radial_mean_cos(d, rho * r))

    cut = min(1.0, 1.0 / rho)
    # the (1 - cos) factor vanishes quadratically at 0: quadpack's
    # extrapolation flags roundoff there even though the value is converged
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v1, _ = integrate.quad(integrand, 0.0, cut, limit=200, epsabs=1e-10,
                               epsrel=1e-9)
    if d == 1:
        # split 1 - cos: plain tail plus an oscillatory cosine-weighted piece
        tail, _ = integrate.quad(lambda r: area * kappa(r), cut, np.inf, limit=200)
        osc, _ = integrate.quad(lambda r: area * kappa(r), cut, 10_000.0,
                                weight="cos", wvar=rho, limit=2000)
        return v1 + tail - osc
    # d >= 2: sum geometric shells until the oscillation-averaged tail is spent
    total = v1
    lo = cut
    for _ in range(60):
        hi = 2.0 * lo
        v, _ = integrate.quad(integrand, lo, hi, limit=400)
        total += v
        lo = hi
        if abs(v) < 1e-12 * max(abs(total), 1.0):
            break
    return total


def symbol(model: LevyModel, xi) -> float:
    """Real part of the characteristic exponent at frequency xi.

    All supported families are symmetric apart from the drift, so
    E exp(i xi . Z_1) = exp(-symbol(xi) + i xi . eta).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if isinstance(model, IsotropicStable):
        return float(np.linalg.norm(xi) ** model.alpha)
    if isinstance(model, SubordinateBM):
        lam = 0.5 * float(np.dot(xi, xi))
        return float(model.subordinator.laplace_exponent(lam))
    if isinstance(model, CylindricalStable):
        total = 0.0
        for (a, _dj), sl in zip(model.blocks, model.block_slices()):
            total += float(np.linalg.norm(xi[sl]) ** a)
        return total
    if isinstance(model, StableTypeDensity):
        rho = float(np.linalg.norm(xi))
        return _radial_exponent(model.kappa, model.dim, rho)
    raise UnsupportedModel(f"no symbol for {type(model).__name__}")


# ---------------------------------------------------------------------------
# Radial Levy densities
# ---------------------------------------------------------------------------


def _subordinate_bm_radial_density(sub: SubordinatorSpec, d: int) -> Callable:
    """Radial density J(r) of the subordinate BM jump measure."""
    if isinstance(sub, StableSubordinator):
        if sub.rho >= 1.0:
            raise UnsupportedModel("identity subordination has no jump measure")
        alpha = sub.stability_index
        # phi = scale * lam^rho gives exponent scale * (|xi|^2/2)^rho; rescale the
        # standard constant accordingly: z -> z / s0 with s0 = (scale/2^rho)^(1/alpha)
        s0 = (sub.scale / 2.0 ** sub.rho) ** (1.0 / alpha)
        c = stable_density_constant(d, alpha) * s0 ** alpha
        return lambda r: c * np.asarray(r, dtype=float) ** (-d - alpha)

    theta = getattr(sub, "theta", 0.0)

    def dens(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        for i, ri in enumerate(r):
            def integrand(s, ri=ri):
                return (2.0 * math.pi * s) ** (-d / 2.0) * math.exp(
                    -ri * ri / (2.0 * s)
                ) * sub.levy_density(s)
            # heat kernel concentrates near s ~ r^2; the tempering (or the
            # s^(-1-rho) decay) makes the far tail negligible past `upper`
            cut = ri * ri
            upper = max(cut, 1.0) + (80.0 / theta if theta > 0.0 else 1e8)
            pieces = sorted({cut, min(max(cut, 1e-3), upper), upper})
            # deep small-r shells have integrands at the 1e-30 scale, where
            # quadpack's extrapolation reports spurious roundoff
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, _ = integrate.quad(integrand, 0.0, pieces[0], limit=200,
                                        epsabs=1e-12, epsrel=1e-9)
                for lo, hi in zip(pieces[:-1], pieces[1:]):
                    v, _ = integrate.quad(integrand, lo, hi, limit=400,
                                          epsabs=1e-12, epsrel=1e-9)
                    val += v
            out[i] = val
        return out if out.size > 1 else float(out[0])

    return dens


def radial_levy_density(model: LevyModel) -> Callable:
    """Radial jump density kappa(r) with nu(dz) = kappa(|z|) dz.

    Cylindrical models are not radial; use per-block densities instead.
    """
    if isinstance(model, IsotropicStable):
        c, a, d = model.density_constant, model.alpha, model.dim
        return lambda r: c * np.asarray(r, dtype=float) ** (-d - a)
    if isinstance(model, StableTypeDensity):
        return model.kappa
    if isinstance(model, SubordinateBM):
        return _subordinate_bm_radial_density(model.subordinator, model.dim)
    raise UnsupportedModel(f"{type(model).__name__} has no single radial density")


def effective_order(model: LevyModel) -> float:
    """Largest local power-law order of the jump measure near the origin."""
    if isinstance(model, IsotropicStable):
        return model.alpha
    if isinstance(model, SubordinateBM):
        return model.subordinator.stability_index
    if isinstance(model, CylindricalStable):
        return model.alpha_max
    if isinstance(model, StableTypeDensity):
        return model.alpha2
    raise UnsupportedModel(type(model).__name__)


# ---------------------------------------------------------------------------
# Small-jump moment with divergence detection
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _shell_integral(kappa, d, gamma, lo, hi):
    """int_{lo<|z|<=hi} |z|^{2 gamma} kappa(|z|) dz by fixed Gauss-Legendre."""
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    r = mid + half * _GL_NODES
    vals = kappa(r) * r ** (2.0 * gamma + d - 1)
    return sphere_area(d) * half * float(np.dot(_GL_WEIGHTS, vals))


def _radial_small_moment(kappa, d, gamma, tol=1e-10, max_shells=200):
    """Adaptive dyadic-shell quadrature of int_{|z|<=1} |z|^{2 gamma} kappa dz.

    Divergence is declared when shell contributions fail to decay
    geometrically over 8 consecutive shells.
    """
    total = 0.0
    prev = None
    stall = 0
    last_ratio = None
    for k in range(max_shells):
        lo, hi = 2.0 ** (-k - 1), 2.0 ** (-k)
        contrib = _shell_integral(kappa, d, gamma, lo, hi)
        total += contrib
        if prev is not None and prev > 0.0:
            last_ratio = contrib / prev
            if last_ratio >= 0.999:
                stall += 1
                if stall >= 8:
                    raise DivergentMoment(
                        f"shell contributions not decaying (ratio {last_ratio:.4f})"
                    )
            else:
                stall = 0
        prev = contrib
        if contrib < tol * max(total, 1.0) and k >= 8:
            break
    # geometric tail extrapolation from the final decay ratio
    if last_ratio is not None and 0.0 < last_ratio < 1.0:
        total += prev * last_ratio / (1.0 - last_ratio)
    return total


def small_jump_moment(model: LevyModel, gamma: float) -> float:
    """int_{|z|<=1} |z|^(2 gamma) nu(dz), or raise DivergentMoment.

    For gamma = 1 the integral is finite by definition of a Levy measure; for
    smaller gamma the dyadic-shell rule detects power-law divergence near 0
    without symbolic analysis.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0,1]")
    if isinstance(model, CylindricalStable):
        total = 0.0
        for a, dj in model.blocks:
            sub = stable_subordinator_for_index(a)
            kappa = _subordinate_bm_radial_density(sub, dj)
            total += _radial_small_moment(kappa, dj, gamma)
        return total
    kappa = radial_levy_density(model)
    return _radial_small_moment(kappa, model.dim, gamma)


# ---------------------------------------------------------------------------
# Hypothesis parameters and admissible Holder range
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisParams:
    """Semigroup gradient-estimate parameters for a model family.

    ``gamma`` is the infimum of exponents with finite small-jump 2*gamma
    moment; ``beta_range`` the open-closed interval of drift Holder exponents
    for which the flow theory applies.  ``k0`` is a diagnostic placeholder:
    the constant is never specified analytically, only fitted from scaling
    experiments.
    """

    alpha: float
    alpha_bar: float
    delta: float
    gamma: float
    beta_range: tuple
    subcritical: bool = False
    k0: float = 1.0

    def __post_init__(self):
        if self.subcritical:
            lo = max(self.gamma + 1.0 - self.alpha, 0.0)
        else:
            lo = self.gamma + (1.0 - self.alpha) / self.delta
        if abs(self.beta_range[0] - lo) > 1e-12:
            raise ValueError("beta_range endpoint inconsistent with gamma")


def _beta_lower(alpha, delta, gamma):
    if alpha > 1.0:
        return max(gamma + 1.0 - alpha, 0.0)
    return gamma + (1.0 - alpha) / delta


def hypothesis_params(model: LevyModel) -> HypothesisParams:
    """Gradient-estimate parameters (alpha, alpha_bar, delta) for the family.

    Subordinate BM and stable-type families get (alpha, 1, 1); cylindrical
    models with min index <= 1 get (alpha_min, alpha_min, alpha_min /
    alpha_max).  Models with alpha > 1 use the subcritical estimate, flagged
    by ``subcritical``.
    """
    if isinstance(model, IsotropicStable):
        a = model.alpha
        return HypothesisParams(
            alpha=a, alpha_bar=1.0, delta=1.0, gamma=a / 2.0,
            beta_range=(_beta_lower(a, 1.0, a / 2.0), 1.0), subcritical=a > 1.0,
        )
    if isinstance(model, SubordinateBM):
        a = model.subordinator.stability_index
        return HypothesisParams(
            alpha=a, alpha_bar=1.0, delta=1.0, gamma=a / 2.0,
            beta_range=(_beta_lower(a, 1.0, a / 2.0), 1.0), subcritical=a > 1.0,
        )
    if isinstance(model, StableTypeDensity):
        a1, a2 = model.alpha1, model.alpha2
        return HypothesisParams(
            alpha=a1, alpha_bar=1.0, delta=1.0, gamma=a2 / 2.0,
            beta_range=(_beta_lower(a1, 1.0, a2 / 2.0), 1.0), subcritical=a1 > 1.0,
        )
    if isinstance(model, CylindricalStable):
        a, amax = model.alpha_min, model.alpha_max
        if a > 1.0:
            return HypothesisParams(
                alpha=a, alpha_bar=1.0, delta=1.0, gamma=amax / 2.0,
                beta_range=(_beta_lower(a, 1.0, amax / 2.0), 1.0), subcritical=True,
            )
        delta = a / amax
        return HypothesisParams(
            alpha=a, alpha_bar=a, delta=delta, gamma=amax / 2.0,
            beta_range=(_beta_lower(a, delta, amax / 2.0), 1.0),
        )
    raise UnsupportedModel(f"no hypothesis parameters for {type(model).__name__}")


def admissible_beta(model: LevyModel) -> tuple:
    """Open-closed interval (beta0, 1] of admissible drift Holder exponents.

    Raises InadmissibleModel when the family's structural constraint fails
    (stable-type: alpha2 < 2 alpha1; cylindrical with alpha_min <= 1:
    alpha_max < 2 alpha_min^2 / (2 - alpha_min)).
    """
    if isinstance(model, CylindricalStable):
        a, amax = model.alpha_min, model.alpha_max
        if a <= 1.0 and amax >= 2.0 * a * a / (2.0 - a):
            raise InadmissibleModel(
                f"cylindrical blocks fail alpha_max < 2 alpha^2/(2-alpha): "
                f"alpha={a}, alpha_max={amax}"
            )
        ind = amax / a if a <= 1.0 else 1.0
        beta0 = amax / 2.0 + ind * (1.0 - a)
    elif isinstance(model, StableTypeDensity):
        a1, a2 = model.alpha1, model.alpha2
        if a2 >= 2.0 * a1:
            raise InadmissibleModel(f"stable-type fails alpha2 < 2 alpha1: ({a1}, {a2})")
        beta0 = 1.0 + a2 / 2.0 - a1
    elif isinstance(model, IsotropicStable):
        beta0 = 1.0 - model.alpha / 2.0
    elif isinstance(model, SubordinateBM):
        a = model.subordinator.stability_index
        beta0 = 1.0 - a / 2.0
    else:
        raise UnsupportedModel(type(model).__name__)
    if beta0 >= 1.0:
        raise InadmissibleModel(f"empty Holder range: beta0 = {beta0:.4f} >= 1")
    return (beta0, 1.0)


# ---------------------------------------------------------------------------
# Three-way measure split
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureDecomposition:
    """nu = nu0 + nu1 + nu2 with nu0 finite signed, nu0 + nu1 a Levy measure.

    Each part is stored as a radial density callable (nu0 carries its sign);
    ``tv_nu0`` is the total variation |nu0|(R^d).
    """

    dim: int
    nu0: Callable
    nu1: Callable
    nu2: Callable
    tv_nu0: float

    def total(self, r):
        return self.nu0(r) + self.nu1(r) + self.nu2(r)


def decompose(model: LevyModel) -> MeasureDecomposition:
    """Split the jump measure so nu1 is the smooth reference stable part.

    For subordinate and isotropic families nu1 = nu.  For stable-type, nu1 is
    the global lead power, nu0 subtracts its tail beyond radius 1 (negative
    part), and nu2 collects the remainder.  A fully truncated density has no
    global lead: its own truncation plays the role of nu0.
    """
    d = model.dim if not isinstance(model, CylindricalStable) else model.dim
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    if isinstance(model, (IsotropicStable, SubordinateBM)):
        nu = radial_levy_density(model)
        return MeasureDecomposition(dim=d, nu0=zero, nu1=nu, nu2=zero, tv_nu0=0.0)
    if isinstance(model, CylindricalStable):
        raise UnsupportedModel("cylindrical measures decompose per block, not radially")
    kappa = model.kappa
    try:
        c, a = kappa.lead
        truncated = False
    except ValueError:
        # truncated descriptor: lead is the same power extended globally
        c, a, _t = kappa.terms[0] if isinstance(kappa, SumOfPowersKappa) else (kappa.c1, kappa.alpha, True)
        truncated = True

    def nu1(r):
        r = np.asarray(r, dtype=float)
        return c * r ** (-d - a)

    def nu0(r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 1.0, -c * r ** (-d - a), 0.0)

    def nu2(r):
        r = np.asarray(r, dtype=float)
        small = np.where(r <= 1.0, kappa(r) - c * r ** (-d - a), 0.0)
        large = np.where(r > 1.0, kappa(r), 0.0) if not truncated else 0.0
        return small + large

    tv = c * sphere_area(d) / a  # int_{|z|>1} c |z|^(-d-a) dz
    return MeasureDecomposition(dim=d, nu0=nu0, nu1=nu1, nu2=nu2, tv_nu0=tv)
