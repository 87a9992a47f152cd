"""Path sampling for the supported Levy families.

Subordinated families (isotropic stable, subordinate BM, cylindrical stable)
are sampled exactly through the subordinator representation: positive stable
increments via the uniform-exponential transformation, Brownian increments
conditionally Gaussian given the subordinator.  Stable-type densities are
sampled through the jump split at a threshold r0: marked Poisson big jumps
above r0, and a moment-matched Gaussian substitute for the compensated small
jumps below it (second moment exact, truncation bias reported).

Per-replica draws always come from the replica's own counter stream in a
fixed order, so a path is bit-reproducible from (master_seed, stream_id)
alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EnvelopeFailure, UnsupportedModel
from .models import (
    CylindricalStable,
    IsotropicStable,
    RelativisticSubordinator,
    StableSubordinator,
    StableTypeDensity,
    SubordinateBM,
    SumOfPowersKappa,
    sphere_area,
)
from .rng import RngStream

__all__ = [
    "PathGrid",
    "sample_stable_subordinator",
    "sample_subordinator_increments",
    "sample_subordinate_bm_path",
    "sample_cylindrical_path",
    "sample_stable_type_path",
    "sample_path",
    "split_step_increments",
    "terminal_values",
    "dump_path",
]


# ---------------------------------------------------------------------------
# Subordinator increments
# ---------------------------------------------------------------------------


def sample_stable_subordinator(rho: float, h: float, rng: np.random.Generator, size=None):
    """Increments of the standard rho-stable subordinator over step h.

    Uses the positive-stable transformation: with U uniform on (0, pi) and E
    a unit exponential,

        S = (A(U) / E)^((1-rho)/rho),
        A(u) = (sin(rho u)^rho sin((1-rho) u)^(1-rho) / sin(u))^(1/(1-rho)),

    satisfies E exp(-lam S) = exp(-lam^rho); self-similarity scales to step h.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0,1)")
    if h <= 0.0:
        raise ValueError("h must be positive")
    scalar = size is None
    n = 1 if scalar else size
    u = rng.uniform(0.0, math.pi, size=n)
    e = rng.standard_exponential(size=n)
    # log-space evaluation of A(u) to avoid overflow near the endpoints
    log_a = (
        rho * np.log(np.sin(rho * u))
        + (1.0 - rho) * np.log(np.sin((1.0 - rho) * u))
        - np.log(np.sin(u))
    ) / (1.0 - rho)
    s1 = np.exp((1.0 - rho) / rho * (log_a - np.log(e)))
    out = h ** (1.0 / rho) * s1
    return float(out[0]) if scalar else out


def sample_subordinator_increments(spec, h: float, rng: np.random.Generator, size: int):
    """Increments over step h for a subordinator spec (stable or relativistic)."""
    if isinstance(spec, StableSubordinator):
        if spec.rho >= 1.0:
            return np.full(size, spec.scale * h)
        raw = sample_stable_subordinator(spec.rho, h, rng, size=size)
        return spec.scale ** (1.0 / spec.rho) * raw
    if isinstance(spec, RelativisticSubordinator):
        rho, theta = spec.alpha / 2.0, spec.theta
        out = np.empty(size)
        todo = np.arange(size)
        # exponential-tilting rejection from the stable proposal; acceptance
        # probability per draw is exp(-h m), bounded away from 0 for h <= 1
        while todo.size:
            prop = sample_stable_subordinator(rho, h, rng, size=todo.size)
            acc = rng.uniform(size=todo.size) < np.exp(-theta * prop)
            out[todo[acc]] = prop[acc]
            todo = todo[~acc]
        return out
    raise UnsupportedModel(f"unknown subordinator {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Path container
# ---------------------------------------------------------------------------


@dataclass
class PathGrid:
    """Batch of sampled noise paths on a uniform time grid.

    Arrays carry the replica axis first.  ``z_incr`` always satisfies the
    reconstruction identity

        z_incr[r, i] = small_comp[r, i] + sum(big jumps in step i) + eta_r0 * h

    bit-exactly for subordinated families and up to the recorded small-jump
    substitution bias for stable-type densities.
    """

    t_grid: np.ndarray          # (N+1,)
    z_incr: np.ndarray          # (R, N, d)
    small_comp: np.ndarray      # (R, N, d)
    eta_r0: np.ndarray          # (d,)
    s_vals: np.ndarray | None = None   # (R, N+1, k) subordinator paths per block
    w_vals: np.ndarray | None = None   # (R, N+1, d) Brownian path at subordinated times
    big_rep: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    big_step: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    big_z: np.ndarray = field(default_factory=lambda: np.empty((0, 1)))
    master_seed: int = 0
    stream_ids: tuple = ()
    r0: float | None = None
    small_bias_third_moment: float = 0.0
    block_slices: tuple = ()

    @property
    def n_rep(self) -> int:
        return self.z_incr.shape[0]

    @property
    def n_steps(self) -> int:
        return self.z_incr.shape[1]

    @property
    def dim(self) -> int:
        return self.z_incr.shape[2]

    @property
    def h(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])


def _grid(n_steps: int, t_max: float) -> np.ndarray:
    return np.linspace(0.0, t_max, n_steps + 1)


# ---------------------------------------------------------------------------
# Subordinated families
# ---------------------------------------------------------------------------


def _blocks_of(model):
    """(subordinator, dim) per independent block plus slice bookkeeping."""
    if isinstance(model, IsotropicStable):
        return [(model.subordinator(), model.dim)], np.asarray(model.eta)
    if isinstance(model, SubordinateBM):
        return [(model.subordinator, model.dim)], np.asarray(model.eta)
    if isinstance(model, CylindricalStable):
        return (
            [(sub, dj) for sub, (_a, dj) in zip(model.block_subordinators(), model.blocks)],
            np.asarray(model.eta),
        )
    raise UnsupportedModel(f"{type(model).__name__} is not subordinated")


def _sample_subordinated(model, n_steps, n_rep, master_seed, stream_base=0, t_max=1.0):
    blocks, eta = _blocks_of(model)
    t = _grid(n_steps, t_max)
    h = t[1] - t[0]
    d = int(eta.size)
    k = len(blocks)
    s_vals = np.zeros((n_rep, n_steps + 1, k))
    w_vals = np.zeros((n_rep, n_steps + 1, d))
    stream_ids = tuple(stream_base + r for r in range(n_rep))
    for r, sid in enumerate(stream_ids):
        gen = RngStream(master_seed, sid).generator()
        col = 0
        for j, (sub, dj) in enumerate(blocks):
            ds = sample_subordinator_increments(sub, h, gen, size=n_steps)
            dw = gen.standard_normal((n_steps, dj)) * np.sqrt(ds)[:, None]
            s_vals[r, 1:, j] = np.cumsum(ds)
            w_vals[r, 1:, col:col + dj] = np.cumsum(dw, axis=0)
            col += dj
    dW = np.diff(w_vals, axis=1)
    z_incr = dW + eta[None, None, :] * h
    slices = []
    col = 0
    for _sub, dj in blocks:
        slices.append((col, col + dj))
        col += dj
    return PathGrid(
        t_grid=t,
        z_incr=z_incr,
        small_comp=dW.copy(),
        eta_r0=eta.astype(float),
        s_vals=s_vals,
        w_vals=w_vals,
        master_seed=master_seed,
        stream_ids=stream_ids,
        block_slices=tuple(slices),
    )


def sample_subordinate_bm_path(model, n_steps, n_rep, master_seed, stream_base=0, t_max=1.0):
    """Exact subordinate-BM paths; retains both S and W (gradient weights need them)."""
    if isinstance(model, (SubordinateBM, IsotropicStable)):
        return _sample_subordinated(model, n_steps, n_rep, master_seed, stream_base, t_max)
    raise UnsupportedModel("expected a subordinate BM or isotropic stable model")


def sample_cylindrical_path(model, n_steps, n_rep, master_seed, stream_base=0, t_max=1.0):
    """Independent per-block subordinated Brownian paths in one grid."""
    if not isinstance(model, CylindricalStable):
        raise UnsupportedModel("expected a cylindrical stable model")
    return _sample_subordinated(model, n_steps, n_rep, master_seed, stream_base, t_max)


# ---------------------------------------------------------------------------
# Stable-type densities via the jump split
# ---------------------------------------------------------------------------


def _power_tail_mass(c, a, d, lo, hi):
    """int over lo<|z|<hi of c |z|^(-d-a) dz."""
    if hi <= lo:
        return 0.0
    area = sphere_area(d)
    if math.isinf(hi):
        return area * c * lo ** (-a) / a
    return area * c * (lo ** (-a) - hi ** (-a)) / a


def _power_radius_inv_cdf(u, a, lo, hi):
    """Inverse CDF of the radial law with density prop to r^(-1-a) on (lo, hi)."""
    lo_pow = lo ** (-a)
    hi_pow = 0.0 if math.isinf(hi) else hi ** (-a)
    return (lo_pow - u * (lo_pow - hi_pow)) ** (-1.0 / a)


def _small_moment(kappa, d, r0, power):
    """int_{|z|<=r0} |z|^power kappa(|z|) dz (closed form for power sums)."""
    area = sphere_area(d)
    if isinstance(kappa, SumOfPowersKappa):
        total = 0.0
        for c, a, trunc in kappa.terms:
            hi = min(r0, 1.0) if trunc else r0
            total += area * c * hi ** (power - a) / (power - a)
        return total
    nodes, weights = np.polynomial.legendre.leggauss(128)
    # substitute r = r0 * exp(-u), u in (0, 40]: resolves the origin singularity
    u = 20.0 * (nodes + 1.0)
    r = r0 * np.exp(-u)
    vals = kappa(r) * r ** (power + d - 1) * r  # extra r from dr = -r du
    return area * 20.0 * float(np.dot(weights, vals))


def _sample_radii_sum_of_powers(kappa, d, r0, count, gen):
    """Exact radii above r0 via the power-mixture inverse CDF."""
    comps, masses = [], []
    for c, a, trunc in kappa.terms:
        hi = 1.0 if trunc else math.inf
        m = _power_tail_mass(c, a, d, r0, hi)
        if m > 0.0:
            comps.append((a, hi))
            masses.append(m)
    masses = np.asarray(masses)
    probs = masses / masses.sum()
    which = gen.choice(len(comps), size=count, p=probs)
    u = gen.uniform(size=count)
    radii = np.empty(count)
    for idx, (a, hi) in enumerate(comps):
        sel = which == idx
        radii[sel] = _power_radius_inv_cdf(u[sel], a, r0, hi)
    return radii


def _sample_radii_thinning(kappa, d, r0, count, gen, min_acceptance=1e-3):
    """Thinning against the dominating power envelope c2 r^(-d-alpha2)."""
    c_env = kappa.c2
    a_env = kappa.alpha2
    radii = np.empty(count)
    filled = 0
    proposed = accepted = 0
    while filled < count:
        m = max(count - filled, 64)
        u = gen.uniform(size=m)
        r = _power_radius_inv_cdf(u, a_env, r0, math.inf)
        ratio = kappa(r) / (c_env * r ** (-d - a_env))
        keep = gen.uniform(size=m) < ratio
        proposed += m
        accepted += int(keep.sum())
        take = min(int(keep.sum()), count - filled)
        radii[filled:filled + take] = r[keep][:take]
        filled += take
        if proposed >= 1000 and accepted / proposed < min_acceptance:
            raise EnvelopeFailure(
                f"thinning acceptance {accepted / proposed:.2e} below {min_acceptance:.0e}"
            )
    return radii


def _big_jump_mass(kappa, d, r0):
    if isinstance(kappa, SumOfPowersKappa):
        total = 0.0
        for c, a, trunc in kappa.terms:
            total += _power_tail_mass(c, a, d, r0, 1.0 if trunc else math.inf)
        return total
    # modulated kappa: bounded by the envelope mass; integrate numerically
    from scipy import integrate as _int

    area = sphere_area(d)
    val, _ = _int.quad(lambda r: kappa(r) * r ** (d - 1), r0, np.inf, limit=200)
    return area * val


def sample_stable_type_path(model, r0, n_steps, n_rep, master_seed, stream_base=0, t_max=1.0):
    """Jump-split paths: exact marked big jumps above r0, Gaussian small part.

    The small-jump substitute matches the exact covariance
    int_{|z|<=r0} z z^T nu(dz); the third absolute moment of the replaced
    region is recorded as the truncation-bias constant.
    """
    if not isinstance(model, StableTypeDensity):
        raise UnsupportedModel("expected a stable-type density model")
    if not 0.0 < r0 <= 1.0:
        raise ValueError("r0 must lie in (0,1]")
    kappa, d = model.kappa, model.dim
    eta = np.asarray(model.eta, dtype=float)
    t = _grid(n_steps, t_max)
    h = t[1] - t[0]
    var_total = _small_moment(kappa, d, r0, 2.0)
    bias3 = _small_moment(kappa, d, r0, 3.0)
    sigma_step = math.sqrt(var_total / d * h)
    big_mass = _big_jump_mass(kappa, d, r0)

    small = np.empty((n_rep, n_steps, d))
    rep_list, step_list, z_list = [], [], []
    stream_ids = tuple(stream_base + r for r in range(n_rep))
    for r, sid in enumerate(stream_ids):
        gen = RngStream(master_seed, sid).generator()
        small[r] = gen.standard_normal((n_steps, d)) * sigma_step
        count = int(gen.poisson(big_mass * t_max))
        if count == 0:
            continue
        times = np.sort(gen.uniform(0.0, t_max, size=count))
        if isinstance(kappa, SumOfPowersKappa):
            radii = _sample_radii_sum_of_powers(kappa, d, r0, count, gen)
        else:
            radii = _sample_radii_thinning(kappa, d, r0, count, gen)
        if d == 1:
            dirs = np.where(gen.uniform(size=count) < 0.5, -1.0, 1.0)[:, None]
        else:
            g = gen.standard_normal((count, d))
            dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        steps = np.minimum((times / h).astype(np.int64), n_steps - 1)
        rep_list.append(np.full(count, r, dtype=np.int64))
        step_list.append(steps)
        z_list.append(radii[:, None] * dirs)

    if rep_list:
        big_rep = np.concatenate(rep_list)
        big_step = np.concatenate(step_list)
        big_z = np.concatenate(z_list)
    else:
        big_rep = np.empty(0, dtype=np.int64)
        big_step = np.empty(0, dtype=np.int64)
        big_z = np.empty((0, d))

    z_incr = small + eta[None, None, :] * h
    np.add.at(z_incr, (big_rep, big_step), big_z)
    return PathGrid(
        t_grid=t,
        z_incr=z_incr,
        small_comp=small,
        eta_r0=eta,
        big_rep=big_rep,
        big_step=big_step,
        big_z=big_z,
        master_seed=master_seed,
        stream_ids=stream_ids,
        r0=r0,
        small_bias_third_moment=bias3,
        block_slices=((0, d),),
    )


def sample_path(model, n_steps, n_rep, master_seed, stream_base=0, t_max=1.0, r0=0.25):
    """Dispatch to the family's sampler."""
    if isinstance(model, (SubordinateBM, IsotropicStable)):
        return sample_subordinate_bm_path(model, n_steps, n_rep, master_seed, stream_base, t_max)
    if isinstance(model, CylindricalStable):
        return sample_cylindrical_path(model, n_steps, n_rep, master_seed, stream_base, t_max)
    if isinstance(model, StableTypeDensity):
        return sample_stable_type_path(model, r0, n_steps, n_rep, master_seed, stream_base, t_max)
    raise UnsupportedModel(type(model).__name__)


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------


def split_step_increments(path: PathGrid, r0: float) -> PathGrid:
    """Reclassify per-step aggregates above r0 as exact jump marks.

    For subordinated paths (sampled without a split) this supplies the marks
    the transformed SDE applies nonlinearly.  Steps whose compensated
    aggregate exceeds r0 in norm move wholesale into the mark list; the
    reconstruction identity is preserved bit-exactly.
    """
    small = path.small_comp.copy()
    norms = np.linalg.norm(small, axis=2)
    rep, step = np.nonzero(norms > r0)
    new_z = small[rep, step].copy()
    small[rep, step] = 0.0
    big_rep = np.concatenate([path.big_rep, rep])
    big_step = np.concatenate([path.big_step, step])
    big_z = np.concatenate([path.big_z if path.big_z.size else np.empty((0, path.dim)), new_z])
    order = np.lexsort((big_step, big_rep))
    return PathGrid(
        t_grid=path.t_grid,
        z_incr=path.z_incr,
        small_comp=small,
        eta_r0=path.eta_r0,
        s_vals=path.s_vals,
        w_vals=path.w_vals,
        big_rep=big_rep[order],
        big_step=big_step[order],
        big_z=big_z[order],
        master_seed=path.master_seed,
        stream_ids=path.stream_ids,
        r0=r0,
        small_bias_third_moment=path.small_bias_third_moment,
        block_slices=path.block_slices,
    )


def terminal_values(path: PathGrid) -> np.ndarray:
    """Z at the final grid time, replica-major, shape (R, d)."""
    return path.z_incr.sum(axis=1)


def reconstruct_increments(path: PathGrid) -> np.ndarray:
    """small + big + eta*h per step; equals z_incr by the split identity."""
    out = path.small_comp + path.eta_r0[None, None, :] * path.h
    if path.big_rep.size:
        np.add.at(out, (path.big_rep, path.big_step), path.big_z)
    return out


def dump_path(path: PathGrid, rep: int = 0) -> str:
    """Columnar text dump of one replica (debugging aid)."""
    lines = [
        f"# master_seed={path.master_seed} stream_id={path.stream_ids[rep]}",
        "# columns: t"
        + (" s[block...]" if path.s_vals is not None else "")
        + (" w[dim...]" if path.w_vals is not None else "")
        + " z_cum[dim...]",
    ]
    z_cum = np.vstack([np.zeros(path.dim), np.cumsum(path.z_incr[rep], axis=0)])
    for i, t in enumerate(path.t_grid):
        row = [f"{t:.10g}"]
        if path.s_vals is not None:
            row += [f"{v:.17g}" for v in path.s_vals[rep, i]]
        if path.w_vals is not None:
            row += [f"{v:.17g}" for v in path.w_vals[rep, i]]
        row += [f"{v:.17g}" for v in z_cum[i]]
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"
