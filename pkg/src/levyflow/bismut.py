"""Monte Carlo derivative of x -> E f(X_t(x)) for subordinate Brownian noise.

The representation averages  (f(X_t(x)) / S_t) * int_0^t grad X_s(x) dW_{S_s}
over replicas; the stochastic integral is the adapted left-point sum
sum_i grad X_{s_i} (W_{S_{s_i+1}} - W_{S_{s_i}}).  Variance control subtracts
f(x) from f, which leaves the estimator unbiased because the weight is
conditionally centred.  A common-random-number central difference of
E f(X_t(x +- eps)) over direct Euler paths provides the independent oracle,
and the decay fit checks that the gradient degrades no faster than t^(-1/alpha).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InsufficientDecades, UnsupportedModel
from .models import IsotropicStable, SubordinateBM
from .samplers import sample_subordinate_bm_path
from .semigroup import fit_loglog
from .zvonkin import ZvonkinTransform, direct_euler_flow, solve_flow

__all__ = [
    "bismut_gradient",
    "bismut_fd_compare",
    "fd_gradient",
    "decay_check",
]

_CHUNK = 4096


def _require_subordinated(model):
    if not isinstance(model, (SubordinateBM, IsotropicStable)):
        raise UnsupportedModel(
            "the derivative formula needs subordinate Brownian noise (S and W)"
        )


def _weights_at(sample, t_idx):
    """Per-replica Bismut weight acc_t / S_t at a grid index."""
    s_t = sample.path.s_vals[:, t_idx, 0]
    return sample.bismut_acc[:, t_idx] / s_t


def _chunk_ranges(n_replicas, chunk):
    return [(lo, min(lo + chunk, n_replicas)) for lo in range(0, n_replicas, chunk)]


def bismut_gradient(transform: ZvonkinTransform, model, b, f, t, x,
                    n_replicas=20_000, master_seed=0, n_steps=256,
                    chunk=_CHUNK):
    """Estimate of d/dx E f(X_t(x)) with its standard error.

    Runs the transformed flow in replica chunks (per-replica counter streams,
    so the estimate is chunk-size independent in distribution and exactly
    reproducible from the seed).
    """
    _require_subordinated(model)
    t_idx = int(round(t * n_steps))
    fx = float(np.asarray(f(np.array([[x]]))).ravel()[0])
    total = 0.0
    total_sq = 0.0
    count = 0
    for lo, hi in _chunk_ranges(n_replicas, chunk):
        path = sample_subordinate_bm_path(model, n_steps, hi - lo,
                                          master_seed, stream_base=lo)
        sample = solve_flow(transform, path, x)
        vals = (f(sample.x[:, t_idx][:, None]) - fx) * _weights_at(sample, t_idx)
        vals = vals[sample.alive_at(t_idx)]
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        count += int(vals.size)
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return mean, math.sqrt(var / count)


def fd_gradient(model, b, f, t, x, n_replicas=20_000, step=1e-3,
                master_seed=0, n_steps=256, chunk=_CHUNK):
    """Central difference of E f over direct Euler paths with common noise.

    (E f(X_t(x + eps)) - E f(X_t(x - eps))) / (2 eps) with the same path per
    replica on both sides, collapsing the difference variance; the O(eps^2)
    bias is the caller's budget.
    """
    if not 1e-4 <= step <= 1e-2:
        raise ValueError("step must lie in [1e-4, 1e-2]")
    t_idx = int(round(t * n_steps))
    total = 0.0
    total_sq = 0.0
    count = 0
    for lo, hi in _chunk_ranges(n_replicas, chunk):
        path = sample_subordinate_bm_path(model, n_steps, hi - lo,
                                          master_seed, stream_base=lo)
        xp, ap = direct_euler_flow(b, path, x + step)
        xm, am = direct_euler_flow(b, path, x - step)
        keep = ap & am
        vals = (f(xp[:, t_idx][:, None]) - f(xm[:, t_idx][:, None])) / (2.0 * step)
        vals = vals[keep]
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        count += int(vals.size)
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return mean, math.sqrt(var / count)


def bismut_fd_compare(transform, model, b, f, t, x, n_replicas=20_000,
                      step=1e-3, master_seed=0, n_steps=256, chunk=_CHUNK):
    """Bismut and central-difference estimates on common noise, with the SE
    of their per-replica difference (the statistically sharp comparison)."""
    _require_subordinated(model)
    t_idx = int(round(t * n_steps))
    fx = float(np.asarray(f(np.array([[x]]))).ravel()[0])
    sums = np.zeros(3)   # bismut, fd, diff
    sq = np.zeros(3)
    count = 0
    for lo, hi in _chunk_ranges(n_replicas, chunk):
        path = sample_subordinate_bm_path(model, n_steps, hi - lo,
                                          master_seed, stream_base=lo)
        sample = solve_flow(transform, path, x)
        bis = (f(sample.x[:, t_idx][:, None]) - fx) * _weights_at(sample, t_idx)
        xp, ap = direct_euler_flow(b, path, x + step)
        xm, am = direct_euler_flow(b, path, x - step)
        fd = (f(xp[:, t_idx][:, None]) - f(xm[:, t_idx][:, None])) / (2.0 * step)
        keep = sample.alive_at(t_idx) & ap & am
        rows = np.stack([bis[keep], fd[keep], bis[keep] - fd[keep]])
        sums += rows.sum(axis=1)
        sq += (rows * rows).sum(axis=1)
        count += int(keep.sum())
    means = sums / count
    ses = np.sqrt(np.maximum(sq / count - means * means, 0.0) / count)
    return {
        "bismut": means[0], "bismut_se": ses[0],
        "fd": means[1], "fd_se": ses[1],
        "diff": means[2], "diff_se": ses[2],
        "n_effective": count,
    }


def decay_check(transform, model, b, f, t_grid, x, n_replicas=20_000,
                master_seed=0, n_steps=256, alpha=None, margin=0.15,
                chunk=_CHUNK):
    """Fitted small-t slope of log |grad E f(X_t(x))| against log t.

    The decay bound is one-sided and guards the t -> 0 regime: PASS when the
    slope fitted over the smaller half of the grid is at least -1/alpha -
    margin (no blow-up worse than t^(-1/alpha)).  Away from 0 the gradient
    of a localized f decays faster than t^(-1/alpha) without violating the
    upper bound, so large t stays out of the fit.
    """
    _require_subordinated(model)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if math.log2(t_grid[-1] / t_grid[0]) < 3.0 - 1e-9:
        raise InsufficientDecades("t grid must span at least 3 dyadic decades")
    if alpha is None:
        alpha = (model.alpha if isinstance(model, IsotropicStable)
                 else model.subordinator.stability_index)
    fx = float(np.asarray(f(np.array([[x]]))).ravel()[0])
    idx = [int(round(t * n_steps)) for t in t_grid]
    if min(idx) < 2:
        raise ValueError("t grid under-resolved: increase n_steps")
    sums = np.zeros(len(idx))
    counts = np.zeros(len(idx), dtype=np.int64)
    for lo, hi in _chunk_ranges(n_replicas, chunk):
        path = sample_subordinate_bm_path(model, n_steps, hi - lo,
                                          master_seed, stream_base=lo)
        sample = solve_flow(transform, path, x)
        # censor each time point at its own escape horizon, normalising per t
        for k, i in enumerate(idx):
            live = sample.alive_at(i)
            vals = (f(sample.x[:, i][:, None]) - fx) * _weights_at(sample, i)
            sums[k] += float(vals[live].sum())
            counts[k] += int(live.sum())
    grads = np.abs(sums / counts)
    n_small = max(4, len(t_grid) // 2)
    small = np.argsort(t_grid)[:n_small]
    slope, intercept, residual = fit_loglog(t_grid[small],
                                            np.maximum(grads[small], 1e-300))
    return {
        "t": t_grid, "gradient": grads, "slope": slope,
        "threshold": -1.0 / alpha - margin,
        "passed": bool(slope >= -1.0 / alpha - margin),
        "residual": residual,
    }
