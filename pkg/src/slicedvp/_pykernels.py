"""Pure numpy implementation of the Gaussian-mixture kernels.

Every kernel works on a batch of ``d`` one-dimensional mixtures that share
their component weights and width but differ in their means (one row per
projection direction).  Shapes:

    means   (d, n)     component means, any order
    weights (n,)       component weights, summing to one
    x, p    (d, q)     evaluation points / probabilities, one row per mixture

The compiled module ``_ckernels`` exposes the same functions with the same
signatures; ``slicedvp._kernels`` picks one at import time.
"""

import numpy as np
from scipy.special import ndtr, ndtri

_INV_SQRT_2PI = 0.3989422804014327
_MAX_ITER = 100


def _standardize(means, sigma, x):
    return (x[:, :, None] - means[:, None, :]) / sigma


def mixture_cdf(means, weights, sigma, x):
    return ndtr(_standardize(means, sigma, x)) @ weights


def mixture_sf(means, weights, sigma, x):
    return ndtr(-_standardize(means, sigma, x)) @ weights


def mixture_pdf(means, weights, sigma, x):
    t = _standardize(means, sigma, x)
    return (np.exp(-0.5 * t * t) @ weights) * (_INV_SQRT_2PI / sigma)


def _solve(means, weights, sigma, level, upper):
    """Root of F(x) = level (lower tail) or S(x) = level (upper tail).

    Newton steps safeguarded by a bracket that always contains the root;
    any step leaving the bracket is replaced by bisection.
    """
    z = ndtri(level)
    if upper:
        z = -z
    # F(min mean + sigma z) <= level <= F(max mean + sigma z), componentwise
    lo = means.min(axis=1)[:, None] + sigma * z
    hi = means.max(axis=1)[:, None] + sigma * z
    x = 0.5 * (lo + hi)
    active = (hi - lo) > 0
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        idx = np.nonzero(active)
        rows = idx[0]
        xa = x[idx]
        t = (xa[:, None] - means[rows]) / sigma
        if upper:
            r = level[idx] - ndtr(-t) @ weights
        else:
            r = ndtr(t) @ weights - level[idx]
        f = (np.exp(-0.5 * t * t) @ weights) * (_INV_SQRT_2PI / sigma)
        lo_a, hi_a = lo[idx], hi[idx]
        lo_a = np.where(r < 0, xa, lo_a)
        hi_a = np.where(r > 0, xa, hi_a)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = r / f
        converged = np.abs(step) <= 1e-15 * (1.0 + np.abs(xa))
        xn = xa - step
        bad = ~((xn > lo_a) & (xn < hi_a))
        xn = np.where(bad & ~converged, 0.5 * (lo_a + hi_a), xn)
        xn = np.where(r == 0, xa, xn)
        done = converged | (r == 0) | (hi_a - lo_a <= 1e-15 * (1.0 + np.abs(xa)))
        x[idx] = xn
        lo[idx], hi[idx] = lo_a, hi_a
        sub = active[idx]
        sub[done] = False
        active[idx] = sub
    return x


def mixture_quantile(means, weights, sigma, p):
    means = np.ascontiguousarray(means, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    out = np.empty_like(p)
    low = p <= 0.5
    if low.any():
        out[low] = _masked_solve(means, weights, sigma, p, low, upper=False)
    if (~low).any():
        out[~low] = _masked_solve(means, weights, sigma, 1.0 - p, ~low, upper=True)
    return out


def _masked_solve(means, weights, sigma, level, mask, upper):
    # flatten the selected entries into a (count, 1) batch, one mixture each
    rows, _ = np.nonzero(mask)
    sub_means = means[rows]
    sub_level = level[mask][:, None]
    return _solve(sub_means, weights, sigma, sub_level, upper)[:, 0]


def transport_batch(src_means, src_weights, src_sigma,
                    tgt_means, tgt_weights, tgt_sigma, x, pmin):
    """Monotone map quantile_tgt(cdf_src(x)) for every row of ``x``.

    Source probabilities are clamped into [pmin, 1 - pmin]; returns the
    transported points and a boolean mask of clamped (saturated) entries.
    The upper tail is handled through survival functions so that points
    with cdf close to one keep full relative accuracy.
    """
    F = mixture_cdf(src_means, src_weights, src_sigma, x)
    S = mixture_sf(src_means, src_weights, src_sigma, x)
    low = F <= 0.5
    level = np.where(low, F, S)
    saturated = level < pmin
    level = np.maximum(level, pmin)
    out = np.empty_like(x)
    if low.any():
        out[low] = _masked_solve(tgt_means, tgt_weights, tgt_sigma, level, low, upper=False)
    if (~low).any():
        out[~low] = _masked_solve(tgt_means, tgt_weights, tgt_sigma, level, ~low, upper=True)
    return out, saturated
