"""Batched per-slice expectations shared by the distance and its derivatives.

For a row of directions, the source slice is the mixture
sum_j w_j N(m_j, sigma^2) and T the monotone map onto the target slice.
One pass evaluates T on the nodes of a Gaussian rule and returns any of

* the transport cost  sum_j w_j E[(X_j - T(X_j))^2 / 2],
* E[T(a + sigma Z)] for each atom (or extra point) a,
* E[T'(a + sigma Z)] in Stein form, E[Z T(a + sigma Z)] / sigma.

The Stein form needs no division by the target density, so it stays
finite where T' itself would under- or overflow.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .quadrature import GaussRule, LatticeRule, dedupe_rows

PMIN = 1e-15
_INV_SQRT_2PI = 0.3989422804014327
# upper bound on elements of one (rows, nodes, centres) kernel block
_BLOCK = 1 << 22


@dataclass
class SlicePass:
    cost: np.ndarray            # (d,)
    sat_mass: np.ndarray        # (d,)
    sat_count: int
    mean_t: np.ndarray | None = None     # (d, c) E[T(c + sigma Z)]
    mean_dt: np.ndarray | None = None    # (d, c) E[T'(c + sigma Z)]


def slice_pass(src, src_w, tgt, tgt_w, sigma, rule, points=None, moments=True, tgt_sigma=None):
    """Evaluate one pass over rows of slices.

    ``src`` (d, n) and ``tgt`` (d, m) hold projected atoms, ``points``
    (d, p) optional evaluation centres (default: the source atoms).  With
    ``moments=False`` only the cost and saturation are computed.  The
    target width defaults to the source width ``sigma``.
    """
    tsig = sigma if tgt_sigma is None else tgt_sigma
    src = np.ascontiguousarray(src, dtype=float)
    tgt = np.ascontiguousarray(tgt, dtype=float)
    if points is not None:
        points = np.ascontiguousarray(points, dtype=float)
    if isinstance(rule, LatticeRule):
        return _lattice_pass(src, src_w, tgt, tgt_w, sigma, tsig, rule, points, moments)
    if isinstance(rule, GaussRule):
        return _local_pass(src, src_w, tgt, tgt_w, sigma, tsig, rule, points, moments)
    raise TypeError(f"unsupported rule {rule!r}")


def _transport(src, src_w, sigma, tgt, tgt_w, tsig, x):
    return _kernels.transport_batch(src, src_w, sigma, tgt, tgt_w, tsig,
                                    np.ascontiguousarray(x), PMIN)


def _local_pass(src, src_w, tgt, tgt_w, sigma, tsig, rule, points, moments):
    d, n = src.shape
    z, wz = rule.nodes, rule.weights
    x = (src[:, :, None] + sigma * z).reshape(d, -1)
    tx, sat = _transport(src, src_w, sigma, tgt, tgt_w, tsig, x)
    cost = rule.expect((0.5 * (x - tx) ** 2).reshape(d, n, -1)) @ src_w
    mass = rule.expect(sat.reshape(d, n, -1).astype(float)) @ src_w
    out = SlicePass(cost, mass, int(sat.sum()))
    if not moments:
        return out
    if points is not None:
        c = points.shape[1]
        x = (points[:, :, None] + sigma * z).reshape(d, -1)
        tx, _ = _transport(src, src_w, sigma, tgt, tgt_w, tsig, x)
    else:
        c = n
    tx = tx.reshape(d, c, -1)
    out.mean_t = tx @ wz
    out.mean_dt = tx @ (wz * z) / sigma
    return out


def _merged_edges(src, src_w, sigma, tgt, tgt_w, tsig, rule, centres):
    """Source lattice edges plus the target lattice edges pulled back by T^-1.

    Where the target has a near-empty gap, T crosses it over a very short
    source interval.  Pulled-back target edges bracket that interval, so on
    every sub-panel both cdfs move by a bounded amount and Gauss-Legendre
    sees a smooth integrand.  The partition of (0, 1) induced in cdf level
    is the same with the roles of the two measures swapped.
    """
    own = rule.edges(centres, sigma)
    other = rule.edges(tgt, tsig)
    back, _ = _transport(tgt, tgt_w, tsig, src, src_w, sigma, other)
    back = np.clip(back, own[:, :1], own[:, -1:])
    return dedupe_rows(np.concatenate([own, back], axis=1))


def lattice_grid(src, src_w, sigma, tgt, tgt_w, tsig, rule, points=None):
    """Nodes and weights (both (d, Q)) of the merged lattice for each row.

    Only panels within zmax * sigma (plus one panel) of a source atom or an
    evaluation point carry weight; the rest lie in gaps where every
    integrand is below the Gaussian cut-off.
    """
    centres = src if points is None else np.concatenate([src, points], axis=1)
    edges = _merged_edges(src, src_w, sigma, tgt, tgt_w, tsig, rule, centres)
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    reach = (rule.zmax + rule.panel) * sigma
    covered = np.zeros(mid.shape, dtype=bool)
    for j in range(centres.shape[1]):
        covered |= np.abs(mid - centres[:, j:j + 1]) <= reach
    x, g = rule.nodes(edges)
    g = g * np.repeat(covered, rule.order, axis=1)
    return x, g


def _lattice_pass(src, src_w, tgt, tgt_w, sigma, tsig, rule, points, moments):
    d = src.shape[0]
    x, g = lattice_grid(src, src_w, sigma, tgt, tgt_w, tsig, rule, points if moments else None)
    tx, sat = _transport(src, src_w, sigma, tgt, tgt_w, tsig, x)
    dens = _kernels.mixture_pdf(src, src_w, sigma, x)
    gd = g * dens
    cost = np.einsum("dq,dq->d", gd, 0.5 * (x - tx) ** 2)
    mass = np.einsum("dq,dq->d", gd, sat.astype(float))
    out = SlicePass(cost, mass, int(sat.sum()))
    if not moments:
        return out
    centres = src if points is None else points
    c = centres.shape[1]
    mean_t = np.empty((d, c))
    mean_dt = np.empty((d, c))
    step = max(1, _BLOCK // max(1, x.shape[1] * c))
    gt = g * tx
    for a in range(0, d, step):
        b = min(d, a + step)
        u = (x[a:b, :, None] - centres[a:b, None, :]) / sigma
        ker = np.exp(-0.5 * u * u) * (_INV_SQRT_2PI / sigma)
        mean_t[a:b] = np.einsum("dq,dqc->dc", gt[a:b], ker)
        mean_dt[a:b] = np.einsum("dq,dqc->dc", gt[a:b], ker * u) / sigma
    out.mean_t, out.mean_dt = mean_t, mean_dt
    return out
