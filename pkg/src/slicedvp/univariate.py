"""One-dimensional optimal transport between Gaussian-smoothed discrete measures.

Costs follow the half-squared convention: W2(mu, nu)^2 is the infimum of
E[|X - Y|^2 / 2] over couplings.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._slices import PMIN, slice_pass
from .quadrature import gauss_rule, legendre_unit


class TransportUnderflow(ArithmeticError):
    """Target density vanished in floating point at a transported point."""

    def __init__(self, x, tx):
        super().__init__(f"target density underflows at T({x!r}) = {tx!r}")
        self.x = x
        self.tx = tx


@dataclass
class Saturation:
    """Count and quadrature mass of evaluation points whose cdf was clamped."""

    count: int = 0
    mass: float = 0.0

    def __iadd__(self, other):
        self.count += other.count
        self.mass += other.mass
        return self

    def flagged(self, mass_tol=1e-12):
        return self.mass > mass_tol

    def to_dict(self):
        return {"count": int(self.count), "mass": float(self.mass), "flagged": bool(self.flagged())}


@dataclass(frozen=True, eq=False)
class GaussianMixture1D:
    """sum_j w_j N(m_j, sigma^2); with sigma = 0 a discrete measure on the means."""

    means: np.ndarray
    weights: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        m = np.array(self.means, dtype=float).reshape(-1)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if m.size == 0 or m.shape != w.shape:
            raise ValueError("means and weights must be non-empty and of equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        if not np.all(np.isfinite(m)):
            raise ValueError("means must be finite")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be finite and non-negative")
        order = np.argsort(m, kind="stable")
        m, w = m[order], w[order] / w.sum()
        m.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sigma", float(self.sigma))

    @classmethod
    def from_measure(cls, mu, sigma=0.0):
        if mu.dim != 1:
            raise ValueError("from_measure expects a one-dimensional measure")
        return cls(mu.atoms[:, 0], mu.weights, sigma)

    @classmethod
    def gaussian(cls, mean, sd):
        return cls([mean], [1.0], sd)

    @property
    def smooth(self):
        return self.sigma > 0

    def second_moment(self):
        return float(self.weights @ self.means ** 2 + self.sigma ** 2)

    def sample(self, rng, size):
        comp = rng.choice(self.means.size, size=size, p=self.weights)
        return self.means[comp] + self.sigma * rng.standard_normal(size)

    def _row(self):
        return self.means[None, :]


def _as_row(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(1, -1), x.shape


def cdf(m, x):
    """F(x) = sum_j w_j Phi((x - m_j) / sigma); right-continuous steps when sigma = 0."""
    row, shape = _as_row(x)
    if m.smooth:
        out = _kernels.mixture_cdf(m._row(), m.weights, m.sigma, row)[0]
    else:
        cum = np.concatenate(([0.0], np.cumsum(m.weights)))
        out = np.minimum(cum[np.searchsorted(m.means, row[0], side="right")], 1.0)
    return _shaped(out, shape)


def sf(m, x):
    """Survival function 1 - F(x), accurate in the upper tail."""
    row, shape = _as_row(x)
    if m.smooth:
        out = _kernels.mixture_sf(m._row(), m.weights, m.sigma, row)[0]
    else:
        out = 1.0 - cdf(m, row[0])
    return _shaped(out, shape)


def pdf(m, x):
    if not m.smooth:
        raise ValueError("a discrete measure has no density")
    row, shape = _as_row(x)
    return _shaped(_kernels.mixture_pdf(m._row(), m.weights, m.sigma, row)[0], shape)


def quantile(m, p):
    """Generalized inverse inf{x : F(x) >= p} for p in (0, 1)."""
    row, shape = _as_row(p)
    if np.any(~(row > 0) | ~(row < 1)):
        raise ValueError("quantile levels must lie strictly inside (0, 1)")
    if m.smooth:
        out = _kernels.mixture_quantile(m._row(), m.weights, m.sigma, row)[0]
    else:
        cum = np.cumsum(m.weights)
        cum[-1] = 1.0
        out = m.means[np.minimum(np.searchsorted(cum, row[0], side="left"), m.means.size - 1)]
    return _shaped(out, shape)


def _shaped(out, shape):
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TransportMap1D:
    """Monotone rearrangement T = F_target^{-1} o F_source."""

    source: GaussianMixture1D
    target: GaussianMixture1D

    def __post_init__(self):
        if not (self.source.smooth and self.target.smooth):
            raise ValueError("transport maps are only defined here for sigma > 0 on both sides")

    def evaluate(self, x):
        """Transported points and a mask of saturated (clamped) evaluations."""
        row, shape = _as_row(x)
        out, sat = _kernels.transport_batch(
            self.source._row(), self.source.weights, self.source.sigma,
            self.target._row(), self.target.weights, self.target.sigma, row, PMIN)
        return out[0].reshape(shape), sat[0].reshape(shape)

    def __call__(self, x):
        out, _ = self.evaluate(x)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        """T'(x) = f_source(x) / f_target(T(x)) > 0."""
        tx, _ = self.evaluate(x)
        num = pdf(self.source, x)
        den = np.asarray(pdf(self.target, tx))
        if np.any(den <= 0):
            bad = np.flatnonzero(np.atleast_1d(den) <= 0)[0]
            xs = np.atleast_1d(np.asarray(x, dtype=float))
            raise TransportUnderflow(float(xs[bad]), float(np.atleast_1d(tx)[bad]))
        out = num / den
        return float(out) if np.ndim(out) == 0 else out


def transport(tmap, x):
    return tmap(x)


def transport_derivative(tmap, x):
    return tmap.derivative(x)


def w2_squared_discrete(xa, wa, xb, wb):
    """Exact half-squared W2 between two discrete 1D measures.

    Monotone coupling on the common refinement of the two cumulative
    weight partitions.
    """
    oa, ob = np.argsort(xa, kind="stable"), np.argsort(xb, kind="stable")
    xa, wa = np.asarray(xa, dtype=float)[oa], np.asarray(wa, dtype=float)[oa]
    xb, wb = np.asarray(xb, dtype=float)[ob], np.asarray(wb, dtype=float)[ob]
    ca, cb = np.cumsum(wa), np.cumsum(wb)
    ca[-1] = cb[-1] = 1.0
    u = np.union1d(ca, cb)
    du = np.diff(np.concatenate(([0.0], u)))
    ia = np.minimum(np.searchsorted(ca, u, side="left"), xa.size - 1)
    ib = np.minimum(np.searchsorted(cb, u, side="left"), xb.size - 1)
    return float(0.5 * np.sum(du * (xa[ia] - xb[ib]) ** 2))


def w2_squared_1d(mu, nu, quad=None, method="auto", order=128, diagnostics=None):
    """Half-squared W2 between two 1D mixtures.

    ``method="auto"``: exact sorted coupling when both sigmas vanish;
    otherwise the displacement form integrated against the smoothing
    Gaussian of the source (the smoother side is used as source).
    ``method="quantile"``: Gauss-Legendre of order ``order`` on the quantile
    integral over (0, 1).
    """
    if not mu.smooth and not nu.smooth:
        return w2_squared_discrete(mu.means, mu.weights, nu.means, nu.weights)
    if method == "quantile":
        p, w = legendre_unit(order)
        return float(0.5 * np.sum(w * (quantile(mu, p) - quantile(nu, p)) ** 2))
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if not mu.smooth:
        mu, nu = nu, mu
    if not nu.smooth:
        # a discrete target has a step-function map; the quantile form handles it
        return w2_squared_1d(mu, nu, method="quantile", order=order)
    res = slice_pass(mu._row(), mu.weights, nu._row(), nu.weights, mu.sigma,
                     gauss_rule(quad), moments=False, tgt_sigma=nu.sigma)
    if diagnostics is not None:
        diagnostics += Saturation(res.sat_count, float(res.sat_mass[0]))
    return float(res.cost[0])


def gaussian_w2_squared(m1, s1, m2, s2):
    """Closed form for two Gaussians under the half-squared cost."""
    return 0.5 * ((m1 - m2) ** 2 + (s1 - s2) ** 2)

