"""Measure derivatives of mu -> SW2^sigma(mu, nu)^2 and their moment bounds.

With T_theta the monotone map between the smoothed slices,

    grad(x) = sum_i w_i theta_i (theta_i . x - E[T_i(theta_i . x + sigma Z)])
    hess(x) = sum_i w_i theta_i theta_i^T (1 - E[T_i'(theta_i . x + sigma Z)])

For an n-atom measure, ``w_j * grad(x_j)`` is the gradient of the squared
distance with respect to atom ``x_j``.  E[T'] is computed in Stein form,
E[Z T(a + sigma Z)] / sigma, which never divides by a target density.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate

from . import _kernels
from ._slices import PMIN, lattice_grid, slice_pass
from .measure import (Direction, as_sigma, project, second_moment,
                      smoothed_second_moment)
from .quadrature import GaussRule, LatticeRule, gauss_rule
from .sliced import CONVENTION, _check, sw2_sigma_squared
from .univariate import GaussianMixture1D, Saturation

FIRST_BOUND_C = 2.0
SECOND_BOUND_C = 2.0


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float

    @property
    def holds(self):
        return self.lhs <= self.rhs


def _slice_moments(mu, nu, sigma, rule, quad, points=None):
    nodes, weights = rule.half()
    src = (mu.atoms @ nodes.T).T
    tgt = (nu.atoms @ nodes.T).T
    proj = src if points is None else (points @ nodes.T).T
    res = slice_pass(src, mu.weights, tgt, nu.weights, sigma, quad,
                     points=None if points is None else proj)
    sat = Saturation(res.sat_count, float(weights @ res.sat_mass))
    return nodes, weights, proj, res, sat


def _points(x, k):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != k:
        raise ValueError(f"evaluation points must have {k} coordinates")
    return x, single


@dataclass(eq=False)
class _Field:
    mu: object
    nu: object
    sigma: float
    rule: object
    quad: object
    values: np.ndarray
    saturation: Saturation = field(default_factory=Saturation)

    def __call__(self, x):
        pts, single = _points(x, self.mu.dim)
        nodes, weights, proj, res, _ = _slice_moments(
            self.mu, self.nu, self.sigma, self.rule, self.quad, pts)
        out = self._assemble(nodes, weights, proj, res)
        return out[0] if single else out

    def meta(self):
        return {
            "sigma": self.sigma,
            "rule": self.rule.describe(),
            "gauss_rule": self.quad.describe(),
            "convention": CONVENTION,
            "saturation": self.saturation.to_dict(),
        }


class GradientField(_Field):
    """x -> D_mu SW2^sigma(mu, nu)^2 (x); ``values`` holds it at mu's atoms."""

    @staticmethod
    def _assemble(nodes, weights, proj, res):
        return (weights[:, None] * (proj - res.mean_t)).T @ nodes

    def to_dict(self):
        out = self.meta()
        out["atoms"] = self.mu.atoms.tolist()
        out["gradient"] = self.values.tolist()
        return out


class HessianField(_Field):
    """x -> D^2_{x mu} SW2^sigma(mu, nu)^2 (x); symmetric k x k matrices."""

    mean_dt: np.ndarray | None = None

    @staticmethod
    def _assemble(nodes, weights, proj, res):
        c = weights[:, None] * (1.0 - res.mean_dt)
        return np.einsum("ip,ij,il->pjl", c, nodes, nodes)

    def to_dict(self):
        out = self.meta()
        out["atoms"] = self.mu.atoms.tolist()
        out["hessian"] = self.values.tolist()
        out["min_mean_derivative"] = float(np.min(self.mean_dt)) if self.mean_dt is not None else None
        return out


def _prepare(mu, nu, s, rule, quad, what):
    sigma = as_sigma(s).require_positive(what)
    _check(mu, nu, rule)
    return sigma, gauss_rule(quad)


def grad_measure(mu, nu, s, rule, quad=None):
    """Gradient field of mu -> SW2^sigma(mu, nu)^2, evaluated eagerly at mu's atoms.

    ``quad`` selects the Gaussian rule (None: default lattice rule, int:
    Gauss-Hermite order).  Requires sigma > 0.
    """
    sigma, q = _prepare(mu, nu, s, rule, quad, "the measure gradient")
    nodes, weights, proj, res, sat = _slice_moments(mu, nu, sigma, rule, q)
    values = GradientField._assemble(nodes, weights, proj, res)
    return GradientField(mu, nu, sigma, rule, q, values, sat)


def hess_x_measure(mu, nu, s, rule, quad=None):
    """Mixed second derivative field, evaluated eagerly at mu's atoms."""
    sigma, q = _prepare(mu, nu, s, rule, quad, "the mixed second derivative")
    nodes, weights, proj, res, sat = _slice_moments(mu, nu, sigma, rule, q)
    values = HessianField._assemble(nodes, weights, proj, res)
    field_ = HessianField(mu, nu, sigma, rule, q, values, sat)
    field_.mean_dt = res.mean_dt
    return field_


def grad_and_hess(mu, nu, s, rule, quad=None):
    """Both fields from a single pass over the slices."""
    sigma, q = _prepare(mu, nu, s, rule, quad, "the measure derivatives")
    nodes, weights, proj, res, sat = _slice_moments(mu, nu, sigma, rule, q)
    g = GradientField(mu, nu, sigma, rule, q, GradientField._assemble(nodes, weights, proj, res), sat)
    h = HessianField(mu, nu, sigma, rule, q, HessianField._assemble(nodes, weights, proj, res), sat)
    h.mean_dt = res.mean_dt
    return g, h


def lifted_objective(mu, nu, s, rule, quad=None):
    """X -> SW2^sigma(sum_j w_j delta_{X_j}, nu)^2 as a function of the atom array."""
    def f(atoms):
        return sw2_sigma_squared(mu.__class__(atoms, mu.weights), nu, s, rule, quad).value
    return f


def fd_atom_gradients(mu, nu, s, rule, quad=None, h=1e-5):
    """Central differences of the lifted objective, divided by the atom weights."""
    f = lifted_objective(mu, nu, s, rule, quad)
    base = np.array(mu.atoms)
    out = np.empty_like(base)
    for j in range(base.shape[0]):
        for d in range(base.shape[1]):
            up, dn = base.copy(), base.copy()
            up[j, d] += h
            dn[j, d] -= h
            out[j, d] = (f(up) - f(dn)) / (2 * h * mu.weights[j])
    return out


def fd_jacobian(fn, x, h=1e-5):
    """Central-difference Jacobian of a vector field R^k -> R^k at one point."""
    x = np.asarray(x, dtype=float)
    cols = []
    for d in range(x.size):
        e = np.zeros_like(x)
        e[d] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
    return np.stack(cols, axis=1)


def check_first_bound(mu, nu, s, rule, quad=None, C=FIRST_BOUND_C):
    """(sum_j w_j |grad(x_j)|^2, C (m2(mu) + m2(nu * N_sigma)))."""
    g = grad_measure(mu, nu, s, rule, quad)
    lhs = float(mu.weights @ np.sum(g.values ** 2, axis=1))
    rhs = C * (second_moment(mu) + smoothed_second_moment(nu, s))
    return BoundCheck(lhs, float(rhs))


def check_second_bound(mu, nu, s, rule, quad=None, C=SECOND_BOUND_C):
    """(sum_j w_j ||hess(x_j)||_2, C (1 + sqrt(m2(nu * N_sigma)) / sigma))."""
    h = hess_x_measure(mu, nu, s, rule, quad)
    norms = np.linalg.norm(h.values, ord=2, axis=(1, 2))
    lhs = float(mu.weights @ norms)
    rhs = C * (1.0 + math.sqrt(smoothed_second_moment(nu, s)) / h.sigma)
    return BoundCheck(lhs, float(rhs))


# -- integration by parts along one slice ---------------------------------

def _density(m, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _kernels.mixture_pdf(m._row(), m.weights, m.sigma, x[None, :])[0]


def _map(a, b, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out, _ = _kernels.transport_batch(a._row(), a.weights, a.sigma,
                                      b._row(), b.weights, b.sigma, x[None, :], PMIN)
    return out[0]


def _stein_side(source, target, q):
    res = slice_pass(source._row(), source.weights, target._row(), target.weights,
                     source.sigma, q, tgt_sigma=target.sigma)
    return float(res.mean_dt[0] @ source.weights)


def _adaptive_lhs(source, target):
    # int T'(x) f(x) dx = int f(T^-1(y)) dy; the substituted integrand is
    # bounded by max f and has no spikes where T climbs across a target gap
    def f(y):
        return float(_density(source, _map(target, source, y))[0])

    span = 12.0 * target.sigma
    lo, hi = target.means[0] - span, target.means[-1] + span
    brk = np.concatenate([target.means, _map(source, target, source.means)])
    brk = np.unique(brk[(brk > lo) & (brk < hi)])
    edges = np.concatenate(([lo], brk, [hi]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return total


def _ruled_lhs(source, target, q):
    if isinstance(q, GaussRule):
        x = (source.means[:, None] + source.sigma * q.nodes).ravel()
        dt = _density(source, x) / _density(target, _map(source, target, x))
        return float(source.weights @ q.expect(dt.reshape(source.means.size, -1)))
    x, g = lattice_grid(source._row(), source.weights, source.sigma,
                        target._row(), target.weights, target.sigma, q)
    x, g = x[0], g[0]
    f = _density(source, x)
    return float(np.sum(g * f * f / _density(target, _map(source, target, x))))


def ibp_sides(source, target, quad=None):
    """Both sides of int T' d(source) = int E[Z T(m + sigma Z)] / sigma d(discrete source).

    ``source`` and ``target`` are smoothed 1D mixtures.  With ``quad=None``
    the left side is an adaptive integral and the right side uses the
    default lattice rule, so the two are independent quadrature paths.
    With a rule given, both sides use it.
    """
    if not (source.smooth and target.smooth):
        raise ValueError("both slices must be smoothed (sigma > 0)")
    if quad is None:
        return _adaptive_lhs(source, target), _stein_side(source, target, gauss_rule(None))
    q = gauss_rule(quad)
    return _ruled_lhs(source, target, q), _stein_side(source, target, q)


def ibp_identity_residual(mu, nu, s, theta, quad=None):
    """|LHS - RHS| of the integration-by-parts identity on the slice along ``theta``."""
    sigma = as_sigma(s).require_positive("the integration-by-parts identity")
    th = theta if isinstance(theta, Direction) else Direction(theta)
    a = GaussianMixture1D.from_measure(project(mu, th), sigma)
    b = GaussianMixture1D.from_measure(project(nu, th), sigma)
    lhs, rhs = ibp_sides(a, b, quad)
    return abs(lhs - rhs)
