"""Sliced Wasserstein distance SW2, its Gaussian-smoothed version, and an exact W2 oracle."""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .measure import DimensionMismatch, as_sigma, check_same_dim
from .quadrature import gauss_rule
from ._slices import slice_pass
from .univariate import Saturation, w2_squared_discrete

CONVENTION = "normalized-sphere, half-squared-cost"
ORACLE_MAX_ATOMS = 64


@dataclass
class SlicedDistanceReport:
    """Squared sliced distance and its per-direction breakdown."""

    value: float
    per_direction_values: np.ndarray
    rule: object
    sigma: float
    saturation: Saturation = field(default_factory=Saturation)
    quad: dict | None = None

    @property
    def per_direction(self):
        return list(zip(self.rule.directions(), self.per_direction_values.tolist()))

    def to_dict(self, sqrt=False):
        out = {
            "value": self.value,
            "sigma": self.sigma,
            "rule": self.rule.describe(),
            "convention": CONVENTION,
            "per_direction": [
                {"theta": th.tolist(), "value": v}
                for th, v in zip(self.rule.nodes, self.per_direction_values.tolist())
            ],
            "saturation": self.saturation.to_dict(),
        }
        if self.quad is not None:
            out["gauss_rule"] = self.quad
        if sqrt:
            out["distance"] = math.sqrt(max(self.value, 0.0))
        return out


def _check(mu, nu, rule):
    k = check_same_dim(mu, nu)
    if rule.k != k:
        raise DimensionMismatch(f"rule is on S^{rule.k - 1} but measures live in R^{k}")


def sw2_squared(mu, nu, rule):
    """SW2(mu, nu)^2 = sum_i w_i W2(mu_theta_i, nu_theta_i)^2 with exact 1D transport."""
    _check(mu, nu, rule)
    nodes, weights = rule.half()
    pa, pb = mu.atoms @ nodes.T, nu.atoms @ nodes.T
    per = np.array([
        w2_squared_discrete(pa[:, i], mu.weights, pb[:, i], nu.weights)
        for i in range(nodes.shape[0])
    ])
    return SlicedDistanceReport(float(weights @ per), rule.unfold(per), rule, 0.0)


def sw2_sigma_squared(mu, nu, s, rule, quad=None):
    """SW2^sigma(mu, nu)^2 = SW2(mu * N_sigma, nu * N_sigma)^2.

    Each slice is the 1D mixture with means theta . x_j and width sigma,
    since projecting and smoothing commute.
    """
    sigma = as_sigma(s).sigma
    if sigma == 0:
        return sw2_squared(mu, nu, rule)
    _check(mu, nu, rule)
    g = gauss_rule(quad)
    nodes, weights = rule.half()
    src = np.ascontiguousarray((mu.atoms @ nodes.T).T)
    tgt = np.ascontiguousarray((nu.atoms @ nodes.T).T)
    res = slice_pass(src, mu.weights, tgt, nu.weights, sigma, g, moments=False)
    sat = Saturation(res.sat_count, float(weights @ res.sat_mass))
    return SlicedDistanceReport(float(weights @ res.cost), rule.unfold(res.cost), rule, sigma,
                                sat, g.describe())


def _multiplicities(weights, limit):
    fr = [Fraction(float(w)).limit_denominator(limit) for w in weights]
    if any(abs(float(f) - w) > 1e-9 for f, w in zip(fr, weights)):
        raise ValueError(
            f"weights are not multiples of 1/L for any L <= {limit}; "
            "the exact oracle only handles commensurable weights")
    return fr


def w2_squared_exact(mu, nu, max_atoms=ORACLE_MAX_ATOMS):
    """Exact half-squared W2 between small discrete measures.

    Both measures are expanded to equal-weight multisets on a common
    denominator L and the assignment problem is solved exactly.  Refuses
    instances with L > ``max_atoms``.
    """
    check_same_dim(mu, nu)
    fa = _multiplicities(mu.weights, max_atoms)
    fb = _multiplicities(nu.weights, max_atoms)
    L = 1
    for f in fa + fb:
        L = L * f.denominator // math.gcd(L, f.denominator)
    if L > max_atoms:
        raise ValueError(
            f"common refinement needs {L} atoms per side; the exact oracle is capped at "
            f"{max_atoms} (desk-scale only)")
    ca = [int(f * L) for f in fa]
    cb = [int(f * L) for f in fb]
    if sum(ca) != L or sum(cb) != L:
        raise ValueError("rounded weights do not sum to one on the common refinement")
    xa = np.repeat(mu.atoms, ca, axis=0)
    xb = np.repeat(nu.atoms, cb, axis=0)
    cost = 0.5 * ((xa[:, None, :] - xb[None, :, :]) ** 2).sum(axis=-1)
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum() / L)
