"""Rules for Gaussian expectations along a slice.

``GaussRule`` integrates E[g(Z)], Z ~ N(0, 1), with nodes placed around
each source atom separately: ``GaussRule.hermite(n)`` is plain
Gauss-Hermite (probabilists' weight) and ``GaussRule.composite`` applies
Gauss-Legendre panel by panel on [-zmax, zmax] against the normal density.

``LatticeRule`` (the default) instead lays one composite Gauss-Legendre
grid over the whole slice, with panel edges on the lattice
``panel * sigma * Z``.  The transport map is evaluated once per grid node
and every atom's expectation is a reweighting of those values.  The grid
does not move with the evaluation points, so derivatives in those points
of grid quantities are exact derivatives of the discretized expressions.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss

_INV_SQRT_2PI = 0.3989422804014327

DEFAULT_PANELS = 32
DEFAULT_PANEL_ORDER = 8
DEFAULT_ZMAX = 9.0
# panels per row beyond which a lattice grid is refused (memory guard)
MAX_PANELS = 1 << 20


class GridOverflow(ArithmeticError):
    """The slice is too wide, relative to sigma, for a lattice grid."""


@dataclass(frozen=True, eq=False)
class GaussRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    order: int
    panels: int = 1
    zmax: float = float("inf")

    @classmethod
    def hermite(cls, order):
        order = int(order)
        if order < 1:
            raise ValueError("Gauss-Hermite order must be >= 1")
        z, w = hermegauss(order)
        return cls(z, w / w.sum(), "hermite", order)

    @classmethod
    def composite(cls, panels=DEFAULT_PANELS, order=DEFAULT_PANEL_ORDER, zmax=DEFAULT_ZMAX):
        if panels < 1 or order < 1 or not zmax > 0:
            raise ValueError("composite rule needs panels >= 1, order >= 1, zmax > 0")
        t, w = leggauss(order)
        edges = np.linspace(-zmax, zmax, panels + 1)
        half = 0.5 * np.diff(edges)
        z = (edges[:-1, None] + half[:, None] * (t + 1.0)).ravel()
        wz = (half[:, None] * w).ravel() * np.exp(-0.5 * z * z) * _INV_SQRT_2PI
        return cls(z, wz, "composite", order, panels, float(zmax))

    @property
    def size(self):
        return self.nodes.size

    def describe(self):
        if self.kind == "hermite":
            return {"kind": "hermite", "order": self.order}
        return {"kind": "composite", "panels": self.panels, "order": self.order, "zmax": self.zmax}

    def expect(self, values, axis=-1):
        """Apply the rule along ``axis`` of an array of integrand values."""
        return np.tensordot(values, self.weights, axes=([axis], [0]))


@dataclass(frozen=True)
class LatticeRule:
    """Shared composite Gauss-Legendre grid per slice (see module docstring)."""

    panel: float = 0.5
    order: int = 16
    zmax: float = DEFAULT_ZMAX

    def __post_init__(self):
        if not (self.panel > 0 and self.order >= 1 and self.zmax > 0):
            raise ValueError("lattice rule needs panel > 0, order >= 1, zmax > 0")

    def describe(self):
        return {"kind": "lattice", "panel": self.panel, "order": self.order, "zmax": self.zmax}

    def edges(self, centres, sigma):
        """Sorted lattice edges covering [c - zmax sigma, c + zmax sigma] for each centre.

        ``centres`` is (d, c); returns (d, E) with duplicates removed and
        each row padded on the right by repeating its last edge.
        """
        width = self.panel * sigma
        centres = np.asarray(centres, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            lo = np.floor((centres - self.zmax * sigma) / width)
            span = np.max(np.ceil((centres + self.zmax * sigma) / width) - lo)
        if not np.isfinite(span) or span > MAX_PANELS:
            raise GridOverflow(
                f"slice needs {span:.3g} panels of width {width:.3g}; the limit is {MAX_PANELS} "
                "(atoms too far apart for this sigma)")
        n = int(span)
        e = ((lo[:, :, None] + np.arange(n + 1)) * width).reshape(len(centres), -1)
        return dedupe_rows(e)

    def nodes(self, edges):
        """Gauss-Legendre nodes and weights, both (d, P * order), on sorted edges."""
        t, w = leggauss(self.order)
        left, half = edges[:, :-1, None], 0.5 * np.diff(edges, axis=1)[:, :, None]
        d = edges.shape[0]
        x = (left + half * (t + 1.0)).reshape(d, -1)
        return x, (half * w).reshape(d, -1)


def dedupe_rows(e):
    """Sort each row, drop repeated values, pad with the row maximum."""
    e = np.sort(e, axis=1)
    dup = np.zeros(e.shape, dtype=bool)
    dup[:, 1:] = np.diff(e, axis=1) == 0
    e = np.where(dup, np.inf, e)
    e.sort(axis=1)
    keep = int(np.max(np.sum(~dup, axis=1)))
    e = e[:, :keep]
    return np.where(np.isinf(e), np.max(np.where(np.isinf(e), -np.inf, e), axis=1, keepdims=True), e)


DEFAULT_RULE = LatticeRule()


def gauss_rule(spec=None):
    """Resolve a rule spec.

    None -> the default lattice rule; int -> Gauss-Hermite of that order;
    a dict ``{"kind": "hermite"|"composite"|"lattice", ...}``; or a rule.
    """
    if spec is None:
        return DEFAULT_RULE
    if isinstance(spec, (GaussRule, LatticeRule)):
        return spec
    if isinstance(spec, (int, np.integer)):
        return GaussRule.hermite(int(spec))
    if isinstance(spec, dict):
        kind = spec.get("kind", "lattice")
        if kind == "hermite":
            return GaussRule.hermite(spec["order"])
        if kind == "composite":
            return GaussRule.composite(spec.get("panels", DEFAULT_PANELS),
                                       spec.get("order", DEFAULT_PANEL_ORDER),
                                       spec.get("zmax", DEFAULT_ZMAX))
        if kind == "lattice":
            return LatticeRule(spec.get("panel", 0.5), spec.get("order", 16),
                               spec.get("zmax", DEFAULT_ZMAX))
        raise ValueError(f"unknown rule kind {kind!r}")
    raise TypeError(f"cannot build a Gaussian rule from {spec!r}")


def legendre_unit(order):
    """Gauss-Legendre nodes and weights on (0, 1)."""
    t, w = leggauss(int(order))
    return 0.5 * (t + 1.0), 0.5 * w
