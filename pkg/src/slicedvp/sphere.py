"""Quadrature for the normalized spherical measure on S^{k-1}."""

from dataclasses import dataclass

import numpy as np

from .measure import Direction

METHODS = ("exact-pair", "uniform-circle", "monte-carlo")


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Nodes on S^{k-1} with weights summing to one.

    When ``antipodal`` is set, ``nodes[h + i] == -nodes[i]`` with equal
    weights for ``h = n // 2``; sliced quantities are even in theta, so
    only the first half needs to be evaluated.
    """

    k: int
    nodes: np.ndarray
    weights: np.ndarray
    method: str
    seed: int | None = None
    antipodal: bool = False

    @property
    def size(self):
        return self.nodes.shape[0]

    def directions(self):
        return [Direction(v) for v in self.nodes]

    def half(self):
        """Nodes and weights to evaluate, folding antipodal pairs when possible."""
        if self.antipodal:
            h = self.size // 2
            return self.nodes[:h], 2.0 * self.weights[:h]
        return self.nodes, self.weights

    def unfold(self, values):
        """Expand per-node values computed on ``half()`` back to every node."""
        values = np.asarray(values)
        if self.antipodal:
            return np.concatenate([values, values])
        return values

    def describe(self):
        return {"k": self.k, "n_nodes": self.size, "method": self.method, "seed": self.seed}


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def default_method(k):
    return {1: "exact-pair", 2: "uniform-circle"}.get(k, "monte-carlo")


def build_rule(k, n_nodes=64, method=None, seed=0):
    """Build a rule for the uniform probability measure on S^{k-1}.

    k = 1 gives {+1, -1}; k = 2 equispaced angles (exact for trigonometric
    polynomials of degree < n_nodes); otherwise seeded uniform samples in
    antithetic pairs.
    """
    k = int(k)
    if k < 1:
        raise ValueError("dimension k must be >= 1")
    method = method or default_method(k)
    if method not in METHODS:
        raise ValueError(f"unknown rule method {method!r}; expected one of {METHODS}")
    if method == "exact-pair":
        if k != 1:
            raise ValueError("exact-pair rules exist only for k = 1")
        nodes = np.array([[1.0], [-1.0]])
        return SphereRule(1, _frozen(nodes), _frozen([0.5, 0.5]), method, None, True)
    n_nodes = int(n_nodes)
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if method == "uniform-circle":
        if k != 2:
            raise ValueError("uniform-circle rules exist only for k = 2")
        if n_nodes % 2 == 0:
            h = n_nodes // 2
            ang = 2.0 * np.pi * np.arange(h) / n_nodes
            first = np.column_stack([np.cos(ang), np.sin(ang)])
            nodes = np.vstack([first, -first])
        else:
            ang = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
            nodes = np.column_stack([np.cos(ang), np.sin(ang)])
        weights = np.full(n_nodes, 1.0 / n_nodes)
        return SphereRule(2, _frozen(nodes), _frozen(weights), method, None, n_nodes % 2 == 0)
    if k < 2:
        raise ValueError("monte-carlo rules need k >= 2")
    if n_nodes % 2:
        raise ValueError("monte-carlo rules use antithetic pairs; n_nodes must be even")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_nodes // 2, k))
    first = g / np.linalg.norm(g, axis=1, keepdims=True)
    nodes = np.vstack([first, -first])
    weights = np.full(n_nodes, 1.0 / n_nodes)
    return SphereRule(k, _frozen(nodes), _frozen(weights), method, int(seed), True)


def rule_from_spec(spec, k=None):
    """Rule from the JSON form ``{"k": 2, "n_nodes": 64, "method": ..., "seed": 0}``."""
    k = spec.get("k", k)
    if k is None:
        raise ValueError("rule spec needs 'k'")
    return build_rule(k, spec.get("n_nodes", 64), spec.get("method"), spec.get("seed", 0))


def second_moment_matrix(rule):
    """sum_i w_i theta_i theta_i^T."""
    m = np.einsum("i,ij,il->jl", rule.weights, rule.nodes, rule.nodes)
    return 0.5 * (m + m.T)


def kappa(rule):
    """Scalar closest (Frobenius) to the second moment matrix: trace / k = 1/k."""
    return float(np.trace(second_moment_matrix(rule)) / rule.k)
