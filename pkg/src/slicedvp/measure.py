"""Discrete probability measures on R^k, directions, and timed measures."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

WEIGHT_SUM_TOL = 1e-9
MERGE_TOL = 1e-12


class DimensionMismatch(ValueError):
    pass


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure ``sum_i w_i delta_{x_i}``.

    ``atoms`` has shape (n, k).  Weights within 1e-9 of summing to one are
    renormalized; anything further off is rejected.  Instances are
    immutable (the underlying arrays are read-only).
    """

    atoms: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if atoms.ndim != 2 or atoms.shape[0] == 0 or atoms.shape[1] == 0:
            raise ValueError("atoms must be a non-empty (n, k) array with k >= 1")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atom coordinates must be finite")
        n = atoms.shape[0]
        if self.weights is None:
            weights = np.full(n, 1.0 / n)
        else:
            weights = np.array(self.weights, dtype=float).reshape(-1)
        if weights.shape != (n,):
            raise ValueError(f"expected {n} weights, got {weights.shape[0]}")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("weights must be finite and non-negative")
        total = weights.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        weights = weights / total
        object.__setattr__(self, "atoms", _frozen(atoms))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def dim(self):
        return self.atoms.shape[1]

    @property
    def size(self):
        return self.atoms.shape[0]

    @classmethod
    def dirac(cls, point):
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), [1.0])

    def key(self):
        """Hashable identity of the measure (exact bytes of atoms and weights)."""
        return (self.atoms.shape, self.atoms.tobytes(), self.weights.tobytes())

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def mean(self):
        return self.weights @ self.atoms

    def with_atom(self, index, point):
        """Copy of the measure with atom ``index`` moved to ``point``."""
        atoms = self.atoms.copy()
        atoms[index] = point
        return DiscreteMeasure(atoms, self.weights)

    def to_dict(self):
        return {
            "dim": self.dim,
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        if "atoms" not in data:
            raise ValueError("measure JSON needs an 'atoms' list")
        atoms = np.array(data["atoms"], dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        dim = data.get("dim")
        if dim is not None and atoms.shape[1] != int(dim):
            raise ValueError(f"'dim' is {dim} but atoms have {atoms.shape[1]} coordinates")
        return cls(atoms, data.get("weights"))


def load_measure(path):
    with open(path) as fh:
        return DiscreteMeasure.from_dict(json.load(fh))


def save_measure(mu, path):
    Path(path).write_text(json.dumps(mu.to_dict(), indent=1) + "\n")


@dataclass(frozen=True, eq=False)
class Direction:
    """Unit vector theta in R^k, the slicing map x -> x . theta."""

    components: np.ndarray

    def __post_init__(self):
        v = np.array(self.components, dtype=float).reshape(-1)
        if v.size == 0 or abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        object.__setattr__(self, "components", _frozen(v))

    @classmethod
    def normalized(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))

    @property
    def dim(self):
        return self.components.size

    def __eq__(self, other):
        if not isinstance(other, Direction):
            return NotImplemented
        return np.array_equal(self.components, other.components)

    def __hash__(self):
        return hash(self.components.tobytes())


@dataclass(frozen=True)
class SmoothingLevel:
    """Standard deviation of the isotropic Gaussian N(0, sigma^2 I_k)."""

    sigma: float

    def __post_init__(self):
        s = float(self.sigma)
        if not np.isfinite(s) or s < 0:
            raise ValueError("sigma must be a finite non-negative real")
        object.__setattr__(self, "sigma", s)

    def require_positive(self, what="this operation"):
        if self.sigma <= 0:
            raise ValueError(
                f"{what} needs sigma > 0: the transport map of an unsmoothed "
                "discrete slice is not continuous and strictly increasing")
        return self.sigma


def as_sigma(s):
    return s if isinstance(s, SmoothingLevel) else SmoothingLevel(s)


@dataclass(frozen=True, eq=False)
class TimedMeasure:
    """A point (t, mu) of [0, T] x P_2(R^k)."""

    t: float
    mu: DiscreteMeasure
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0.0 <= self.t <= self.horizon:
            raise ValueError(f"time {self.t} outside [0, {self.horizon}]")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "horizon", float(self.horizon))

    def key(self):
        return (self.t, self.horizon, self.mu.key())

    def __eq__(self, other):
        if not isinstance(other, TimedMeasure):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _theta_array(theta):
    return theta.components if isinstance(theta, Direction) else np.asarray(theta, dtype=float)


def project(mu, theta):
    """Pushforward of ``mu`` under x -> x . theta.

    The result is a one-dimensional measure with ascending atoms; atoms
    whose projections agree within 1e-12 are merged.
    """
    th = _theta_array(theta)
    if th.shape != (mu.dim,):
        raise DimensionMismatch(f"direction has dimension {th.size}, measure has {mu.dim}")
    values = mu.atoms @ th
    order = np.argsort(values, kind="stable")
    values, weights = values[order], mu.weights[order]
    # start a new group wherever the gap to the previous value exceeds the tolerance
    starts = np.concatenate(([True], np.diff(values) > MERGE_TOL))
    group = np.cumsum(starts) - 1
    merged_w = np.bincount(group, weights=weights)
    merged_x = values[starts]
    return DiscreteMeasure(merged_x[:, None], merged_w)


def second_moment(mu):
    return float(mu.weights @ np.einsum("ij,ij->i", mu.atoms, mu.atoms))


def smoothed_second_moment(mu, s):
    """Second moment of mu * N(0, sigma^2 I_k), in closed form."""
    sigma = as_sigma(s).sigma
    return second_moment(mu) + mu.dim * sigma ** 2


def check_same_dim(*measures):
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise DimensionMismatch(f"measures live in different dimensions: {sorted(dims)}")
    return dims.pop()
