"""Seeded random instances for tests, sweeps and benchmarks."""

import numpy as np

from .measure import DiscreteMeasure, TimedMeasure
from .univariate import GaussianMixture1D


def random_measure(rng, n, k, scale=1.0, shift=0.0, equal_weights=True):
    atoms = scale * rng.standard_normal((n, k)) + shift
    weights = None if equal_weights else rng.dirichlet(np.ones(n))
    return DiscreteMeasure(atoms, weights)


def random_pair(seed, n=5, k=2, equal_weights=True):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, n, k, equal_weights=equal_weights)
    nu = random_measure(rng, n, k, shift=rng.uniform(-1, 1, k), equal_weights=equal_weights)
    return mu, nu


def random_mixture_pair(seed, sigma, n_max=5):
    """Two smoothed 1D mixtures sharing the width ``sigma``."""
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, n_max + 1, size=2)
    a = GaussianMixture1D(rng.normal(0.0, 1.5, n), rng.dirichlet(np.ones(n)), sigma)
    b = GaussianMixture1D(rng.normal(rng.uniform(-1, 1), 1.5, m), rng.dirichlet(np.ones(m)), sigma)
    return a, b


def random_search_space(seed, n_candidates=20, n_atoms=4, k=2, horizon=1.0):
    """Candidates (t_i, mu_i) with uniform times and Gaussian atoms of varied spread."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_candidates):
        mu = random_measure(rng, n_atoms, k, scale=rng.uniform(0.3, 1.5),
                            shift=rng.uniform(-1, 1, k))
        out.append(TimedMeasure(float(rng.uniform(0, horizon)), mu, horizon))
    return out
