"""Smallest constants that the phi_delta measure-derivative bounds need on seeded runs.

For every (run, probe) the ratio lhs / (rhs / C) is the least C for which
that bound holds; the maximum over the sweep is what a frozen constant has
to dominate.  Usage: python3 benchmarks/constants_sweep.py [n_spaces]
"""

import sys
import time

import numpy as np

from slicedvp import (DiscreteMeasure, GaugeParams, SearchSpace, TimedMeasure, bp_solve,
                      build_rule, phi_derivative_bounds)
from slicedvp.gauge import neg_second_moment
from slicedvp.instances import random_search_space


def sweep(n_spaces=6, probes=10, deltas=(0.5, 1.0, 2.0)):
    rule = build_rule(2, 64)
    G = neg_second_moment(0.5)
    need3 = need4 = 0.0
    for delta in deltas:
        params = GaugeParams(delta, 1.0)
        for i in range(n_spaces):
            space = SearchSpace(random_search_space(4000 + i, horizon=1.0))
            g = np.array([G(c) for c in space])
            ok = np.flatnonzero(g >= g.max() - 1.0)
            res = bp_solve(G, space, space[int(ok[np.argmin(g[ok])])], 1.0, params, rule)
            rng = np.random.default_rng(5000 + i)
            for _ in range(probes):
                scale = rng.uniform(0.1, 3.0)
                x = TimedMeasure(float(rng.uniform(0, 1)),
                                 DiscreteMeasure(rng.normal(0, scale, (4, 2))), 1.0)
                rep = phi_derivative_bounds(x, res, params, rule, C=1.0)
                need3 = max(need3, rep["measure"]["lhs"] / rep["measure"]["rhs"])
                need4 = max(need4, rep["mixed"]["lhs"] / rep["mixed"]["rhs"])
    return need3, need4


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    t0 = time.perf_counter()
    c3, c4 = sweep(n)
    print(f"least C for the gradient bound: {c3:.4f}")
    print(f"least C for the mixed bound:    {c4:.4f}")
    print(f"({time.perf_counter() - t0:.1f}s)")
