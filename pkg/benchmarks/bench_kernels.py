"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times the transport kernel on lattice grids of a k = 2 sliced distance and
a full sw2_sigma_squared evaluation under each backend, and checks that
the two backends agree.
"""

import argparse
import time

import numpy as np

from slicedvp import _kernels, _slices
from slicedvp.instances import random_pair
from slicedvp.quadrature import gauss_rule
from slicedvp.sliced import sw2_sigma_squared
from slicedvp.sphere import build_rule


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nodes", type=int, default=256)
    ap.add_argument("--sigma", type=float, default=0.5)
    args = ap.parse_args(argv)

    mu, nu = random_pair(0, n=8, k=2)
    rule = build_rule(2, args.nodes)
    nodes, _ = rule.half()
    src = np.ascontiguousarray((mu.atoms @ nodes.T).T)
    tgt = np.ascontiguousarray((nu.atoms @ nodes.T).T)
    x, _ = _slices.lattice_grid(src, mu.weights, args.sigma, tgt, nu.weights, args.sigma, gauss_rule(None))
    print(f"transport kernel: {x.shape[0]} slices x {x.shape[1]} points, sigma={args.sigma}")

    backends = _kernels.backends()
    results = {}
    for name, mod in backends.items():
        t, (tx, _) = _best(lambda: mod.transport_batch(src, mu.weights, args.sigma, tgt, nu.weights,
                                                        args.sigma, x, _slices.PMIN), args.repeat)
        results[name] = tx
        print(f"  {name:8s} {t * 1e3:9.1f} ms  ({x.size / t / 1e6:.2f} M points/s)")
    if len(results) == 2:
        a, b = results.values()
        print(f"  max |difference| between backends: {np.abs(a - b).max():.2e}")

    print(f"sw2_sigma_squared, k=2, {args.nodes} directions:")
    saved = _kernels.ACTIVE
    try:
        for name in backends:
            _kernels.use(name)
            t, rep = _best(lambda: sw2_sigma_squared(mu, nu, args.sigma, rule), args.repeat)
            print(f"  {name:8s} {t * 1e3:9.1f} ms  value={rep.value:.15g}")
    finally:
        _kernels.use(saved)


if __name__ == "__main__":
    main()
