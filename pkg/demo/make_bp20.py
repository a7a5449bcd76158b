"""Regenerate the bundled 20-candidate bp-solve example in demo/bp20/."""

import json
from pathlib import Path

import numpy as np

from slicedvp.instances import random_search_space
from slicedvp.measure import save_measure

SEED = 20
HORIZON = 1.0
LAMBDA = 1.0


def main(out=Path(__file__).parent / "bp20"):
    out.mkdir(exist_ok=True)
    cands = random_search_space(SEED, n_candidates=20, n_atoms=4, k=2, horizon=HORIZON)
    time_weight = 0.5
    g = np.array([-np.sum(c.mu.weights @ c.mu.atoms ** 2) + time_weight * c.t for c in cands])
    # least favourable admissible start: lowest G still within lambda of the best
    ok = np.flatnonzero(g >= g.max() - LAMBDA)
    start = int(ok[np.argmin(g[ok])])
    entries = []
    for i, c in enumerate(cands):
        name = f"cand{i:02d}.json"
        save_measure(c.mu, out / name)
        entries.append({"t": c.t, "measure": name})
    rng = np.random.default_rng(SEED + 1)
    probes = []
    for j in range(3):
        name = f"probe{j}.json"
        atoms = rng.uniform(0.3, 2.0) * rng.standard_normal((4, 2))
        save_measure(type(cands[0].mu)(atoms), out / name)
        probes.append({"t": float(rng.uniform(0, HORIZON)), "measure": name})
    cfg = {
        "horizon": HORIZON, "lambda": LAMBDA, "delta": 1.0, "start": start,
        "rule": {"n_nodes": 64, "method": "uniform-circle", "seed": 0},
        "objective": {"kind": "neg_second_moment", "time_weight": time_weight},
        "candidates": entries, "probes": probes,
    }
    (out / "config.json").write_text(json.dumps(cfg, indent=1) + "\n")
    save_measure(cands[0].mu, out / "mu.json")
    save_measure(cands[1].mu, out / "nu.json")


if __name__ == "__main__":
    main()
