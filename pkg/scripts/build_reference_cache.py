#!/usr/bin/env python3
"""Populate refcache/ with high-accuracy end states for the problems that
have no closed-form solution.

Each reference comes from the limit solver at order 8 on a grid 32x finer
than the finest study grid (N = 20480), written as one-line CSVs keyed by
problem id and stiffness parameter. An independent scipy cross-check lives
in the test suite.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hbpc.harness import cache_key, save_reference
from hbpc.problems import make
from hbpc.solver import SolverConfig, limit_integrate

TARGETS = [
    ("pareschi_russo", 1.0),
    ("van_der_pol", 1e-1),
    ("van_der_pol", 1e-2),
    ("van_der_pol", 1e-3),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=os.path.join(
        os.path.dirname(__file__), "..", "refcache"))
    ap.add_argument("--nsteps", type=int, default=20480)
    args = ap.parse_args()

    for problem, eps in TARGETS:
        p = make(problem, eps=eps)
        cfg = SolverConfig(variant="Limit", q=8, kmax=1, n_steps=args.nsteps)
        run = limit_integrate(p, cfg)
        key = cache_key(problem, eps=eps)
        path = save_reference(key, p.t_end, run.final_last_w[0], args.out)
        state = ", ".join(f"{x:.16e}" for x in run.final_last_w[0])
        print(f"{key}: t_end={p.t_end:g} state=[{state}] -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
