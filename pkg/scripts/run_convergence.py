#!/usr/bin/env python3
"""Per-iterate convergence study on the scalar power-law problem.

Runs the four standard (q, kmax) combinations over N in {40..640}, writes
one CSV per combination, and prints the estimated orders. Newton tolerances
are tightened so the nonlinear solve does not pollute the high-iterate
error columns.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from hbpc.harness import StudyConfig, estimate_order, run_convergence_study
from hbpc.newton import NewtonConfig

COMBOS = [(4, 3), (4, 9), (6, 9), (8, 9)]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results_convergence")
    ap.add_argument("--variant", default="Alg1",
                    choices=("Alg1", "Alg2", "LO"))
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    newton = NewtonConfig(rel_tol=1e-13, abs_tol=1e-15)
    for q, kmax in COMBOS:
        out = os.path.join(args.outdir,
                           f"scalar_pow_{args.variant}_q{q}_kmax{kmax}.csv")
        cfg = StudyConfig(problem="scalar_pow", alpha=0.2,
                          variant=args.variant, q=q, kmax=kmax,
                          n_values=(40, 80, 160, 320, 640),
                          newton=newton, out=out)
        table = run_convergence_study(cfg)
        slopes = estimate_order(table)
        pretty = " ".join("nan" if np.isnan(s) else f"{s:5.2f}"
                          for s in slopes)
        print(f"q={q} kmax={kmax}: orders {pretty}   -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
