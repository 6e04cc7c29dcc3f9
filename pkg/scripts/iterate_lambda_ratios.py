"""Lambda(p^n) / d^n for seeded random monic polynomials, with the z^d control.

    python scripts/iterate_lambda_ratios.py [--deg 2] [--n 2,3] [--trials 50] [--seed 7]
"""

import argparse
import sys

from entiredyn.poly_dynamics import problem3_harness
from entiredyn.reports import render


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--deg", type=int, default=2)
    ap.add_argument("--n", default="2,3")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--flag-below", type=float, default=0.99)
    args = ap.parse_args()
    ns = tuple(int(x) for x in args.n.split(","))
    rows = problem3_harness(args.deg, ns, args.trials, args.seed, args.flag_below)
    summary = []
    for n in ns:
        rnd = [r.report for r in rows if r.kind == "random" and r.n == n]
        summary.append({"n": n, "min_ratio": f"{min(r.ratio for r in rnd):.6f}",
                        "min_ratio_genuine": f"{min(r.ratio_genuine for r in rnd):.6f}",
                        "flagged": sum(r.flagged for r in rows if r.n == n)})
    config = {"deg": args.deg, "n": list(ns), "trials": args.trials, "seed": args.seed,
              "flag_below": args.flag_below}
    sys.stdout.write(render({"ratios": [r.csv_row() for r in rows], "summary": summary}, config, "csv"))


if __name__ == "__main__":
    main()
