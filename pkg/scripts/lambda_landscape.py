"""(d, cv, Lambda) landscape over generic and few-critical-value polynomials.

    python scripts/lambda_landscape.py [--degrees 2..8] [--trials 20] [--seed 7]
"""

import argparse
import sys
from collections import defaultdict

from entiredyn.cli import parse_ints
from entiredyn.poly_dynamics import HarnessConfig, lambda_landscape
from entiredyn.reports import render


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degrees", default="2..8")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    cfg = HarnessConfig(parse_ints(args.degrees), args.trials, args.seed)
    rows = lambda_landscape(cfg)
    # smallest Lambda / d seen for each (d, cv)
    low = defaultdict(lambda: float("inf"))
    for r in rows:
        low[r.degree, r.cv] = min(low[r.degree, r.cv], r.lam / r.degree)
    summary = [{"d": d, "cv": cv, "min_lambda_over_d": f"{v:.6f}"} for (d, cv), v in sorted(low.items())]
    config = {"degrees": cfg.degrees, "trials": cfg.trials, "seed": cfg.seed}
    sys.stdout.write(render({"landscape": [r.csv_row() for r in rows], "by_d_cv": summary}, config, "csv"))


if __name__ == "__main__":
    main()
