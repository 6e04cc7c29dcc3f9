"""Multiplier versus iterate growth for the 2-cycles of exp in the preset boxes.

    python scripts/exp_period2_sweep.py [--shrink 0.9] [--out sweep.csv]
"""

import argparse
import sys

from entiredyn.defaults import DEFAULTS, EXP_PERIOD2_BOXES
from entiredyn.functions import EXP
from entiredyn.periodic import ComplexBox, bound_study_theorem1
from entiredyn.reports import render


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shrink", type=float, default=DEFAULTS["shrink"])
    ap.add_argument("--out")
    args = ap.parse_args()
    boxes = [ComplexBox(*b) for b in EXP_PERIOD2_BOXES]
    study = bound_study_theorem1(EXP, 2, boxes, shrink=args.shrink)
    rows = sorted((r.csv_row() for r in study.rows), key=lambda r: r["|xi|"])
    best = max((r["ratio_lower"] for r in rows), default=float("nan"))
    config = {"f": "exp", "n": 2, "shrink": args.shrink, "boxes": EXP_PERIOD2_BOXES}
    text = render({"sweep": rows, "summary": [{"orbits": len(rows), "best_ratio_lower": best,
                                                 "skipped": len(study.search.skipped)}]}, config, "csv")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
