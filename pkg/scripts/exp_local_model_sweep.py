"""Local power-model errors and log mu / log M for exp over a range of radii.

    python scripts/exp_local_model_sweep.py [--r 10,20,40,80,160] [--K 1]
"""

import argparse
import sys

from entiredyn.functions import EXP
from entiredyn.reports import render
from entiredyn.wiman_valiron import exp_log_coeffs, verify_local_model, verify_mu_vs_M


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", default="10,20,40,80,160")
    ap.add_argument("--K", type=float, default=1.0)
    args = ap.parse_args()
    radii = [float(x) for x in args.r.split(",")]
    c = exp_log_coeffs(int(4 * max(radii)) + 200)
    rows = []
    for r, mv in zip(radii, verify_mu_vs_M(c, EXP, radii)):
        rep = verify_local_model(EXP, c, r, K=args.K)
        rows.append({"r": r, "nu": rep.nu, "err_value": rep.err_value, "err_modulus": rep.err_modulus,
                     "err_derivative": rep.err_derivative, "log_mu_over_log_M": mv.ratio})
    sys.stdout.write(render({"exp_local_model": rows}, {"r": radii, "K": args.K}, "csv"))


if __name__ == "__main__":
    main()
