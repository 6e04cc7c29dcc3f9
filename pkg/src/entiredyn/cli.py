"""Command-line front end: ``entiredyn {modulus,wv,periodic,poly}``.

Exit codes: 0 success, 1 evaluation error, 2 hypothesis or precondition
failure, 3 a numerical result that contradicts a proven statement.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

from . import __version__
from .defaults import DEFAULTS
from .functions import EXP, EvalError, Polynomial, Series, format_complex, parse_expr
from .modulus import (
    HypothesisViolated,
    NotFound,
    check_condition_a3,
    check_condition_a4,
    extrema_rows,
    extrema_sweep,
    find_pommerenke_point,
    harnack_annulus_check,
)
from .periodic import (
    ComplexBox,
    InvalidInput as PeriodicInvalidInput,
    bound_study_theorem1,
    bound_study_theorem2,
    find_periodic_in_boxes,
)
from .poly_dynamics import (
    HarnessConfig,
    InvalidInput as PolyInvalidInput,
    DegreeTooLarge,
    NoConvergence as RootsNoConvergence,
    check_proposition1,
    compose,
    composition_harness,
    corollary1_harness,
    counting_bound_harness,
    critical_values,
    fixed_point_spectrum,
    lambda_landscape,
    problem3_harness,
)
from .reports import render
from .wiman_valiron import (
    NoConvergence as WVNoConvergence,
    TruncationDominates,
    coeffs_from_polynomial,
    default_coeffs_for,
    max_term,
    monomial_log_coeffs,
    read_log_coeffs,
    verify_local_model,
    verify_mu_vs_M,
)

EXIT_OK, EXIT_EVAL, EXIT_HYPOTHESIS, EXIT_CONTRADICTION = 0, 1, 2, 3
THREADS_ENV = "ENTIREDYN_THREADS"


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument helpers


def parse_radii(text):
    """``"10"``, ``"10,20,40"`` or ``"1..100"`` (step 1) or ``"1..100:0.5"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, rest = part.split("..", 1)
            hi, _, step = rest.partition(":")
            lo, hi = float(lo), float(hi)
            step = float(step) if step else 1.0
            if step <= 0 or hi < lo:
                raise UsageError(f"bad range {part!r}")
            k = int(math.floor((hi - lo) / step + 1e-9))
            out.extend(lo + i * step for i in range(k + 1))
        elif part:
            out.append(float(part))
    if not out or any(not r > 0 for r in out):
        raise UsageError(f"radii must be positive: {text!r}")
    return out


def parse_ints(text):
    return [int(x) for x in parse_radii(text)]


def parse_kv(text, defaults):
    """``"a=1,b=2"`` merged over ``defaults`` (numbers only)."""
    out = dict(defaults)
    if text:
        for item in text.split(","):
            if not item.strip():
                continue
            k, sep, v = item.partition("=")
            if not sep:
                raise UsageError(f"expected key=value, got {item!r}")
            k = k.strip()
            if k not in defaults:
                raise UsageError(f"unknown key {k!r}; expected one of {sorted(defaults)}")
            out[k] = float(v)
    return out


# --------------------------------------------------------------------------
# modulus


def cmd_modulus(cfg):
    f = parse_expr(cfg["f"])
    radii = parse_radii(cfg["r"])
    tables = {}
    if not cfg.get("pommerenke") or cfg.get("r_given"):
        tables["extrema"] = extrema_rows(extrema_sweep(f, radii))
    if cfg.get("cond_a3") is not None:
        kv = parse_kv(cfg["cond_a3"], {"a": DEFAULTS["a"], "b": DEFAULTS["b"]})
        reps = check_condition_a3(f, kv["a"], kv["b"], radii)
        tables["condition_a3"] = [
            {"r": rep.r, "a": rep.a, "b": rep.b,
             "status": "present" if rep.holds else "absent",
             "witness_rho": rep.witness_rho, "witness_log_min": rep.witness_log_min}
            for rep in reps
        ]
    if cfg.get("cond_a4") is not None:
        kv = parse_kv(cfg["cond_a4"], {"eps": DEFAULTS["a4_eps"], "c": DEFAULTS["a4_c"]})
        rows = []
        for r in radii:
            rep = check_condition_a4(f, kv["eps"], kv["c"], r)
            rows.append({"r": rep.r, "eps": rep.eps, "c": rep.c,
                         "status": "present" if rep.holds else "absent",
                         "witness_rho": rep.witness_rho, "skipped": len(rep.skipped)})
        tables["condition_a4"] = rows
    if cfg.get("harnack") is not None:
        kv = parse_kv(cfg["harnack"], {"R": 1.0, "eps": 0.5})
        rep = harnack_annulus_check(f, kv["R"], kv["eps"])
        tables["harnack_annulus"] = [{"R": rep.R, "eps": rep.eps, "min_u": rep.min_u,
                                      "max_u": rep.max_u, "holds": rep.holds}]
    if cfg.get("pommerenke"):
        pt = find_pommerenke_point(f, float(cfg["R"]))
        tables["pommerenke"] = [{"R": pt.R, "z0": pt.z0, "log_h_z0": pt.log_h_z0,
                                 "deriv_abs": pt.deriv_abs, "bound_rhs": pt.bound_rhs,
                                 "certified": pt.certified}]
    return tables, EXIT_OK


# --------------------------------------------------------------------------
# wv


def resolve_coeffs(spec, r_max):
    """``exp``, ``monomial:d``, ``file:path`` or a polynomial/series expression."""
    if spec == "exp":
        return default_coeffs_for(EXP, r_max), EXP
    if spec.startswith("monomial:"):
        d = int(spec.split(":", 1)[1])
        return monomial_log_coeffs(d), Polynomial(tuple([0] * d + [1]))
    if spec.startswith("file:"):
        c = read_log_coeffs(spec.split(":", 1)[1])
        return c, None
    g = parse_expr(spec)
    if isinstance(g, Polynomial):
        return coeffs_from_polynomial(g), g
    if isinstance(g, Series):
        return default_coeffs_for(g, r_max), g
    raise UsageError(f"cannot derive coefficients from {spec!r}")


def cmd_wv(cfg):
    radii = parse_radii(cfg["r"])
    coeffs, g = resolve_coeffs(cfg["coeffs"], max(radii))
    if cfg.get("g"):
        g = parse_expr(cfg["g"])
    strict = not cfg.get("no_strict")
    profiles = [max_term(coeffs, r, strict=strict) for r in radii]
    tables = {"profile": [{"r": p.r, "log_mu": p.log_mu, "nu": p.nu,
                           "boundary_flag": p.boundary_flag} for p in profiles]}
    need_g = cfg.get("verify_local") is not None or cfg.get("mu_vs_M") is not None
    if need_g and g is None:
        g = coeffs.to_series()
    if cfg.get("verify_local") is not None:
        kv = parse_kv(cfg["verify_local"], {"K": DEFAULTS["K"]})
        tables["local_model"] = []
        for r in radii:
            rep = verify_local_model(g, coeffs, r, K=kv["K"])
            tables["local_model"].append({
                "r": rep.r, "nu": rep.nu, "K": rep.K, "err_value": rep.err_value,
                "err_modulus": rep.err_modulus, "err_derivative": rep.err_derivative})
    if cfg.get("mu_vs_M") is not None:
        kv = parse_kv(cfg["mu_vs_M"], {"eps": DEFAULTS["wv_eps"]})
        tables["mu_vs_M"] = [
            {"r": row.r, "log_mu": row.log_mu, "log_M": row.log_M, "ratio": row.ratio,
             "nu": row.nu, "nu_bound": row.nu_bound, "nu_bound_holds": row.nu_bound_holds}
            for row in verify_mu_vs_M(coeffs, g, radii, kv["eps"])
        ]
    return tables, EXIT_OK


# --------------------------------------------------------------------------
# periodic


def _orbit_row(o):
    return {"period": o.period, "points": ";".join(format_complex(p) for p in o.points),
            "mult_log_abs": o.multiplier_log_abs, "mult_phase": o.multiplier_phase,
            "class": o.classification, "residual": o.residual, "multiplicity": o.multiplicity}


def _search_kwargs(cfg):
    return {"tol": float(cfg["tol"]), "max_depth": int(cfg["max_depth"]),
            "max_nodes": int(cfg["max_nodes"]), "max_boxes": int(cfg["max_boxes"])}


def cmd_periodic(cfg):
    f = parse_expr(cfg["f"])
    boxes = [ComplexBox.parse(b) for b in cfg["box"]]
    n = int(cfg["n"])
    kw = _search_kwargs(cfg)
    hyp = {"a": DEFAULTS["a"], "b": DEFAULTS["b"], "r_grid": DEFAULTS["hypothesis_radii"]}
    tables = {}
    if cfg.get("theorem2"):
        if not cfg.get("g"):
            raise UsageError("--theorem2 needs --g")
        g = parse_expr(cfg["g"])
        study = bound_study_theorem2(f, g, boxes, beta=float(cfg["beta"]), hypothesis=hyp, **kw)
        search = study.search
        tables["theorem2"] = [r.csv_row() for r in study.rows]
    elif cfg.get("bound_study") is not None:
        kv = parse_kv(cfg["bound_study"], {"shrink": DEFAULTS["shrink"]})
        study = bound_study_theorem1(f, n, boxes, shrink=kv["shrink"], hypothesis=hyp, **kw)
        search = study.search
        rows = []
        for r in study.rows:
            row = r.csv_row()
            row["upper_sanity"] = r.upper_sanity
            row["product_bound"] = r.product_bound
            rows.append(row)
        tables["bound_study"] = rows
    else:
        search = find_periodic_in_boxes(f, n, boxes, **kw)
    tables["orbits"] = [_orbit_row(o) for o in search.orbits]
    tables["lower_period"] = [_orbit_row(o) for o in search.lower_period]
    tables["skipped"] = [{"box": ",".join(repr(x) for x in b.as_list()), "reason": why}
                         for b, why in search.skipped]
    tables["rejected"] = [{"z": d["z"], "reason": d["reason"]} for d in search.rejected]
    return tables, EXIT_OK


# --------------------------------------------------------------------------
# poly


def _spectrum_rows(spec):
    return [{"fixed_point": z, "multiplier": m, "abs_multiplier": abs(m)}
            for z, m in zip(spec.fixed_points, spec.multipliers)]


def cmd_poly(cfg):
    tol = float(cfg["indifferent_tol"])
    ctol = cfg.get("cluster_tol")
    ctol = None if ctol is None else float(ctol)
    seed = int(cfg["seed"])
    trials = int(cfg["trials"])
    tables, code = {}, EXIT_OK
    mode = cfg["mode"]
    if mode == "spectrum":
        p = _poly_arg(cfg["p"])
        spec = fixed_point_spectrum(p, tol)
        tables["summary"] = [{"degree": p.degree, "lambda": spec.lambda_max,
                              "nonrepelling_count": spec.nonrepelling_count}]
        tables["spectrum"] = _spectrum_rows(spec)
    elif mode == "critical":
        p = _poly_arg(cfg["p"])
        cd = critical_values(p, ctol)
        tables["critical_values"] = [{"value": v} for v in cd.critical_values_clustered]
        tables["summary"] = [{"cv": cd.cv_count, "cluster_tol": cd.cluster_tol, "gap": cd.gap}]
    elif mode == "prop1":
        rep = check_proposition1(_poly_arg(cfg["p"]), tol, ctol)
        tables["proposition1"] = [_prop1_row(-1, rep)]
        if rep.contradiction or not rep.counting_bound_holds:
            code = EXIT_CONTRADICTION
    elif mode == "compose":
        pq = compose(_poly_arg(cfg["p"]), _poly_arg(cfg["q"]))
        tables["composition"] = [{"k": k, "coeff": c} for k, c in enumerate(pq.coeffs)]
    elif mode == "counting_bound":
        res = counting_bound_harness(parse_ints(cfg["degrees"]), trials, seed, tol, ctol)
        tables["counting_bound"] = [_prop1_row(t, rep) for t, (_, rep) in enumerate(res.reports)]
        if res.violations or res.contradictions:
            code = EXIT_CONTRADICTION
    elif mode == "cv_composition":
        degs = parse_ints(cfg["degrees"])
        res = composition_harness(trials, (min(degs), max(degs)), seed, ctol)
        tables["cv_composition"] = [
            {"trial": t, "deg_p": r.deg_p, "deg_q": r.deg_q, "deg_pq": r.deg_pq,
             "cv_p": r.cv_p, "cv_pq": r.cv_pq, "status": r.status, "gap": r.gap}
            for t, (_, _, r) in enumerate(res)]
        if any(r.status == "fail" for _, _, r in res):
            code = EXIT_CONTRADICTION
    elif mode == "corollary1":
        res = corollary1_harness(trials, int(cfg["deg"]), seed, tol)
        tables["corollary1"] = [{"trial": t, "has_repelling": ok} for t, (_, _, ok) in enumerate(res)]
        tables["summary"] = [{"trials": trials, "true": sum(ok for _, _, ok in res)}]
        if not all(ok for _, _, ok in res):
            code = EXIT_CONTRADICTION
    elif mode == "problem3":
        rows = problem3_harness(int(cfg["deg"]), parse_ints(cfg["n"]), trials, seed,
                                float(cfg["problem3_flag"]), tol)
        tables["problem3"] = [r.csv_row() for r in rows]
        rnd = [r.report.ratio for r in rows if r.kind == "random"]
        tables["summary"] = [{"min_ratio": f"{min(rnd):.6f}" if rnd else "",
                              "flagged": sum(r.flagged for r in rows)}]
    elif mode == "landscape":
        hc = HarnessConfig(parse_ints(cfg["degrees"]), trials, seed, ctol, tol)
        tables["landscape"] = [r.csv_row() for r in lambda_landscape(hc)]
    else:
        raise UsageError(f"unknown poly mode {mode!r}")
    return tables, code


def _poly_arg(text):
    p = parse_expr(text)
    if not isinstance(p, Polynomial):
        raise UsageError(f"expected a polynomial, got {text!r}")
    return p


def _prop1_row(t, rep):
    return {"trial": t, "d": rep.degree, "cv": rep.cv_count, "applies": rep.applies,
            "has_repelling": rep.has_repelling, "nonrepelling": rep.nonrepelling_count,
            "two_cv": rep.two_cv, "counting_bound_holds": rep.counting_bound_holds,
            "gap": rep.gap}


# --------------------------------------------------------------------------
# parser and driver


POLY_MODES = ("spectrum", "critical", "prop1", "compose", "counting_bound",
              "cv_composition", "corollary1", "problem3", "landscape")


def build_parser():
    ap = argparse.ArgumentParser(prog="entiredyn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"entiredyn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt="csv"):
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--config", help="JSON file whose keys override the flags")
        p.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")

    m = sub.add_parser("modulus", help="maximum/minimum modulus sweeps and condition checks")
    m.add_argument("--f", required=True)
    m.add_argument("--r", default="1")
    m.add_argument("--cond-a3", nargs="?", const="", metavar="a=..,b=..")
    m.add_argument("--cond-a4", nargs="?", const="", metavar="eps=..,c=..")
    m.add_argument("--harnack", nargs="?", const="", metavar="R=..,eps=..")
    m.add_argument("--pommerenke", action="store_true")
    m.add_argument("--R", type=float, default=1.0)
    common(m)

    w = sub.add_parser("wv", help="maximum term, central index and local-model checks")
    w.add_argument("--coeffs", required=True, help="exp | monomial:d | file:path | poly[...]")
    w.add_argument("--g", help="function matching the coefficients (for model checks)")
    w.add_argument("--r", required=True)
    w.add_argument("--verify-local", nargs="?", const="", metavar="K=..")
    w.add_argument("--mu-vs-M", dest="mu_vs_M", nargs="?", const="", metavar="eps=..")
    w.add_argument("--no-strict", action="store_true",
                   help="report a truncated maximum term instead of failing")
    common(w)

    p = sub.add_parser("periodic", help="periodic points, multipliers and bound studies")
    p.add_argument("--f", required=True)
    p.add_argument("--g")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--box", action="append", required=True, help="re_lo,re_hi,im_lo,im_hi")
    p.add_argument("--bound-study", nargs="?", const="", metavar="shrink=..")
    p.add_argument("--theorem2", action="store_true")
    p.add_argument("--beta", type=float, default=DEFAULTS["beta"])
    p.add_argument("--tol", type=float, default=DEFAULTS["newton_tol"])
    p.add_argument("--max-depth", type=int, default=DEFAULTS["max_depth"])
    p.add_argument("--max-nodes", type=int, default=DEFAULTS["max_nodes"])
    p.add_argument("--max-boxes", type=int, default=DEFAULTS["max_boxes"])
    common(p, fmt="json")

    q = sub.add_parser("poly", help="polynomial spectra and harnesses")
    modes = q.add_mutually_exclusive_group(required=True)
    modes.add_argument("--spectrum", metavar="POLY")
    modes.add_argument("--critical", metavar="POLY")
    modes.add_argument("--prop1", metavar="POLY")
    modes.add_argument("--compose", nargs=2, metavar=("P", "Q"))
    modes.add_argument("--counting-bound", action="store_true")
    modes.add_argument("--cv-composition", action="store_true")
    modes.add_argument("--corollary1", action="store_true")
    modes.add_argument("--problem3", action="store_true")
    modes.add_argument("--landscape", action="store_true")
    q.add_argument("--deg", type=int, default=3)
    q.add_argument("--degrees", default=None, help="degree list or range, e.g. 3..8")
    q.add_argument("--n", default="2,3")
    q.add_argument("--trials", type=int, default=50)
    q.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    q.add_argument("--indifferent-tol", type=float, default=DEFAULTS["indifferent_tol"])
    q.add_argument("--cluster-tol", type=float, default=None)
    q.add_argument("--problem3-flag", type=float, default=DEFAULTS["problem3_flag"])
    common(q)
    return ap


_MODE_DEGREES = {"counting_bound": "3..8", "cv_composition": "2..5", "landscape": "2..8"}


def resolve_config(args, argv):
    cfg = {k: v for k, v in vars(args).items() if k not in ("config", "dry_run")}
    if args.command == "modulus":
        cfg["r_given"] = any(a == "--r" or a.startswith("--r=") for a in argv)
    if args.command == "poly":
        for mode in POLY_MODES:
            val = cfg.pop(mode.replace("-", "_"), None)
            if val:
                cfg["mode"] = mode
                if mode == "compose":
                    cfg["p"], cfg["q"] = val
                elif isinstance(val, str):
                    cfg["p"] = val
        if cfg.get("degrees") is None:
            cfg["degrees"] = _MODE_DEGREES.get(cfg.get("mode"), str(cfg["deg"]))
    if args.config:
        with open(args.config) as fh:
            override = json.load(fh)
        if not isinstance(override, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update(override)
    cfg["threads"] = int(os.environ.get(THREADS_ENV, "1"))
    validate(cfg)
    return cfg


def validate(cfg):
    for key in ("tol", "indifferent_tol", "cluster_tol", "beta", "R"):
        v = cfg.get(key)
        if v is not None and not float(v) > 0:
            raise UsageError(f"{key} must be positive")
    if cfg["command"] == "periodic":
        for b in cfg["box"]:
            ComplexBox.parse(b)
        if int(cfg["n"]) < 1:
            raise UsageError("n must be positive")
    if cfg["command"] == "poly" and cfg.get("seed") is None:
        raise UsageError("randomized commands need a seed")


COMMANDS = {"modulus": cmd_modulus, "wv": cmd_wv, "periodic": cmd_periodic, "poly": cmd_poly}


def run(argv=None):
    """Execute a command; returns ``(exit_code, text, out_path)`` without printing."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args, argv)
    except (UsageError, ValueError, OSError) as exc:
        return EXIT_HYPOTHESIS, f"error: {exc}\n", None
    if args.dry_run:
        return EXIT_OK, json.dumps(cfg, sort_keys=True, indent=2) + "\n", None
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            tables, code = COMMANDS[cfg["command"]](cfg)
        if caught:
            tables["warnings"] = [{"warning": str(w.message)} for w in caught]
        return code, render(tables, cfg, cfg.get("format", "csv")), cfg.get("out")
    except (HypothesisViolated, TruncationDominates, PeriodicInvalidInput, PolyInvalidInput,
            DegreeTooLarge, UsageError) as exc:
        return EXIT_HYPOTHESIS, f"error: {type(exc).__name__}: {exc}\n", None
    except (EvalError, NotFound, WVNoConvergence, RootsNoConvergence, FloatingPointError,
            OverflowError) as exc:
        return EXIT_EVAL, f"error: {type(exc).__name__}: {exc}\n", None


def main(argv=None):
    code, text, out = run(argv)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    elif text.startswith("error:"):
        sys.stderr.write(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_CONTRADICTION:
        sys.stderr.write("contradiction flagged: a proven statement failed numerically\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
