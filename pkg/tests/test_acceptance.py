"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` to see the verdict lines.
"""

import cmath
import math
import time
import warnings

import numpy as np
import pytest

from entiredyn.cli import EXIT_CONTRADICTION, run
from entiredyn.defaults import EXP_PERIOD2_BOXES
from entiredyn.functions import EXP, Compose, Polynomial, poly
from entiredyn.modulus import (
    NotPositiveHarmonic,
    find_pommerenke_point,
    harnack_annulus_check,
    harnack_two_point,
)
from entiredyn.periodic import ComplexBox, bound_study_theorem1, find_periodic, multiplier_of
from entiredyn.poly_dynamics import (
    composition_harness,
    corollary1_harness,
    counting_bound_harness,
    fixed_point_spectrum,
    lambda_iterate_study,
    lambda_of,
    problem3_harness,
)
from entiredyn.wiman_valiron import (
    exp_log_coeffs,
    max_term,
    monomial_log_coeffs,
    verify_local_model,
    verify_mu_vs_M,
)

SEED = 7
FULL_BOX = ComplexBox(-2, 5, -8, 8)
# the period-3 search on FULL_BOX cannot be exhausted in the time limit; this
# many subboxes are examined and every orbit found is checked
PERIOD3_BOX_BUDGET = 4000


@pytest.fixture
def verdict(capsys):
    def _verdict(k, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        assert ok, detail
    return _verdict


def _newton_oracle_exp(box, n=100):
    pts = []
    for x in np.linspace(box.re_lo, box.re_hi, n):
        for y in np.linspace(box.im_lo, box.im_hi, n):
            z = complex(x, y)
            for _ in range(60):
                e = cmath.exp(z)
                step = (e - z) / (e - 1)
                z -= step
                if abs(step) < 1e-15 or abs(z) > 50:
                    break
            if box.contains(z) and abs(cmath.exp(z) - z) < 1e-12 and not any(abs(z - w) < 1e-8 for w in pts):
                pts.append(z)
    return pts


def test_c01_exp_fixed_point(verdict):
    box = ComplexBox(0, 1, 1, 2)
    t = time.perf_counter()
    res = find_periodic(EXP, 1, box)
    dt = time.perf_counter() - t
    (oracle,) = _newton_oracle_exp(box)
    ok = len(res.orbits) == 1
    if ok:
        o = res.orbits[0]
        xi = o.points[0]
        ok = (abs(xi - (0.318131505 + 1.337235701j)) <= 1e-8 and abs(xi - oracle) <= 1e-8
              and abs(abs(o.multiplier) - 1.374557) <= 1e-6 and o.classification == "repelling"
              and dt < 1.0)
    verdict(1, ok, f"{len(res.orbits)} orbit(s), xi={res.orbits[0].points[0] if res.orbits else None}, "
                   f"oracle={oracle}, runtime {dt:.3f}s")


def test_c02_multiplier_identity(verdict):
    t = time.perf_counter()
    orbits = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for n in (1, 2):
            orbits += find_periodic(EXP, n, FULL_BOX).orbits
        orbits += find_periodic(EXP, 3, FULL_BOX, max_boxes=PERIOD3_BOX_BUDGET).orbits
    dt = time.perf_counter() - t
    worst = 0.0
    for o in orbits:
        # chain rule along the cycle versus the product of the orbit points
        log_m, phase = multiplier_of(EXP, o.points, check_exp=False)
        pts = np.asarray(o.points)
        log_p = float(np.sum(np.log(np.abs(pts))))
        ph_p = complex(np.prod(pts / np.abs(pts)))
        worst = max(worst, abs(np.exp(log_m - log_p) * phase / ph_p - 1))
    periods = sorted({o.period for o in orbits})
    ok = worst < 1e-9 and periods == [1, 2, 3] and dt < 30
    verdict(2, ok, f"{len(orbits)} orbits (periods {periods}), max rel err {worst:.2e}, runtime {dt:.1f}s")


def test_c03_upper_bound_sanity(verdict):
    res = find_periodic(EXP, 2, FULL_BOX)
    rep = [o for o in res.orbits if o.classification == "repelling"]
    # log M(|xi|, exp o exp) = e^|xi|; xi is the point of least modulus
    bad = [o for o in rep if not o.multiplier_log_abs <= 1.1 * math.exp(abs(o.min_modulus_point))]
    verdict(3, bool(rep) and not bad, f"{len(rep)} repelling 2-cycles, {len(bad)} violations")


def test_c04_period_two_lower_ratio(verdict):
    t = time.perf_counter()
    boxes = [ComplexBox(*b) for b in EXP_PERIOD2_BOXES]
    study = bound_study_theorem1(EXP, 2, boxes, shrink=0.9)
    dt = time.perf_counter() - t
    best = max((r.ratio_lower for r in study.rows), default=-math.inf)
    verdict(4, best >= 0.01 and dt < 300,
            f"{len(study.rows)} orbits, best ratio_lower {best:.4g}, runtime {dt:.1f}s")


def test_c05_wiman_valiron(verdict):
    c = exp_log_coeffs(400)
    nus = [max_term(c, r).nu for r in (10, 20, 40)]
    reps = [verify_local_model(EXP, c, r, K=1) for r in (10, 20, 40)]
    errs = [(r.err_value, r.err_derivative, r.err_modulus) for r in reps]
    small = all(e < 0.05 for e in errs[2])
    decreasing = all(errs[0][i] > errs[1][i] > errs[2][i] for i in range(3))
    (row,) = verify_mu_vs_M(c, EXP, [40])
    mono = [verify_local_model(poly(*([0] * d + [1])), monomial_log_coeffs(d), 3.0) for d in (2, 5)]
    mono_err = max(max(m.err_value, m.err_modulus, m.err_derivative) for m in mono)
    ok = nus == [10, 20, 40] and small and decreasing and 0.85 < row.ratio <= 1 and mono_err < 1e-12
    verdict(5, ok, f"nu={nus}, errors at r=40 {tuple(round(e, 4) for e in errs[2])}, "
                   f"decreasing={decreasing}, log mu/log M={row.ratio:.4f}, monomial err {mono_err:.1e}")


def test_c06_pommerenke(verdict):
    pt = find_pommerenke_point(EXP, 1.0)
    h_abs = math.exp(pt.log_h_z0)
    ok = abs(h_abs - 1) <= 1e-8 and pt.deriv_abs >= pt.bound_rhs and abs(pt.bound_rhs - 0.00688) < 1e-5
    verdict(6, ok, f"|h(z0)|={h_abs:.12f}, deriv_abs={pt.deriv_abs:.6g}, bound_rhs={pt.bound_rhs:.6g}")


def test_c07_harnack(verdict):
    rng = np.random.default_rng(SEED)
    two_point_ok = True
    for rho in (0.1, 0.5, 0.9):
        for _ in range(100):
            a = complex(*rng.normal(size=2))
            r = rng.uniform(0.5, 2.0)
            delta = complex(*rng.normal(size=2))
            c = abs(delta) * (abs(a) + r) * rng.uniform(1.01, 3.0) + 1j * rng.normal()
            two_point_ok &= harnack_two_point(poly(c, delta), a, r, rho).holds
    annulus = [harnack_annulus_check(Compose(EXP, poly(10, 1e-6)), 1.0, 0.5),
               harnack_annulus_check(poly(math.exp(5)), 3.0, 0.3)]
    try:
        harnack_annulus_check(EXP, 1.0, 0.5)
        violation = False
    except NotPositiveHarmonic:
        violation = True
    ok = two_point_ok and all(a.holds for a in annulus) and violation
    verdict(7, ok, f"two-point 300/300={two_point_ok}, annulus={[a.holds for a in annulus]}, "
                   f"exp violation detected={violation}")


def test_c08_polynomial_spectra(verdict):
    lam_err = max(abs(lambda_of(Polynomial(tuple([0] * d + [1]))) - d) for d in range(2, 11))
    s = fixed_point_spectrum(poly(0.25, 0, 1))
    double = (max(abs(z - 0.5) for z in s.fixed_points) < 1e-8
              and all(abs(m - 1) < 1e-7 for m in s.multipliers))
    res = counting_bound_harness(range(3, 9), 500, SEED)
    ok = lam_err <= 1e-9 and double and not res.violations and not res.contradictions
    verdict(8, ok, f"max |Lambda(z^d)-d|={lam_err:.1e}, parabolic double point={double}, "
                   f"counting-bound violations {len(res.violations)}/500")


def test_c09_composition(verdict):
    t = time.perf_counter()
    comp = composition_harness(50, (2, 5), SEED)
    cor = corollary1_harness(100, 3, SEED)
    codes = [run(argv)[0] for argv in (
        ["poly", "--cv-composition", "--trials", "50", "--seed", str(SEED)],
        ["poly", "--corollary1", "--trials", "100", "--deg", "3", "--seed", str(SEED)],
        ["poly", "--counting-bound", "--trials", "500", "--seed", str(SEED)],
    )]
    dt = time.perf_counter() - t
    statuses = [r.status for *_, r in comp]
    ok = (statuses.count("pass") == 50 and all(ok for *_, ok in cor)
          and EXIT_CONTRADICTION not in codes and dt < 120)
    verdict(9, ok, f"cv and degree inequalities pass {statuses.count('pass')}/50, corollary true "
                   f"{sum(ok for *_, ok in cor)}/100, exit codes {codes}, runtime {dt:.1f}s")


def test_c10_iterate_lambda_ratio(verdict):
    rep = lambda_iterate_study(Polynomial((0, 0, 1)), 3)
    rows = problem3_harness(2, (2, 3), 50, SEED)
    mono = [r for r in rows if r.kind == "monomial"]
    rnd = [r.report.ratio for r in rows if r.kind == "random"]
    flagged = sum(r.flagged for r in rows)
    ok = (rep.lambda_pn == pytest.approx(8, abs=1e-9) and len(rnd) == 100
          and all(f"{r.report.ratio:.3f}" == "1.000" for r in mono))
    verdict(10, ok, f"Lambda(p^3)={rep.lambda_pn:.12g}, min ratio over 100 samples {min(rnd):.4f}, "
                    f"flagged {flagged}")


DETERMINISM_COMMANDS = [
    ["periodic", "--f", "exp", "--n", "1", "--box", "0,1,1,2"],
    ["wv", "--coeffs", "exp", "--r", "10,20,40", "--verify-local", "K=1"],
    ["modulus", "--f", "exp", "--pommerenke", "--R", "1"],
    ["poly", "--counting-bound", "--trials", "100", "--seed", str(SEED)],
    ["poly", "--cv-composition", "--trials", "50", "--seed", str(SEED)],
    ["poly", "--corollary1", "--trials", "100", "--deg", "3", "--seed", str(SEED)],
    ["poly", "--problem3", "--deg", "2", "--n", "2,3", "--trials", "50", "--seed", str(SEED)],
    ["poly", "--landscape", "--trials", "10", "--seed", str(SEED)],
]


def test_c11_determinism(verdict):
    same = [run(argv)[1] == run(argv)[1] for argv in DETERMINISM_COMMANDS]
    verdict(11, all(same), f"{sum(same)}/{len(same)} commands byte-identical on rerun")
