import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entiredyn.functions import Polynomial, poly
from entiredyn.poly_dynamics import (
    DegreeTooLarge,
    HarnessConfig,
    InvalidInput,
    check_corollary1,
    check_cv_composition,
    check_proposition1,
    composition_harness,
    compose,
    conjugate_by_scaling,
    corollary1_harness,
    counting_bound_harness,
    critical_values,
    derivative,
    few_cv_poly,
    fixed_point_spectrum,
    iterate_poly,
    lambda_iterate_study,
    lambda_landscape,
    lambda_of,
    peval,
    problem3_harness,
    random_poly,
    roots,
)


def monomial(d):
    return Polynomial(tuple([0] * d + [1]))


def _match(a, b, tol):
    """Greedy multiset match of complex points."""
    b = list(b)
    for z in a:
        j = int(np.argmin([abs(z - w) for w in b]))
        if abs(z - b[j]) > tol:
            return False
        b.pop(j)
    return not b


def test_roots_examples():
    assert np.allclose(roots(poly(-1, 0, 1)), [-1, 1])
    assert np.allclose(roots(poly(0, -1, 0, 1)), [-1, 0, 1])
    w = np.polynomial.polynomial.polyfromroots([1, 2, 3, 4, 5, 6])
    assert np.allclose(roots(Polynomial(tuple(w))), [1, 2, 3, 4, 5, 6], atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_roots_against_companion_eigenvalues(d, seed):
    p = random_poly(np.random.default_rng(seed), d)
    ours = roots(p)
    assert len(ours) == d
    oracle = np.polynomial.polynomial.polyroots(np.asarray(p.coeffs))
    scale = max(1.0, float(np.max(np.abs(oracle))))
    assert _match(ours, oracle, 1e-6 * scale)


def test_critical_values_examples():
    for d in (2, 5, 9):
        assert critical_values(monomial(d)).cv_count == 1
    cd = critical_values(poly(0, -3, 0, 1))
    assert cd.cv_count == 2
    assert np.allclose(sorted(v.real for v in cd.critical_values_clustered), [-2, 2])
    assert critical_values(poly(0, 1, 0, 0, 0, 1)).cv_count == 4


def test_spectrum_examples():
    s = fixed_point_spectrum(poly(0, 0, 1))
    assert np.allclose(s.fixed_points, [0, 1]) and np.allclose(s.multipliers, [0, 2])
    assert s.lambda_max == pytest.approx(2) and s.nonrepelling_count == 1
    for d in range(2, 11):
        assert lambda_of(monomial(d)) == pytest.approx(d, rel=1e-12)
    s = fixed_point_spectrum(poly(0.25, 0, 1))
    assert np.allclose(s.fixed_points, [0.5, 0.5], atol=1e-8)
    assert s.lambda_max == pytest.approx(1, abs=1e-7) and s.nonrepelling_count == 2


def test_proposition1_examples():
    r = check_proposition1(monomial(5))
    assert r.applies and r.has_repelling and not r.contradiction
    r = check_proposition1(poly(0.1, 0.1, 0, 1))
    assert r.cv_count == 2 and not r.applies and r.counting_bound_holds
    r = check_proposition1(monomial(2))
    assert r.cv_count == 1 and not r.applies


def test_compose_examples():
    assert compose(monomial(2), monomial(2)) == monomial(4)
    assert np.allclose(compose(poly(1, 0, 1), poly(1, 1)).coeffs, [2, 2, 1])
    rng = np.random.default_rng(1)
    for _ in range(20):
        assert compose(random_poly(rng, 3), random_poly(rng, 3)).degree == 9


def test_cv_composition_examples():
    r = check_cv_composition(monomial(2), monomial(2))
    assert r.cv_pq == 1 and r.status == "pass"
    r = check_cv_composition(poly(0, -3, 0, 1), monomial(2))
    assert r.cv_pq <= 3 and r.status == "pass"
    with pytest.raises(InvalidInput):
        check_cv_composition(poly(0, 1), monomial(2))


def test_corollary1_examples():
    assert check_corollary1(monomial(3), monomial(3))
    with pytest.raises(InvalidInput):
        check_corollary1(monomial(3), monomial(2))


def test_lambda_iterate_examples():
    rep = lambda_iterate_study(monomial(2), 3)
    assert rep.lambda_pn == pytest.approx(8) and rep.ratio == pytest.approx(1)
    rep = lambda_iterate_study(poly(-1, 0, 1), 2)
    # fixed points of p o p: (1 +- sqrt 5)/2 with |(p o p)'| = 4 xi^2, and the
    # superattracting 2-cycle {0, -1}
    phi = (1 + math.sqrt(5)) / 2
    assert rep.lambda_pn == pytest.approx(4 * phi ** 2, rel=1e-9)
    assert rep.ratio >= 1
    with pytest.raises(DegreeTooLarge):
        lambda_iterate_study(monomial(4), 7)


# ---------------------------------------------------------------- properties

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), seeds)
def test_multiplicities_sum_to_degree(d, seed):
    rng = np.random.default_rng(seed)
    for p in (random_poly(rng, d), few_cv_poly(rng, d)):
        assert len(roots(p)) == d
        assert len(fixed_point_spectrum(p).fixed_points) == d
        assert len(critical_values(p).critical_points) == d - 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), seeds, st.floats(0.2, 5.0), st.floats(0, 2 * math.pi))
def test_scaling_conjugation_preserves_multipliers(d, seed, mod, arg):
    p = random_poly(np.random.default_rng(seed), d)
    a = mod * cmath.exp(1j * arg)
    m1 = fixed_point_spectrum(p).multipliers
    m2 = fixed_point_spectrum(conjugate_by_scaling(p, a)).multipliers
    assert _match(m1, m2, 1e-8 * max(1.0, max(abs(m) for m in m1)))
    # the fixed points move to a xi
    f1 = np.asarray(fixed_point_spectrum(p).fixed_points) * a
    f2 = fixed_point_spectrum(conjugate_by_scaling(p, a)).fixed_points
    assert _match(f1, f2, 1e-7 * max(1.0, float(np.max(np.abs(f1)))))


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_compose_associative(seed, a, b, c):
    rng = np.random.default_rng(seed)
    p, q, r = random_poly(rng, a), random_poly(rng, b), random_poly(rng, c)
    left = np.asarray(compose(compose(p, q), r).coeffs)
    right = np.asarray(compose(p, compose(q, r)).coeffs)
    assert np.allclose(left, right, rtol=1e-10, atol=1e-10 * np.max(np.abs(left)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), seeds)
def test_second_iterate_multiplier_is_square(d, seed):
    p = random_poly(np.random.default_rng(seed), d)
    pp = iterate_poly(p, 2)
    dpp = derivative(pp)
    spec = fixed_point_spectrum(p)
    for xi, lam in zip(spec.fixed_points, spec.multipliers):
        got = complex(peval(dpp, xi))
        assert abs(got - lam ** 2) <= 1e-9 * max(1.0, abs(lam) ** 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 8), seeds)
def test_proposition1_never_contradicted(d, seed):
    rng = np.random.default_rng(seed)
    for p in (random_poly(rng, d), few_cv_poly(rng, d)):
        rep = check_proposition1(p)
        assert rep.counting_bound_holds and not rep.contradiction


def test_few_cv_sampler_controls_cv():
    rng = np.random.default_rng(5)
    for d in range(3, 9):
        for _ in range(10):
            p = few_cv_poly(rng, d)
            assert p.degree == d and critical_values(p).cv_count <= d - 1


# ---------------------------------------------------------------- harnesses


def test_counting_bound_harness_small():
    res = counting_bound_harness(trials=60, seed=11)
    assert not res.violations and not res.contradictions


def test_composition_and_corollary_harness():
    assert all(r.status == "pass" for *_, r in composition_harness(trials=20, seed=3))
    assert all(ok for *_, ok in corollary1_harness(trials=30, seed=3))


def test_landscape_rows_and_determinism():
    cfg = HarnessConfig.from_dict({"degrees": [5], "trials": 5, "seed": 2})
    rows = lambda_landscape(cfg)
    mono = [r for r in rows if r.kind == "monomial"]
    assert [(r.degree, r.cv) for r in mono] == [(d, 1) for d in range(2, 11)]
    assert all(r.lam == pytest.approx(r.degree) for r in mono)
    assert any(r.kind == "generic" and r.cv == 4 for r in rows)
    assert [r.csv_row() for r in rows] == [r.csv_row() for r in lambda_landscape(cfg)]
    with pytest.raises(InvalidInput):
        HarnessConfig.from_dict({"trials": 3})


def test_problem3_harness_monomial_control():
    rows = problem3_harness(trials=5, seed=4)
    mono = [r for r in rows if r.kind == "monomial"]
    assert [r.n for r in mono] == [2, 3]
    assert all(r.report.ratio == pytest.approx(1) and not r.flagged for r in mono)
    assert len(rows) == 2 + 5 * 2
