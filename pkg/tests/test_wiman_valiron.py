import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entiredyn.functions import EXP, Series, poly
from entiredyn.modulus import circle_extrema
from entiredyn.wiman_valiron import (
    NoConvergence,
    SeriesLogCoeffs,
    TruncationDominates,
    exp_log_coeffs,
    max_term,
    monomial_log_coeffs,
    read_log_coeffs,
    solve_branch,
    solve_preimage,
    verify_local_model,
    verify_mu_vs_M,
    write_log_coeffs,
)

EXP_COEFFS = exp_log_coeffs(400)


@pytest.mark.parametrize("r", [10, 20, 40])
def test_exp_central_index(r):
    prof = max_term(EXP_COEFFS, r)
    assert prof.nu == r
    assert prof.log_mu == pytest.approx(r * math.log(r) - math.lgamma(r + 1), rel=1e-13)
    assert not prof.boundary_flag


def test_exp_central_index_between_integers():
    assert max_term(EXP_COEFFS, 10.5).nu == 10


@pytest.mark.parametrize("d", [1, 3, 7])
def test_monomial_profile(d):
    c = monomial_log_coeffs(d)
    for r in (0.5, 2.0, 30.0):
        prof = max_term(c, r)
        assert prof.nu == d and prof.log_mu == pytest.approx(d * math.log(r))


def test_truncated_geometric_series():
    c = SeriesLogCoeffs((0.0,) * 50)
    prof = max_term(c, 2.0)
    assert prof.nu == 49 and prof.boundary_flag
    with pytest.raises(TruncationDominates):
        max_term(c, 2.0, strict=True)


def test_coefficient_validation():
    with pytest.raises(ValueError):
        SeriesLogCoeffs((0.0,))
    with pytest.raises(ValueError):
        SeriesLogCoeffs((0.0, -math.inf, -math.inf))


def test_coefficient_file_round_trip(tmp_path):
    c = SeriesLogCoeffs((0.0, -math.inf, -1.5, -7.25))
    path = tmp_path / "c.txt"
    write_log_coeffs(c, path)
    assert read_log_coeffs(path) == c


def _brute(la, r):
    best_k, best = 0, -math.inf
    for k, a in enumerate(la):
        t = a + k * math.log(r)
        if t >= best - 1e-12 * max(1.0, abs(best)):
            if t > best:
                best = t
            best_k = k
    return best_k, best


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 5), min_size=2, max_size=40), st.floats(0.01, 50.0))
def test_max_term_matches_brute_force(la, r):
    c = SeriesLogCoeffs(tuple(la))
    prof = max_term(c, r)
    k, best = _brute(la, r)
    assert prof.log_mu == pytest.approx(best, rel=1e-12, abs=1e-12)
    terms = np.asarray(la) + np.arange(len(la)) * math.log(r)
    assert np.all(terms <= prof.log_mu + 1e-9 * max(1.0, abs(prof.log_mu)))
    assert prof.nu == k


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_central_index_nondecreasing(beta):
    c = SeriesLogCoeffs(tuple(-beta * math.lgamma(k + 1) for k in range(300)))
    radii = np.geomspace(0.1, 60.0, 400)
    nus = [max_term(c, r).nu for r in radii]
    assert all(a <= b for a, b in zip(nus, nus[1:]))


@pytest.mark.parametrize("r", [1.0, 5.0, 25.0, 60.0])
def test_max_term_below_max_modulus(r):
    assert max_term(EXP_COEFFS, r).log_mu <= circle_extrema(EXP, r).log_max + 1e-12
    s = Series([1.0 / math.factorial(k) ** 0.5 for k in range(120)])
    c = SeriesLogCoeffs(tuple(np.log(np.abs(s.coeffs))))
    if r <= s.trust_radius:
        assert max_term(c, r).log_mu <= circle_extrema(s, r).log_max + 1e-12


def _exp_error_oracle(r, nu, K, samples=2000):
    # g(z0 e^tau) / (g(z0) e^(nu tau)) = exp(r (e^tau - 1) - nu tau) for z0 = r
    rho = K / nu * np.sqrt(np.linspace(0, 1, samples))
    theta = np.linspace(0, 2 * math.pi, samples)
    tau = (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
    return float(np.max(np.abs(np.exp(r * np.expm1(tau) - nu * tau) - 1)))


@pytest.mark.parametrize("r", [40, 400])
def test_exp_local_model(r):
    rep = verify_local_model(EXP, exp_log_coeffs(max(200, 4 * r + 50)), r, K=1)
    bound = 0.05 if r == 40 else 0.005
    assert rep.err_value < bound and rep.err_modulus < bound
    assert rep.err_derivative < 2 * bound
    assert rep.err_value <= _exp_error_oracle(r, rep.nu, 1) + 1e-12


def test_exp_local_model_errors_shrink():
    errs = [verify_local_model(EXP, EXP_COEFFS, r).err_value for r in (10, 20, 40)]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("d", [2, 5])
def test_monomial_local_model_exact(d):
    rep = verify_local_model(poly(*([0] * d + [1])), monomial_log_coeffs(d), 3.0)
    assert max(rep.err_value, rep.err_modulus, rep.err_derivative) < 1e-12


def test_mu_versus_M_for_exp():
    rows = verify_mu_vs_M(EXP_COEFFS, EXP, [10, 20, 40, 80])
    ratios = [row.ratio for row in rows]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert 0.9 < rows[2].ratio <= 1
    assert rows[3].nu == 80 and rows[3].nu_bound_holds
    assert rows[3].nu_bound == pytest.approx(rows[3].log_mu ** 1.1)


def test_mu_versus_M_monomial_exact():
    (row,) = verify_mu_vs_M(monomial_log_coeffs(4), poly(0, 0, 0, 0, 1), [3.0])
    assert row.ratio == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("r, sigma", [
    (30.0, 1.0), (30.0, 0.5 - 0.3j), (200.0, 1.0), (200.0, 2j * math.pi), (200.0, 0.5 - 0.3j),
])
def test_preimage_closed_form(r, sigma):
    nu = max_term(exp_log_coeffs(1000), r).nu
    sol = solve_preimage(EXP, r, sigma, nu)
    assert sol.tau == pytest.approx(cmath.log(1 + sigma / r), abs=1e-12)
    assert sol.residual < 1e-10 and sol.window_error < 0.5


def test_preimage_trivial():
    assert solve_preimage(EXP, 10.0, 0, 10).tau == 0


def test_preimage_window_enforced():
    # |30 log(1 + 2 pi i / 30) - 2 pi i| = 0.65: the window only closes as r grows
    with pytest.raises(NoConvergence):
        solve_preimage(EXP, 30.0, 2j * math.pi, 30)


def test_branch_exp():
    assert solve_branch(EXP, 50.0, 0, 50).tau == 0
    sol = solve_branch(EXP, 50.0, 1, 50)
    assert sol.tau == pytest.approx(cmath.log(1 + 2j * math.pi / 50), abs=1e-12)
    assert sol.residual < 1e-10
    assert sol.derivative_near_one


def test_branch_monomial_roots_of_unity():
    sol = solve_branch(poly(0, 0, 0, 1), 1.5, 1, 3)
    assert sol.tau == pytest.approx(2j * math.pi / 3, abs=1e-12)
    assert sol.dphi_dz == pytest.approx(cmath.exp(2j * math.pi / 3), abs=1e-6)
