"""Maximum term, central index and numerical checks of the local polynomial model.

Near a point ``z0`` of maximum modulus an entire function ``g`` behaves like
``g(z0) (z/z0)**nu`` with ``nu`` the central index at ``|z0|``.  The routines
here measure how well that holds for concrete functions and solve the two
local preimage problems that the model makes well posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functions import EXP, Polynomial, Series, eval_logjet
from .modulus import circle_extrema

TIE_RTOL = 1e-12


class TruncationDominates(ValueError):
    """The maximum term sits at the last retained coefficient."""


class NoConvergence(RuntimeError):
    def __init__(self, message, trajectory=()):
        super().__init__(message)
        self.trajectory = tuple(trajectory)


@dataclass(frozen=True)
class SeriesLogCoeffs:
    """``log|a_k|`` for ``k < N`` (``-inf`` marks a zero coefficient)."""

    log_abs_coeffs: tuple

    def __post_init__(self):
        la = tuple(float(x) for x in self.log_abs_coeffs)
        if len(la) < 2:
            raise ValueError("need at least two coefficients")
        if any(math.isnan(x) or x == math.inf for x in la):
            raise ValueError("log coefficients must be finite or -inf")
        if sum(1 for x in la if math.isfinite(x)) < 2:
            raise ValueError("need at least two nonzero coefficients")
        object.__setattr__(self, "log_abs_coeffs", la)

    def __len__(self):
        return len(self.log_abs_coeffs)

    @property
    def array(self):
        return np.asarray(self.log_abs_coeffs)

    def to_series(self):
        """Series with the positive coefficients ``exp(log|a_k|)``."""
        return Series(np.exp(self.array))


def exp_log_coeffs(n):
    """``log(1/k!)`` for ``k < n``."""
    return SeriesLogCoeffs(tuple(-math.lgamma(k + 1) for k in range(n)))


def monomial_log_coeffs(d, n=None):
    """Coefficients of ``z**d`` padded to length ``n`` (default ``d + 2``).

    ``a_0`` is set to ``exp(-1e300)`` rather than zero to keep two finite
    entries; it never wins the maximum for any representable radius.
    """
    if d < 1:
        raise ValueError("monomial degree must be >= 1")
    n = d + 2 if n is None else n
    la = [-math.inf] * n
    la[0] = -1e300
    la[d] = 0.0
    return SeriesLogCoeffs(tuple(la))


def coeffs_from_polynomial(p):
    with np.errstate(divide="ignore"):
        return SeriesLogCoeffs(tuple(np.log(np.abs(np.asarray(p.coeffs)))))


def read_log_coeffs(path):
    """One ``log|a_k|`` per line; blank lines and ``#`` comments are skipped."""
    vals = []
    with open(path) as fh:
        for line in fh:
            s = line.split("#", 1)[0].strip()
            if s:
                vals.append(float(s))
    return SeriesLogCoeffs(tuple(vals))


def write_log_coeffs(coeffs, path):
    with open(path, "w") as fh:
        for x in coeffs.log_abs_coeffs:
            fh.write(f"{x!r}\n")


@dataclass(frozen=True)
class WVProfile:
    """Maximum term ``mu`` (as ``log_mu``) and central index ``nu`` at ``r``."""

    r: float
    log_mu: float
    nu: int
    boundary_flag: bool


def max_term(coeffs, r, strict=False):
    """Maximize ``log|a_k| + k log r``; ties go to the largest ``k``.

    Values within ``TIE_RTOL`` (relative, log scale) of the maximum count as
    ties so that exact ties like ``r**9/9! == r**10/10!`` at ``r = 10`` are not
    decided by rounding.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    la = coeffs.array
    terms = la + np.arange(len(la)) * math.log(r)
    best = float(np.max(terms))
    tol = TIE_RTOL * max(1.0, abs(best))
    nu = int(np.flatnonzero(terms >= best - tol)[-1])
    flag = nu == len(la) - 1
    if flag and strict:
        raise TruncationDominates(
            f"central index at r = {r} is the last retained index {nu}; extend the series"
        )
    return WVProfile(float(r), float(terms[nu]), nu, flag)


# --------------------------------------------------------------------------
# local model


@dataclass(frozen=True)
class LocalModelReport:
    """Worst relative errors over the ``tau`` disk.

    ``err_value``: ``g(z0 e^tau) / (g(z0) e^(nu tau)) - 1``;
    ``err_modulus``: ``|g(z0 e^tau)| / M(|z0 e^tau|, g) - 1``;
    ``err_derivative``: ``g'(z0 e^tau) z0 e^tau / (nu g(z0 e^tau)) - 1``.
    """

    r: float
    nu: int
    K: float
    z0: complex
    err_value: float
    err_modulus: float
    err_derivative: float


def tau_disk(radius, samples):
    """Polar grid on ``|tau| <= radius`` including the centre."""
    rho = radius * np.arange(1, samples + 1) / samples
    theta = 2 * math.pi * np.arange(samples) / samples
    pts = (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
    return np.concatenate([[0j], pts])


def verify_local_model(g, coeffs, r, K=1.0, tau_samples=8):
    prof = max_term(coeffs, r)
    nu = prof.nu
    e = circle_extrema(g, r)
    z0 = r * complex(math.cos(e.theta_max), math.sin(e.theta_max))
    taus = tau_disk(K / nu, tau_samples)
    z = z0 * np.exp(taus)
    base = eval_logjet(g, z0)
    jet = eval_logjet(g, z)

    ratio = np.exp(jet.log_abs - base.log_abs - nu * taus.real) * (jet.phase / base.phase) \
        * np.exp(-1j * nu * taus.imag)
    err_value = float(np.max(np.abs(ratio - 1)))

    err_deriv = float(np.max(np.abs(jet.dlog * z / nu - 1)))

    err_mod = 0.0
    for zi, li in zip(z, jet.log_abs):
        m = circle_extrema(g, abs(zi)).log_max
        err_mod = max(err_mod, abs(math.expm1(li - m)))
    return LocalModelReport(float(r), nu, K, z0, err_value, err_mod, err_deriv)


@dataclass(frozen=True)
class MuVsMRow:
    r: float
    log_mu: float
    log_M: float
    ratio: float
    nu: int
    nu_bound: float
    nu_bound_holds: bool


def verify_mu_vs_M(coeffs, g, r_grid, eps=0.1):
    """``log mu / log M`` per radius and the check ``nu <= (log mu)**(1+eps)``."""
    rows = []
    for r in r_grid:
        prof = max_term(coeffs, r)
        log_M = circle_extrema(g, r).log_max
        ratio = prof.log_mu / log_M if log_M != 0 else math.nan
        bound = prof.log_mu ** (1 + eps) if prof.log_mu > 0 else 0.0
        rows.append(MuVsMRow(float(r), prof.log_mu, log_M, ratio, prof.nu, bound,
                             bool(prof.nu <= bound)))
    return rows


# --------------------------------------------------------------------------
# local preimages


def _ratio_jet(g, z0, base, tau):
    """``g(z0 e^tau) / g(z0)`` and its ``tau``-derivative."""
    z = z0 * np.exp(tau)
    jet = eval_logjet(g, z)
    ratio = np.exp(jet.log_abs - base.log_abs) * (jet.phase / base.phase)
    return complex(ratio), complex(ratio * jet.dlog * z)


def _newton_tau(g, z0, target, tau, max_steps=50, tol=1e-10):
    """Solve ``g(z0 e^tau) / g(z0) = target`` by Newton in ``tau``."""
    base = eval_logjet(g, z0)
    trajectory = []
    for _ in range(max_steps):
        ratio, dratio = _ratio_jet(g, z0, base, tau)
        resid = ratio / target - 1
        trajectory.append(abs(resid))
        if abs(resid) < tol:
            # a few extra steps push the residual to rounding level
            for _ in range(3):
                ratio, dratio = _ratio_jet(g, z0, base, tau)
                step = (ratio / target - 1) / (dratio / target)
                if not np.isfinite(step) or abs(step) < 1e-16 * max(1.0, abs(tau)):
                    break
                tau -= step
            ratio, _ = _ratio_jet(g, z0, base, tau)
            return tau, abs(ratio / target - 1), trajectory
        step = resid / (dratio / target)
        if not np.isfinite(step):
            break
        tau -= step
    raise NoConvergence(f"Newton did not converge in {max_steps} steps", trajectory)


@dataclass(frozen=True)
class PreimageSolution:
    tau: complex
    residual: float
    window_error: float  # |nu tau - sigma| or |nu tau - 2 pi i j|


def solve_preimage(g, z0, sigma, nu, window=0.5):
    """``tau`` with ``g(z0 e^tau) = g(z0) e^sigma`` and ``|nu tau - sigma| < window``."""
    sigma = complex(sigma)
    if sigma == 0:
        return PreimageSolution(0j, 0.0, 0.0)
    tau, resid, traj = _newton_tau(g, complex(z0), complex(np.exp(sigma)), sigma / nu)
    werr = abs(nu * tau - sigma)
    if werr >= window:
        raise NoConvergence(f"solution has |nu tau - sigma| = {werr:.3g} outside the window", traj)
    return PreimageSolution(tau, resid, werr)


@dataclass(frozen=True)
class BranchSolution:
    tau: complex
    residual: float
    window_error: float
    dphi_dz: complex  # finite-difference d/dz (z e^tau_j(z))

    @property
    def derivative_near_one(self):
        return abs(self.dphi_dz - 1) < 0.1


def _branch_tau(g, z, j, nu):
    if j == 0:
        return 0j, 0.0, []
    return _newton_tau(g, complex(z), 1.0 + 0j, 2j * math.pi * j / nu)


def solve_branch(g, z, j, nu, window=0.5, h=None):
    """``tau_j`` with ``g(z e^tau_j) = g(z)`` and ``|nu tau_j - 2 pi i j| < window``.

    The derivative of ``z -> z e^tau_j(z)`` is estimated by central
    differences, continuing the branch from ``tau_j(z)``.
    """
    z = complex(z)
    tau, resid, traj = _branch_tau(g, z, j, nu)
    werr = abs(nu * tau - 2j * math.pi * j)
    if werr >= window:
        raise NoConvergence(f"branch solution misses the window by {werr:.3g}", traj)
    if j == 0:
        return BranchSolution(0j, 0.0, 0.0, 1.0 + 0j)
    h = 1e-6 * abs(z) / max(nu, 1) if h is None else h
    phis = []
    for dz in (h, -h):
        t, _, _ = _newton_tau(g, z + dz, 1.0 + 0j, tau)
        phis.append((z + dz) * np.exp(t))
    dphi = (phis[0] - phis[1]) / (2 * h)
    return BranchSolution(tau, resid, werr, complex(dphi))


def default_coeffs_for(g, r_max):
    """Coefficient profile matching ``g`` for the built-in cases (exp, polynomials)."""
    if g == EXP:
        return exp_log_coeffs(max(200, int(4 * r_max) + 50))
    if isinstance(g, Polynomial):
        return coeffs_from_polynomial(g)
    if isinstance(g, Series):
        with np.errstate(divide="ignore"):
            return SeriesLogCoeffs(tuple(np.log(np.abs(np.asarray(g.coeffs)))))
    raise ValueError("no coefficient profile known for this function; pass one explicitly")
