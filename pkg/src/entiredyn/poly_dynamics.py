"""Polynomial dynamics with exact degrees: roots, critical values, fixed-point spectra.

``Lambda(p)`` is the largest multiplier modulus over the fixed points of ``p``.
Polynomials are :class:`~entiredyn.functions.Polynomial` values (ascending
complex coefficients).  Iterates are formed by exact coefficient composition so
that all ``d**n`` fixed points of ``p**n`` are available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .functions import Polynomial

Poly = Polynomial

ROOT_RESIDUAL_TOL = 1e-10
INDIFFERENT_TOL = 1e-7
FIXED_POINT_MERGE_RTOL = 1e-6
MAX_ITERATE_DEGREE = 4096


class NoConvergence(RuntimeError):
    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = tuple(residuals)


class InvalidInput(ValueError):
    pass


class DegreeTooLarge(ValueError):
    pass


class CoefficientOverflow(OverflowError):
    pass


def _coeffs(p):
    return np.asarray(p.coeffs, dtype=complex)


def derivative(p):
    c = _coeffs(p)
    if len(c) == 1:
        return Polynomial((0j,))
    return Polynomial(tuple(P.polyder(c)))


def peval(p, z):
    return P.polyval(z, _coeffs(p))


# --------------------------------------------------------------------------
# roots


def _scaled_residual(c, z):
    """``|p(z)| / (|lead| max(1, |z|)**d)``, evaluated stably for large ``|z|``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape)
    inside = np.abs(z) <= 1
    out[inside] = np.abs(P.polyval(z[inside], c))
    w = 1.0 / z[~inside]
    # z**-d p(z) is the reversed polynomial at 1/z
    out[~inside] = np.abs(P.polyval(w, c[::-1]))
    return out / abs(c[-1])


def _aberth(c, max_iter):
    d = len(c) - 1
    monic = c / c[-1]
    dc = P.polyder(monic)
    radius = max(abs(monic[0]) ** (1.0 / d), 1e-3)
    k = np.arange(d)
    z = radius * np.exp(1j * (2 * np.pi * k / d + 0.4)) * (1 + 0.01 * np.cos(3.7 * k))
    for _ in range(max_iter):
        pv = P.polyval(z, monic)
        dv = P.polyval(z, dc)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = pv / dv
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            step = w / (1 - w * s)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(z))):
            break
    return z


def _newton_polish(c, z, steps=3):
    dc = P.polyder(c)
    for _ in range(steps):
        with np.errstate(divide="ignore", invalid="ignore"):
            step = P.polyval(z, c) / P.polyval(z, dc)
        z = np.where(np.isfinite(step), z - step, z)
    return z


def roots(p, tol=ROOT_RESIDUAL_TOL, max_iter=500):
    """All ``d`` roots with multiplicity, sorted by ``(real, imag)``.

    Aberth-Ehrlich from a perturbed circle; the companion-matrix eigenvalues
    serve as fallback.  Exact zero low-order coefficients are deflated first.
    """
    c = _coeffs(p)
    d = len(c) - 1
    if d < 1:
        raise InvalidInput("roots need degree >= 1")
    k0 = int(np.argmax(c != 0))
    out = [0j] * k0
    c = c[k0:]
    if len(c) == 2:
        out.append(-c[0] / c[1])
    elif len(c) > 2:
        z = _aberth(c, max_iter)
        res = _scaled_residual(c, z)
        if not np.all(res < tol):
            alt = _newton_polish(c, np.roots(c[::-1]).astype(complex), steps=2)
            res_alt = _scaled_residual(c, alt)
            if np.max(res_alt) < np.max(res):
                z, res = alt, res_alt
        if not np.all(res < tol):
            raise NoConvergence("root residuals above tolerance", res)
        out.extend(z.tolist())
    return sorted((complex(x) for x in out), key=lambda x: (x.real, x.imag))


def cluster(points, tol):
    """Single-linkage clusters of complex points at distance ``<= tol``.

    Returns the list of index groups, ordered by the smallest member.
    """
    pts = np.asarray(points, dtype=complex)
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if n:
        close = np.abs(pts[:, None] - pts[None, :]) <= tol
        for i, j in zip(*np.nonzero(np.triu(close, 1))):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


# --------------------------------------------------------------------------
# critical values and fixed points


@dataclass(frozen=True)
class CriticalData:
    critical_points: tuple
    critical_values_clustered: tuple
    cv_count: int
    cluster_tol: float
    gap: float  # smallest distance between clusters divided by cluster_tol


def critical_values(p, cluster_tol=None):
    """Critical values of ``p`` grouped by single linkage.

    The default tolerance is ``1e-8 * max(1, max |p(c)|)`` over critical points
    ``c``.
    """
    if p.degree < 2:
        raise InvalidInput("critical values need degree >= 2")
    crit = roots(derivative(p))
    vals = peval(p, np.asarray(crit))
    if cluster_tol is None:
        cluster_tol = 1e-8 * max(1.0, float(np.max(np.abs(vals))))
    groups = cluster(vals, cluster_tol)
    centers = [complex(np.mean(vals[g])) for g in groups]
    centers.sort(key=lambda v: (v.real, v.imag))
    if len(centers) > 1:
        cz = np.asarray(centers)
        dist = np.abs(cz[:, None] - cz[None, :])
        np.fill_diagonal(dist, np.inf)
        gap = float(dist.min()) / cluster_tol
    else:
        gap = math.inf
    return CriticalData(tuple(crit), tuple(centers), len(centers), float(cluster_tol), gap)


@dataclass(frozen=True)
class FixedPointSpectrum:
    fixed_points: tuple
    multipliers: tuple
    lambda_max: float
    nonrepelling_count: int
    indifferent_tol: float

    @property
    def has_repelling(self):
        return any(abs(m) > 1 + self.indifferent_tol for m in self.multipliers)


def fixed_point_spectrum(p, indifferent_tol=INDIFFERENT_TOL):
    """Fixed points (with multiplicity) and their multipliers ``p'(xi)``.

    Root estimates that cluster within ``1e-6`` relative are replaced by the
    cluster mean, which is the accurate estimate of a multiple fixed point.
    """
    if p.degree < 1:
        raise InvalidInput("need degree >= 1")
    c = list(p.coeffs)
    if len(c) < 2:
        c.append(0j)
    c[1] -= 1
    if p.degree == 1 and c[1] == 0:
        raise InvalidInput("p(z) - z is constant")
    fps = np.asarray(roots(Polynomial(tuple(c))), dtype=complex)
    for g in cluster(fps, FIXED_POINT_MERGE_RTOL * max(1.0, float(np.max(np.abs(fps))))):
        if len(g) > 1:
            fps[g] = np.mean(fps[g])
    mult = peval(derivative(p), fps)
    mods = np.abs(mult)
    return FixedPointSpectrum(
        tuple(complex(x) for x in fps),
        tuple(complex(m) for m in np.atleast_1d(mult)),
        float(mods.max()),
        int(np.sum(mods <= 1 + indifferent_tol)),
        indifferent_tol,
    )


def lambda_of(p, indifferent_tol=INDIFFERENT_TOL):
    return fixed_point_spectrum(p, indifferent_tol).lambda_max


@dataclass(frozen=True)
class Proposition1Report:
    """``applies``: ``d > 2 cv(p)``; a contradiction is ``applies`` without a repelling fixed point."""

    degree: int
    cv_count: int
    applies: bool
    has_repelling: bool
    nonrepelling_count: int
    two_cv: int
    counting_bound_holds: bool
    cluster_tol: float
    gap: float

    @property
    def contradiction(self):
        return self.applies and not self.has_repelling


def check_proposition1(p, indifferent_tol=INDIFFERENT_TOL, cluster_tol=None):
    if p.degree < 2:
        raise InvalidInput("need degree >= 2")
    cd = critical_values(p, cluster_tol)
    spec = fixed_point_spectrum(p, indifferent_tol)
    two_cv = 2 * cd.cv_count
    return Proposition1Report(
        p.degree, cd.cv_count, p.degree > two_cv, spec.has_repelling,
        spec.nonrepelling_count, two_cv, spec.nonrepelling_count <= two_cv,
        cd.cluster_tol, cd.gap,
    )


# --------------------------------------------------------------------------
# composition


def compose(p, q):
    """Coefficients of ``p(q(z))`` by Horner's scheme over polynomials."""
    cp, cq = _coeffs(p), _coeffs(q)
    acc = np.array([cp[-1]])
    for a in cp[-2::-1]:
        acc = P.polyadd(P.polymul(acc, cq), [a])
    if not np.all(np.isfinite(acc)):
        raise CoefficientOverflow("composed coefficients overflow")
    acc = np.trim_zeros(acc, "b")
    return Polynomial(tuple(acc) if len(acc) else (0j,))


def iterate_poly(p, n):
    out = p
    for _ in range(n - 1):
        out = compose(p, out)
    return out


def conjugate_by_scaling(p, a):
    """``a p(z / a)``, which has the same multipliers as ``p``."""
    c = _coeffs(p)
    k = np.arange(len(c))
    return Polynomial(tuple(c * complex(a) ** (1 - k)))


@dataclass(frozen=True)
class CompositionReport:
    """``cv(p o q) <= cv(p) + deg q - 1 <= deg p + deg q - 2`` and ``deg(p o q) = deg p deg q``."""

    cv_pq: int
    cv_p: int
    deg_p: int
    deg_q: int
    deg_pq: int
    first_holds: bool
    second_holds: bool
    degree_holds: bool
    unreliable: bool
    gap: float

    @property
    def status(self):
        if self.unreliable:
            return "unreliable"
        ok = self.first_holds and self.second_holds and self.degree_holds
        return "pass" if ok else "fail"


def check_cv_composition(p, q, cluster_tol=None):
    if p.degree < 2 or q.degree < 2:
        raise InvalidInput("both degrees must be >= 2")
    pq = compose(p, q)
    cpq = critical_values(pq, cluster_tol)
    cp = critical_values(p, cluster_tol)
    bound = cp.cv_count + q.degree - 1
    unreliable = min(cpq.gap, cp.gap) < 10
    return CompositionReport(
        cpq.cv_count, cp.cv_count, p.degree, q.degree, pq.degree,
        cpq.cv_count <= bound, bound <= p.degree + q.degree - 2,
        pq.degree == p.degree * q.degree, unreliable, min(cpq.gap, cp.gap),
    )


def check_corollary1(p, q, indifferent_tol=INDIFFERENT_TOL):
    """True iff ``p o q`` has a repelling fixed point."""
    if p.degree < 3 or q.degree < 3:
        raise InvalidInput("both degrees must be >= 3")
    return fixed_point_spectrum(compose(p, q), indifferent_tol).has_repelling


# --------------------------------------------------------------------------
# iterates


@dataclass(frozen=True)
class LambdaIterateReport:
    """``Lambda(p**n)`` over all fixed points and over points of exact period ``n``."""

    degree: int
    n: int
    lambda_pn: float
    d_pow_n: float
    ratio: float
    lambda_genuine: float
    ratio_genuine: float


def lambda_iterate_study(p, n, indifferent_tol=INDIFFERENT_TOL, match_rtol=1e-6):
    if n < 1:
        raise InvalidInput("n must be positive")
    d = p.degree
    if d < 1:
        raise InvalidInput("need degree >= 1")
    if d ** n > MAX_ITERATE_DEGREE:
        raise DegreeTooLarge(f"deg p**n = {d ** n} exceeds {MAX_ITERATE_DEGREE}")
    spec = fixed_point_spectrum(iterate_poly(p, n), indifferent_tol)
    lower = []
    for m in range(1, n):
        if n % m == 0:
            lower.extend(fixed_point_spectrum(iterate_poly(p, m), indifferent_tol).fixed_points)
    lower = np.asarray(lower, dtype=complex)
    genuine = []
    for z, lam in zip(spec.fixed_points, spec.multipliers):
        if lower.size and np.min(np.abs(lower - z)) <= match_rtol * max(1.0, abs(z)):
            continue
        genuine.append(abs(lam))
    lam_g = max(genuine) if genuine else math.nan
    dn = float(d ** n)
    return LambdaIterateReport(d, n, spec.lambda_max, dn, spec.lambda_max / dn, lam_g, lam_g / dn)


# --------------------------------------------------------------------------
# seeded harnesses


def unit_disk(rng, size):
    r = np.sqrt(rng.random(size))
    t = 2 * np.pi * rng.random(size)
    return r * np.exp(1j * t)


def random_poly(rng, d, monic=False):
    """Coefficients i.i.d. uniform on the unit disk (leading set to 1 if monic)."""
    c = unit_disk(rng, d + 1)
    if monic:
        c[-1] = 1.0
    while c[-1] == 0:
        c[-1] = unit_disk(rng, 1)[0]
    return Polynomial(tuple(c))


def few_cv_poly(rng, d):
    """Integrate ``p' = d prod (z - c_j)**m_j`` with repeated root blocks.

    The number of distinct critical points ``k`` is drawn from ``1..d-1``, so
    ``cv(p) <= k``.
    """
    k = int(rng.integers(1, d))
    cuts = np.sort(rng.choice(np.arange(1, d - 1), size=k - 1, replace=False)) if k > 1 else []
    mults = np.diff(np.concatenate([[0], cuts, [d - 1]])).astype(int)
    centers = unit_disk(rng, k)
    dp = np.array([float(d)], dtype=complex)
    for c, m in zip(centers, mults):
        for _ in range(m):
            dp = P.polymul(dp, [-c, 1.0])
    coeffs = P.polyint(dp)
    coeffs[0] = unit_disk(rng, 1)[0]
    return Polynomial(tuple(coeffs))


@dataclass
class HarnessConfig:
    degrees: list = field(default_factory=lambda: [2, 3, 4, 5])
    trials: int = 20
    seed: int = 0
    cluster_tol: float | None = None
    indifferent_tol: float = INDIFFERENT_TOL

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in ("degrees", "trials", "seed", "cluster_tol", "indifferent_tol") if k in d}
        if "seed" not in known:
            raise InvalidInput("harness config needs a seed")
        return cls(**known)


@dataclass(frozen=True)
class LandscapeRow:
    trial: int
    kind: str
    degree: int
    cv: int
    lam: float

    def csv_row(self):
        return {"trial": self.trial, "kind": self.kind, "d": self.degree,
                "cv": self.cv, "lambda": f"{self.lam:.12g}"}


def lambda_landscape(config):
    """``(d, cv, Lambda)`` rows: monomials, generic samples and few-cv samples."""
    rng = np.random.default_rng(config.seed)
    rows = []
    for d in range(2, 11):
        p = Polynomial(tuple([0] * d + [1]))
        rows.append(LandscapeRow(-1, "monomial", d, critical_values(p).cv_count,
                                 lambda_of(p, config.indifferent_tol)))
    t = 0
    for d in config.degrees:
        if d < 2:
            raise InvalidInput("landscape degrees must be >= 2")
        for _ in range(config.trials):
            for kind in ("generic", "few_cv"):
                p = random_poly(rng, d) if kind == "generic" else few_cv_poly(rng, d)
                cv = critical_values(p, config.cluster_tol).cv_count
                rows.append(LandscapeRow(t, kind, d, cv, lambda_of(p, config.indifferent_tol)))
                t += 1
    return rows


@dataclass
class CountingBoundResult:
    reports: list
    violations: list
    contradictions: list


def counting_bound_harness(degrees=range(3, 9), trials=500, seed=0,
                           indifferent_tol=INDIFFERENT_TOL, cluster_tol=None):
    """``nonrepelling_count <= 2 cv(p)`` on ``trials`` random polynomials."""
    rng = np.random.default_rng(seed)
    degrees = list(degrees)
    reports, bad, contra = [], [], []
    for t in range(trials):
        d = degrees[t % len(degrees)]
        p = random_poly(rng, d)
        rep = check_proposition1(p, indifferent_tol, cluster_tol)
        reports.append((p, rep))
        if not rep.counting_bound_holds:
            bad.append((t, p, rep))
        if rep.contradiction:
            contra.append((t, p, rep))
    return CountingBoundResult(reports, bad, contra)


def composition_harness(trials=50, degrees=(2, 5), seed=0, cluster_tol=None):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        dp, dq = (int(x) for x in rng.integers(degrees[0], degrees[1] + 1, size=2))
        p, q = random_poly(rng, dp), random_poly(rng, dq)
        out.append((p, q, check_cv_composition(p, q, cluster_tol)))
    return out


def corollary1_harness(trials=100, degree=3, seed=0, indifferent_tol=INDIFFERENT_TOL):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        p, q = random_poly(rng, degree), random_poly(rng, degree)
        out.append((p, q, check_corollary1(p, q, indifferent_tol)))
    return out


@dataclass(frozen=True)
class Problem3Row:
    trial: int
    kind: str
    n: int
    report: LambdaIterateReport
    flagged: bool

    def csv_row(self):
        r = self.report
        return {"trial": self.trial, "kind": self.kind, "d": r.degree, "n": self.n,
                "lambda_pn": f"{r.lambda_pn:.12g}", "d_pow_n": f"{r.d_pow_n:.12g}",
                "ratio": f"{r.ratio:.6f}", "ratio_genuine": f"{r.ratio_genuine:.6f}",
                "flagged": int(self.flagged)}


def problem3_harness(degree=2, ns=(2, 3), trials=50, seed=0, flag_below=0.99,
                     indifferent_tol=INDIFFERENT_TOL):
    """``Lambda(p**n) / d**n`` for seeded monic polynomials plus the ``z**d`` control."""
    rng = np.random.default_rng(seed)
    rows = []
    mono = Polynomial(tuple([0] * degree + [1]))
    for n in ns:
        rep = lambda_iterate_study(mono, n, indifferent_tol)
        rows.append(Problem3Row(-1, "monomial", n, rep, rep.ratio < flag_below))
    for t in range(trials):
        p = random_poly(rng, degree, monic=True)
        for n in ns:
            rep = lambda_iterate_study(p, n, indifferent_tol)
            rows.append(Problem3Row(t, "random", n, rep, rep.ratio < flag_below))
    return rows
