"""Maximum and minimum modulus on circles and the growth conditions built on them.

All magnitudes are handled as natural logs (``log_max = log M(r, f)``), so
``exp``-type growth never overflows here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .functions import (
    EvalError,
    ExtendedMagnitude,
    ExtendedOverflow,
    eval_logjet,
    evaluate,
    iterate,
    log_abs,
    loglog_abs,
    loglog_max_upper,
    oscillation_index,
)

MIN_SAMPLES = 64
MAX_SAMPLES = 2**18
REFINE_CANDIDATES = 8
TWO_PI = 2.0 * math.pi


class HypothesisViolated(ValueError):
    """The input does not satisfy the hypothesis of the estimate being applied."""


class NotPositiveHarmonic(HypothesisViolated):
    """``log|f|`` (or ``Re h``) is not positive where positivity is required."""


class ZeroOnCircle(EvalError):
    """``f`` vanishes on the circle although a nonvanishing guarantee was requested."""


class NotFound(RuntimeError):
    """No point passing the certified inequality was located; ``best`` holds
    the closest candidate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class CircleExtrema:
    """``log M(r, f)`` and ``log m(r, f)`` with the angles where they occur.

    ``resolved`` is False when the sampling density had to be capped below
    the oscillation estimate of ``f`` on this circle.
    """

    r: float
    log_max: float
    theta_max: float
    log_min: float
    theta_min: float
    samples: int
    refined_tol: float
    resolved: bool = True

    @property
    def max_modulus(self):
        return ExtendedMagnitude(self.log_max)

    @property
    def min_modulus(self):
        return ExtendedMagnitude(self.log_min)


def default_samples(f, r, max_samples=MAX_SAMPLES):
    """``max(64, 8 (1 + nu))`` with ``nu`` the oscillation index, capped.

    Returns ``(samples, resolved)``.
    """
    try:
        nu = oscillation_index(f, r)
    except (ExtendedOverflow, OverflowError):
        nu = math.inf
    want = 8.0 * (1.0 + nu)
    if want > max_samples:
        return max_samples, False
    return max(MIN_SAMPLES, int(math.ceil(want))), True


def _circle_log_abs(f, r, theta):
    return log_abs(f, r * np.exp(1j * np.asarray(theta, dtype=float)))


def _local_extrema(u, sign, k):
    """Indices of the ``k`` best cyclic local maxima of ``sign * u``."""
    s = sign * u
    is_peak = (s >= np.roll(s, 1)) & (s >= np.roll(s, -1))
    idx = np.flatnonzero(is_peak)
    if idx.size == 0:
        idx = np.array([int(np.argmax(s))])
    order = np.argsort(-s[idx], kind="stable")
    return idx[order[:k]]


def _refine(f, r, theta0, step, sign, tol):
    def objective(t):
        v = sign * _circle_log_abs(f, r, t)
        return -v if np.isfinite(v) else (math.inf if sign > 0 else -math.inf)

    res = minimize_scalar(
        objective,
        bounds=(theta0 - step, theta0 + step),
        method="bounded",
        options={"xatol": tol, "maxiter": 500},
    )
    return float(res.x), float(sign * -res.fun)


def circle_extrema(f, r, coarse_samples=None, tol=1e-10, require_nonvanishing=False,
                   max_samples=MAX_SAMPLES):
    """Maximum and minimum of ``log|f|`` on ``|z| = r``.

    Coarse equispaced sampling is followed by bounded scalar refinement
    around the best few local extrema; the returned values are never worse
    than the best coarse sample.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    if coarse_samples is None:
        n, resolved = default_samples(f, r, max_samples)
    else:
        n, resolved = max(MIN_SAMPLES, int(coarse_samples)), True
    theta = TWO_PI * np.arange(n) / n
    u = _circle_log_abs(f, r, theta)
    if np.any(np.isnan(u)) or np.any(np.isposinf(u)):
        raise ExtendedOverflow("log|f| is not finite on the circle")
    if require_nonvanishing and np.any(np.isneginf(u)):
        raise ZeroOnCircle(f"f vanishes on |z| = {r}")
    step = TWO_PI / n

    i = int(np.argmax(u))
    best_max, th_max = float(u[i]), float(theta[i])
    for j in _local_extrema(u, +1, REFINE_CANDIDATES):
        t, v = _refine(f, r, theta[j], step, +1, tol)
        if v > best_max:
            best_max, th_max = v, t

    i = int(np.argmin(u))
    best_min, th_min = float(u[i]), float(theta[i])
    if np.isfinite(best_min):
        for j in _local_extrema(u, -1, REFINE_CANDIDATES):
            t, v = _refine(f, r, theta[j], step, -1, tol)
            if v < best_min:
                best_min, th_min = v, t

    return CircleExtrema(
        r=float(r),
        log_max=best_max,
        theta_max=th_max % TWO_PI,
        log_min=best_min,
        theta_min=th_min % TWO_PI,
        samples=n,
        refined_tol=tol,
        resolved=resolved,
    )


def extrema_sweep(f, radii, **kwargs):
    return [circle_extrema(f, r, **kwargs) for r in radii]


def extrema_rows(sweep):
    return [
        {"r": e.r, "log_max": e.log_max, "theta_max": e.theta_max,
         "log_min": e.log_min, "theta_min": e.theta_min}
        for e in sweep
    ]


# --------------------------------------------------------------------------
# minimum-modulus conditions


def geometric_subgrid(lo, ratio, points=32):
    """``points`` radii strictly inside ``(lo, ratio * lo)``, equally spaced in log."""
    k = np.arange(1, points + 1)
    return lo * ratio ** (k / (points + 1))


@dataclass(frozen=True)
class MinModulusReport:
    """Outcome of searching ``rho in (r, b r)`` with ``m(rho, f) <= a``.

    Without a witness, ``witness_log_min`` is the smallest ``log m`` seen.
    """

    r: float
    a: float
    b: float
    witness_rho: float | None
    witness_log_min: float

    @property
    def holds(self):
        return self.witness_rho is not None


def check_condition_a3(f, a, b, r_grid, subgrid=32, **extrema_kwargs):
    """For each ``r`` search ``(r, b r)`` for a circle where ``m(rho, f) <= a``."""
    if not a > 0 or not b > 1:
        raise ValueError("need a > 0 and b > 1")
    radii = list(r_grid)
    if any(r <= 0 for r in radii) or any(x >= y for x, y in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and increasing")
    log_a = math.log(a)
    reports = []
    for r in radii:
        lowest, witness = math.inf, None
        for rho in geometric_subgrid(r, b, subgrid):
            e = circle_extrema(f, float(rho), **extrema_kwargs)
            lowest = min(lowest, e.log_min)
            if e.log_min <= log_a:
                witness, lowest = float(rho), e.log_min
                break
        reports.append(MinModulusReport(float(r), a, b, witness, lowest))
    return reports


@dataclass(frozen=True)
class A4Report:
    """Search of ``rho in (r, c r)`` with ``log m <= (1 - eps) log M``.

    ``skipped`` lists radii where ``log M <= 0`` made the comparison degenerate.
    """

    r: float
    eps: float
    c: float
    witness_rho: float | None
    skipped: tuple = ()

    @property
    def holds(self):
        return self.witness_rho is not None


def check_condition_a4(f, eps, c, r, subgrid=32, **extrema_kwargs):
    if not 0 < eps < 1 or not c > 1 or not r > 0:
        raise ValueError("need 0 < eps < 1, c > 1, r > 0")
    skipped = []
    for rho in geometric_subgrid(r, c, subgrid):
        e = circle_extrema(f, float(rho), **extrema_kwargs)
        if e.log_max <= 0:
            skipped.append(float(rho))
            continue
        if e.log_min <= (1.0 - eps) * e.log_max:
            return A4Report(float(r), eps, c, float(rho), tuple(skipped))
    return A4Report(float(r), eps, c, None, tuple(skipped))


def a3_constant_from_a4(eps, c):
    """The ``b`` for which the a4 condition with ``(eps, c)`` forces the a3
    condition with ``a = 1``: ``b = exp(4 pi / eps) c``."""
    return math.exp(4.0 * math.pi / eps) * c


# --------------------------------------------------------------------------
# Harnack


@dataclass(frozen=True)
class HarnackAnnulusReport:
    R: float
    eps: float
    min_u: float
    max_u: float
    holds: bool


def harnack_annulus_check(f, R, eps, circles=256, angles=256):
    """Check ``min u > (1 - eps) max u`` on ``|z| = R`` for ``u = log|f|``.

    ``u`` must be positive on the annulus ``exp(-2 pi/eps) R < |z| <
    exp(2 pi/eps) R``; this is verified on a ``circles x angles`` grid.
    """
    if not R > 0 or not 0 < eps < 1:
        raise ValueError("need R > 0 and 0 < eps < 1")
    span = TWO_PI / eps
    radii = R * np.exp(span * np.linspace(-1.0, 1.0, circles + 2)[1:-1])
    theta = TWO_PI * np.arange(angles) / angles
    z = radii[:, None] * np.exp(1j * theta)[None, :]
    u = log_abs(f, z)
    bad = ~(u > 0)
    if np.any(bad):
        i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise NotPositiveHarmonic(
            f"log|f| = {u[i, j]:.6g} <= 0 at |z| = {radii[i]:.6g}, arg = {theta[j]:.6g}"
        )
    e = circle_extrema(f, R)
    return HarnackAnnulusReport(float(R), eps, e.log_min, e.log_max,
                                bool(e.log_min > (1.0 - eps) * e.log_max))


@dataclass(frozen=True)
class HarnackTwoPointReport:
    rho: float
    min_ratio: float
    max_ratio: float
    lower: float
    upper: float
    holds: bool


def harnack_two_point(h, a, r, rho, samples=256):
    """Sample ``v(z)/v(a)`` on ``|z - a| = rho r`` for ``v = Re h``.

    ``v`` must be positive on ``D(a, r)``; positivity is checked on a polar
    grid reaching the boundary.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    theta = TWO_PI * np.arange(samples) / samples
    ring = np.exp(1j * theta)
    grid = a + r * np.outer(np.linspace(0.0, 1.0 - 1e-12, 33), ring)
    v_grid = np.real(evaluate(h, grid))
    if np.any(~(v_grid > 0)):
        raise NotPositiveHarmonic("Re h is not positive on the disk")
    va = float(np.real(evaluate(h, complex(a))))
    ratios = np.real(evaluate(h, a + rho * r * ring)) / va
    lower, upper = (1 - rho) / (1 + rho), (1 + rho) / (1 - rho)
    lo, hi = float(ratios.min()), float(ratios.max())
    return HarnackTwoPointReport(rho, lo, hi, lower, upper, bool(lo >= lower and hi <= upper))


# --------------------------------------------------------------------------
# points with |h| = 1 and large |h'|


@dataclass(frozen=True)
class PommerenkePoint:
    """``|h(z0)| = 1`` and ``|h'(z0)| >= log M(exp(-pi)|z0|, h) / (2 pi |z0|)``.

    Magnitudes are stored as natural logs; ``deriv_abs`` and ``bound_rhs``
    give the plain values.
    """

    z0: complex
    log_h_z0: float
    log_deriv_abs: float
    log_bound_rhs: float
    R: float

    @property
    def deriv_abs(self):
        return ExtendedMagnitude(self.log_deriv_abs).value()

    @property
    def bound_rhs(self):
        return ExtendedMagnitude(self.log_bound_rhs).value()

    @property
    def certified(self):
        return abs(self.log_h_z0) <= 1e-8 and self.log_deriv_abs >= self.log_bound_rhs


def _ray_values(h, zeta1, phis, ts):
    zeta = zeta1 + ts[None, :] * np.exp(1j * np.asarray(phis))[:, None]
    return log_abs(h, np.exp(zeta))


def _first_crossing(h, zeta1, phi, ts, values=None):
    """Smallest ``t`` in ``ts`` range with ``log|h| = 0`` along the ray, or inf."""
    if values is None:
        values = _ray_values(h, zeta1, [phi], ts)[0]
    hit = np.flatnonzero(values <= 0)
    if hit.size == 0:
        return math.inf
    k = hit[0]
    if values[k] == 0:
        return float(ts[k])
    t_lo = 0.0 if k == 0 else float(ts[k - 1])
    direction = np.exp(1j * phi)

    def g(t):
        return log_abs(h, np.exp(zeta1 + t * direction))

    if not g(t_lo) > 0:
        return float(ts[k])
    return float(brentq(g, t_lo, float(ts[k]), xtol=1e-15, rtol=4 * np.finfo(float).eps))


def _polish_on_ray(h, zeta1, phi, t):
    """Newton steps on ``t -> log|h(exp(zeta1 + t e^{i phi}))|``."""
    d = np.exp(1j * phi)
    for _ in range(8):
        z = np.exp(zeta1 + t * d)
        jet = eval_logjet(h, z)
        if abs(jet.log_abs) < 1e-13:
            break
        slope = (jet.dlog * z * d).real
        if slope == 0 or not np.isfinite(slope):
            break
        t = t - jet.log_abs / slope
    return t


def _candidate(h, zeta1, phi, t, R):
    t = _polish_on_ray(h, zeta1, phi, t)
    z0 = complex(np.exp(zeta1 + t * np.exp(1j * phi)))
    jet = eval_logjet(h, z0)
    log_deriv = jet.derivative_log_abs()
    inner = circle_extrema(h, math.exp(-math.pi) * abs(z0))
    if inner.log_max > 0:
        log_rhs = math.log(inner.log_max) - math.log(TWO_PI * abs(z0))
    else:
        log_rhs = -math.inf
    return PommerenkePoint(z0, float(jet.log_abs), float(log_deriv), float(log_rhs), float(R))


def find_pommerenke_point(h, R, directions=360, steps=400):
    """Locate ``z0`` in ``exp(-pi) R < |z| < exp(pi) R`` with ``|h(z0)| = 1`` and
    ``|h'(z0)| >= log M(exp(-pi)|z0|, h) / (2 pi |z0|)``.

    Works in ``zeta = log z``: from the max-modulus point on ``|z| = R`` it
    finds the nearest point of the level set ``|h| = 1`` by marching rays,
    then checks the inequality there and, failing that, at the other level
    set points reached by the rays, nearest first.
    """
    e = circle_extrema(h, R)
    if not (e.log_min <= 0 < e.log_max):
        raise HypothesisViolated(
            f"need m(R,h) <= 1 < M(R,h); got log m = {e.log_min:.6g}, log M = {e.log_max:.6g}"
        )
    zeta1 = complex(math.log(R), e.theta_max)
    ts = math.pi * (1 - 1e-9) * np.arange(1, steps + 1) / steps
    phis = TWO_PI * np.arange(directions) / directions
    values = _ray_values(h, zeta1, phis, ts)
    crossings = np.array([_first_crossing(h, zeta1, p, ts, values[i]) for i, p in enumerate(phis)])
    if not np.any(np.isfinite(crossings)):
        raise NotFound("no point with |h| = 1 within distance pi of the max-modulus point")

    i = int(np.argmin(crossings))
    step = TWO_PI / directions
    res = minimize_scalar(
        lambda p: _first_crossing(h, zeta1, p, ts),
        bounds=(phis[i] - step, phis[i] + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    candidates = []
    if np.isfinite(res.fun) and res.fun <= crossings[i]:
        candidates.append((float(res.x), float(res.fun)))
    order = np.argsort(crossings, kind="stable")
    candidates += [(float(phis[j]), float(crossings[j])) for j in order if np.isfinite(crossings[j])]

    best = None
    for phi, t in candidates:
        pt = _candidate(h, zeta1, phi, t, R)
        if pt.certified:
            return pt
        if best is None or (pt.log_deriv_abs - pt.log_bound_rhs) > (best.log_deriv_abs - best.log_bound_rhs):
            best = pt
    raise NotFound("no level-set point passed the certified inequality", best=best)


# --------------------------------------------------------------------------
# maximum modulus of iterates


@dataclass(frozen=True)
class IterateModulus:
    """Bounds on ``log log M(r, f^n)``.

    ``method`` is ``"direct"`` when the circle was sampled at full
    resolution (lower = upper), otherwise ``"sandwich"``: the upper bound is
    ``M(M(r, f^(n-1)), f)`` applied recursively, the lower bound is
    ``|f^n|`` at the argmax angle of ``f^(n-1)``.
    """

    r: float
    n: int
    loglog_lower: float
    loglog_upper: float
    theta_star: float
    method: str

    @property
    def gap(self):
        return self.loglog_upper - self.loglog_lower


def _resolvable(f, r, max_samples):
    return default_samples(f, r, max_samples)[1]


def _argmax_angle(f, m, r, max_samples):
    while m >= 1:
        g = iterate(f, m)
        if _resolvable(g, r, max_samples):
            try:
                return circle_extrema(g, r, max_samples=max_samples).theta_max
            except ExtendedOverflow:
                pass
        m -= 1
    return 0.0


def iterate_log_max(f, n, r, max_samples=MAX_SAMPLES):
    """Log-log maximum modulus of the ``n``-th iterate on ``|z| = r``."""
    fn = iterate(f, n)
    if _resolvable(fn, r, max_samples):
        try:
            e = circle_extrema(fn, r, max_samples=max_samples)
            ll = math.log(e.log_max) if e.log_max > 0 else -math.inf
            return IterateModulus(float(r), n, ll, ll, e.theta_max, "direct")
        except ExtendedOverflow:
            pass
    upper = loglog_max_upper(fn, math.log(r))
    theta = _argmax_angle(f, n - 1, r, max_samples)
    try:
        lower = float(loglog_abs(fn, r * np.exp(1j * theta)))
    except ExtendedOverflow:
        lower = -math.inf
    # both sides are exact for exp-type maps; absorb rounding
    lower = min(lower, upper)
    return IterateModulus(float(r), n, lower, float(upper), float(theta), "sandwich")
