"""Periodic points in bounded boxes, their multipliers, and the bound studies.

Zeros of ``F(z) = f^n(z) - z`` are counted with the argument principle on
box boundaries, isolated by quadtree subdivision and refined by Newton.  The
log-scale jets of :mod:`entiredyn.functions` keep ``F'/F`` finite even where
``f^n`` itself overflows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .functions import (
    EXP,
    EvalError,
    ExtendedOverflow,
    Builtin,
    Compose,
    eval_jet,
    eval_logjet,
    evaluate,
    is_transcendental,
    iterate,
    log_abs,
)
from .modulus import check_condition_a3, circle_extrema, iterate_log_max

CLASS_TOL = 1e-9
RESIDUAL_TOL = 1e-9
DEDUP_RTOL = 1e-6
PERIOD_RTOL = 1e-6
SPLIT_FRACTIONS = (0.5, 0.5 + 0.0397, 0.5 - 0.0529, 0.5 + 0.0813, 0.5 - 0.1031)


class BoundaryZero(EvalError):
    """A zero sits on (or within rounding of) the box boundary."""


class QuadratureStall(RuntimeError):
    """The winding integral did not settle within the node budget."""


class InvalidInput(ValueError):
    pass


class CrossCheckFailed(RuntimeError):
    """The exp multiplier identity failed, which signals a corrupted orbit."""


class HypothesisWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ComplexBox:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ValueError(f"degenerate box {self}")

    @classmethod
    def parse(cls, text):
        """``"re_lo,re_hi,im_lo,im_hi"``."""
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"box needs four numbers, got {text!r}")
        return cls(*parts)

    @property
    def center(self):
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    @property
    def diam(self):
        return math.hypot(self.re_hi - self.re_lo, self.im_hi - self.im_lo)

    def dilate(self, factor):
        c = self.center
        hw = 0.5 * factor * (self.re_hi - self.re_lo)
        hh = 0.5 * factor * (self.im_hi - self.im_lo)
        return ComplexBox(c.real - hw, c.real + hw, c.imag - hh, c.imag + hh)

    def contains(self, z, margin=0.0):
        return (self.re_lo - margin <= z.real <= self.re_hi + margin
                and self.im_lo - margin <= z.imag <= self.im_hi + margin)

    def split(self, fx=0.5, fy=0.5):
        xm = self.re_lo + fx * (self.re_hi - self.re_lo)
        ym = self.im_lo + fy * (self.im_hi - self.im_lo)
        return [
            ComplexBox(self.re_lo, xm, self.im_lo, ym),
            ComplexBox(xm, self.re_hi, self.im_lo, ym),
            ComplexBox(self.re_lo, xm, ym, self.im_hi),
            ComplexBox(xm, self.re_hi, ym, self.im_hi),
        ]

    def as_list(self):
        return [self.re_lo, self.re_hi, self.im_lo, self.im_hi]


# --------------------------------------------------------------------------
# F = f^n - z in log form


def _fixed_point_logderiv(fn, z):
    """``F'/F`` for ``F(z) = fn(z) - z`` without forming ``fn(z)`` when huge."""
    jet = eval_logjet(fn, z)
    L, ph, dl = (np.asarray(jet.log_abs), np.asarray(jet.phase), np.asarray(jet.dlog))
    z = np.asarray(z)
    out = np.empty(z.shape, dtype=complex)
    big = L > 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        if np.any(big):
            a = np.exp(-L[big]) / ph[big]
            out[big] = (dl[big] - a) / (1.0 - z[big] * a)
        small = ~big
        if np.any(small):
            v = np.exp(L[small]) * ph[small]
            out[small] = (dl[small] * v - 1.0) / (v - z[small])
    return out


def _fixed_point_log_abs(fn, z):
    """``log|fn(z) - z|`` without forming ``fn(z)`` when huge."""
    jet = eval_logjet(fn, z)
    L, ph = np.asarray(jet.log_abs), np.asarray(jet.phase)
    z = np.asarray(z)
    with np.errstate(over="ignore", divide="ignore", under="ignore", invalid="ignore"):
        big = L > 0
        q = np.where(big, z * np.exp(-np.where(big, L, 0.0)) / ph, 0.0)
        direct = np.log(np.abs(np.exp(np.minimum(L, 0.0)) * ph - z))
        return np.where(big, L + np.log(np.abs(1.0 - q)), direct)


def _near_boundary_zero(fn, zs, g, scale):
    """Small ``|F|`` together with a short Newton step flags a boundary zero."""
    with np.errstate(divide="ignore"):
        step = 1.0 / np.abs(g)
    sus = step < 1e-9 * scale
    if not np.any(sus):
        return False
    la = _fixed_point_log_abs(fn, zs[sus])
    return bool(np.any(la < math.log(1e-9) + np.log(np.maximum(1.0, np.abs(zs[sus])))))


def _edges(box, n):
    """Nodes and complex steps of the trapezoid rule on each edge (ccw)."""
    c = [complex(box.re_lo, box.im_lo), complex(box.re_hi, box.im_lo),
         complex(box.re_hi, box.im_hi), complex(box.re_lo, box.im_hi)]
    t = np.arange(n + 1) / n
    nodes = [a + (b - a) * t for a, b in zip(c, c[1:] + c[:1])]
    steps = [(b - a) / n for a, b in zip(c, c[1:] + c[:1])]
    return nodes, steps


def _winding(fn, box, max_nodes, start=16):
    """Argument-principle count by trapezoid doubling on each edge.

    Returns the count and the first moment ``sum of zeros`` (which locates a
    single zero directly).
    """
    scale = box.diam
    # coarse total variation of log F decides whether doubling can succeed
    nodes, steps = _edges(box, start)
    var = [float(np.sum(np.abs(_fixed_point_logderiv(fn, zs)))) * abs(h)
           for zs, h in zip(nodes, steps)]
    if not all(math.isfinite(v) for v in var):
        var = [0.0]
    need = max(var)
    if 32 * need > max_nodes:
        raise QuadratureStall(f"log F varies by ~{need:.3g} along an edge")
    n = start
    while n < 2 * need:
        n *= 2
    prev = None
    while 4 * n <= max_nodes:
        nodes, steps = _edges(box, n)
        total = moment = 0j
        for zs, h in zip(nodes, steps):
            g = _fixed_point_logderiv(fn, zs)
            if not np.all(np.isfinite(g)):
                raise BoundaryZero("F'/F is singular on the boundary")
            if _near_boundary_zero(fn, zs, g, scale):
                raise BoundaryZero("a zero lies within 1e-9 diam of the boundary")
            total += h * (np.sum(g) - 0.5 * (g[0] + g[-1]))
            zg = zs * g
            moment += h * (np.sum(zg) - 0.5 * (zg[0] + zg[-1]))
        q = total / (2j * math.pi)
        k = round(q.real)
        if (prev is not None and abs(q - prev) < 0.05 and abs(q.real - k) < 0.25
                and abs(q.imag) < 0.25 and round(prev.real) == k):
            return int(k), complex(moment / (2j * math.pi))
        prev = q
        n *= 2
    raise QuadratureStall(f"winding integral unsettled at {4 * n // 2} boundary nodes")


def count_zeros(f, box, n=1, max_nodes=2**20, retries=8):
    """Number of zeros of ``f^n(z) - z`` in ``box`` (with multiplicity)."""
    return _count(iterate(f, n), box, max_nodes, retries)[0]


def _count(fn, box, max_nodes, retries=8):
    b = box
    for i in range(retries + 1):
        try:
            return _winding(fn, b, max_nodes)
        except BoundaryZero:
            b = b.dilate(1 + 1e-6)
        except QuadratureStall as exc:
            # a zero pushed just inside by dilation still defeats the quadrature
            if i == 0:
                raise
            raise BoundaryZero(f"zero on the boundary of {box}") from exc
    raise BoundaryZero(f"zero on the boundary of {box} after {retries} dilations")


# --------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple
    multiplier_log_abs: float
    multiplier_phase: complex
    classification: str
    residual: float
    multiplicity: int = 1

    @property
    def multiplier(self):
        return math.exp(self.multiplier_log_abs) * self.multiplier_phase

    @property
    def min_modulus_point(self):
        return min(self.points, key=abs)

    def record(self):
        return {
            "period": self.period,
            "points": [[p.real, p.imag] for p in self.points],
            "mult_log_abs": self.multiplier_log_abs,
            "mult_phase": [self.multiplier_phase.real, self.multiplier_phase.imag],
            "class": self.classification,
            "residual": self.residual,
        }


def classify(log_abs_multiplier, tol=CLASS_TOL):
    if log_abs_multiplier > tol:
        return "repelling"
    if log_abs_multiplier < -tol:
        return "attracting"
    return "indifferent"


def multiplier_of(f, points, check_exp=True):
    """``(log|(f^p)'|, phase)`` along the cycle ``points``.

    For ``f = exp`` the chain-rule value is compared with the product of the
    orbit points, which must agree to ``1e-9`` relative.
    """
    pts = np.asarray(points, dtype=complex)
    jet = eval_logjet(f, pts)
    dlog = np.asarray(jet.dlog)
    logs = np.array(jet.derivative_log_abs(), dtype=float, ndmin=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.array(np.asarray(jet.phase) * dlog / np.abs(dlog), ndmin=1)
    bad = ~np.isfinite(logs) | ~np.isfinite(unit)
    if np.any(bad):
        # zero of f or f' on the cycle: the plain derivative is representable
        der = np.array(eval_jet(f, pts[bad]).derivative, dtype=complex, ndmin=1)
        with np.errstate(divide="ignore"):
            logs[bad] = np.log(np.abs(der))
        unit[bad] = np.where(der != 0, der / np.where(der != 0, np.abs(der), 1.0), 1.0)
    log_m = float(np.sum(logs))
    phase = complex(np.prod(unit))
    phase /= abs(phase)
    if check_exp and f == EXP:
        log_p = float(np.sum(np.log(np.abs(pts))))
        ph_p = complex(np.prod(pts / np.abs(pts)))
        ph_p /= abs(ph_p)
        rel = abs(np.exp(log_m - log_p) * phase / ph_p - 1)
        if not rel < 1e-9:
            raise CrossCheckFailed(f"exp multiplier identity violated (rel err {rel:.3g})")
    return log_m, phase


def _cycle_residual(f, pts):
    nxt = np.roll(np.asarray(pts), -1)
    with np.errstate(over="ignore", invalid="ignore"):
        img = evaluate(f, np.asarray(pts))
    return float(np.max(np.abs(img - nxt) / np.maximum(1.0, np.abs(nxt))))


def _polish_cycle(f, pts, steps=4):
    """Newton on the cyclic system ``f(p_k) = p_{k+1}``."""
    pts = np.asarray(pts, dtype=complex)
    p = len(pts)
    try:
        best = _cycle_residual(f, pts)
    except ExtendedOverflow:
        return pts, math.inf
    for _ in range(steps):
        try:
            jet = eval_logjet(f, pts)
            val = np.asarray(jet.value())
            der = np.asarray(jet.dlog) * val
            G = val - np.roll(pts, -1)
            J = np.zeros((p, p), dtype=complex)
            J[np.arange(p), np.arange(p)] += der
            J[np.arange(p), (np.arange(p) + 1) % p] -= 1.0
            cand = pts - np.linalg.solve(J, G)
            res = _cycle_residual(f, cand)
        except (ExtendedOverflow, np.linalg.LinAlgError):
            break
        if not res < best:
            break
        pts, best = cand, res
    return pts, best


def _canonical(points):
    pts = list(points)
    key = [(round(p.real, 9), round(p.imag, 9)) for p in pts]
    i = min(range(len(pts)), key=lambda k: key[k])
    return tuple(pts[i:] + pts[:i])


def _proper_divisors(n):
    return [m for m in range(1, n) if n % m == 0]


def _minimal_period(f, z, n):
    for m in _proper_divisors(n):
        try:
            w = evaluate(iterate(f, m), z)
        except ExtendedOverflow:
            continue
        if abs(w - z) <= PERIOD_RTOL * max(1.0, abs(z)):
            return m
    return n


def build_orbit(f, z, period, multiplicity=1):
    pts = [complex(z)]
    for _ in range(period - 1):
        pts.append(complex(evaluate(f, pts[-1])))
    pts, res = _polish_cycle(f, pts)
    pts = _canonical([complex(p) for p in pts])
    log_m, phase = multiplier_of(f, pts)
    return PeriodicOrbit(period, pts, log_m, phase, classify(log_m), res, multiplicity)


# --------------------------------------------------------------------------
# search


@dataclass
class PeriodicSearch:
    """Result of a box search for zeros of ``f^n(z) - z``.

    ``orbits`` have exact period ``n``; ``lower_period`` holds orbits whose
    period properly divides ``n``.  ``skipped`` lists subboxes that could not
    be resolved and ``rejected`` zeros whose cycle residual stayed too large.
    """

    n: int
    orbits: list = field(default_factory=list)
    lower_period: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    zero_count: int = 0

    def all_orbits(self):
        return self.orbits + self.lower_period


def _newton_in_box(fn, z, box, tol, max_iter=60):
    guard = box.dilate(3.0)
    for _ in range(max_iter):
        try:
            g = complex(_fixed_point_logderiv(fn, np.asarray([z]))[0])
        except ExtendedOverflow:
            return None
        if g == 0 or not np.isfinite(g):
            return None
        step = 1.0 / g
        z = z - step
        if not guard.contains(z):
            return None
        if abs(step) <= tol * max(1.0, abs(z)):
            return z
    return None


def _split_is_clean(fn, box, fx, fy):
    xm = box.re_lo + fx * (box.re_hi - box.re_lo)
    ym = box.im_lo + fy * (box.im_hi - box.im_lo)
    t = np.linspace(0.0, 1.0, 257)
    lines = np.concatenate([
        xm + 1j * (box.im_lo + t * (box.im_hi - box.im_lo)),
        (box.re_lo + t * (box.re_hi - box.re_lo)) + 1j * ym,
    ])
    try:
        g = _fixed_point_logderiv(fn, lines)
    except ExtendedOverflow:
        return True
    with np.errstate(divide="ignore"):
        return bool(np.all(np.isfinite(g)) and np.min(1.0 / np.abs(g)) > 1e-6 * box.diam)


def _subdivide(fn, box):
    for fx in SPLIT_FRACTIONS:
        for fy in SPLIT_FRACTIONS:
            if _split_is_clean(fn, box, fx, fy):
                return box.split(fx, fy)
    return box.split(SPLIT_FRACTIONS[1], SPLIT_FRACTIONS[2])


def _isolate(fn, box, tol, max_depth, max_nodes, max_boxes, result):
    """Quadtree search; returns ``[(zero, multiplicity)]``."""
    zeros = []
    stack = [(box, 0)]
    visited = 0
    min_size = 1e-9 * max(1.0, abs(box.center))
    while stack:
        b, depth = stack.pop()
        visited += 1
        if visited > max_boxes:
            result.skipped.append((b, "box budget exhausted"))
            result.skipped.extend((bb, "box budget exhausted") for bb, _ in stack)
            break
        try:
            k, moment = _count(fn, b, max_nodes)
        except (QuadratureStall, ExtendedOverflow) as exc:
            if depth < max_depth:
                stack.extend((c, depth + 1) for c in reversed(_subdivide(fn, b)))
            else:
                result.skipped.append((b, type(exc).__name__))
            continue
        except BoundaryZero:
            result.skipped.append((b, "BoundaryZero"))
            continue
        if k <= 0:
            continue
        tiny = b.diam < min_size
        if k == 1 or tiny:
            # a tiny box with k > 1 is treated as one zero of multiplicity k
            starts = [moment / k, b.center] + [c.center for c in b.split()]
            found = None
            for s in starts:
                z = _newton_in_box(fn, s, b, tol)
                if z is not None and b.contains(z, margin=1e-9 * b.diam):
                    found = z
                    break
            if found is not None:
                zeros.append((found, k))
                result.zero_count += k
                continue
        if depth >= max_depth or tiny:
            result.skipped.append((b, f"unresolved: {k} zero(s) at depth {depth}"))
            continue
        stack.extend((c, depth + 1) for c in reversed(_subdivide(fn, b)))
    return zeros


def _near_existing(z, orbits):
    for orb in orbits:
        for p in orb.points:
            if abs(p - z) <= DEDUP_RTOL * max(1.0, abs(z)):
                return True
    return False


def find_periodic(f, n, box, tol=1e-13, max_depth=14, max_nodes=2**16, max_boxes=20000):
    """Periodic points of ``f`` with period dividing ``n`` in ``box``."""
    return find_periodic_in_boxes(f, n, [box], tol, max_depth, max_nodes, max_boxes)


def find_periodic_in_boxes(f, n, boxes, tol=1e-13, max_depth=14, max_nodes=2**16,
                           max_boxes=20000):
    if n < 1:
        raise ValueError("n must be positive")
    fn = iterate(f, n)
    result = PeriodicSearch(n)
    zeros = []
    for box in boxes:
        zeros += _isolate(fn, box, tol, max_depth, max_nodes, max_boxes, result)
    found = []
    for z, mult in zeros:
        if _near_existing(z, found):
            continue
        period = _minimal_period(f, z, n)
        try:
            orb = build_orbit(f, z, period, mult)
        except (ExtendedOverflow, CrossCheckFailed) as exc:
            result.rejected.append({"z": z, "reason": str(exc)})
            continue
        if not orb.residual < RESIDUAL_TOL:
            result.rejected.append({"z": z, "reason": f"residual {orb.residual:.3g}"})
            continue
        found.append(orb)
    found.sort(key=lambda o: (o.period, round(o.points[0].real, 9), round(o.points[0].imag, 9)))
    result.orbits = [o for o in found if o.period == n]
    result.lower_period = [o for o in found if o.period != n]
    for b, reason in result.skipped:
        warnings.warn(f"subbox {b.as_list()} skipped: {reason}", RuntimeWarning, stacklevel=2)
    return result


# --------------------------------------------------------------------------
# bound studies


@dataclass(frozen=True)
class BoundStudyRow:
    """One repelling orbit measured against ``log M(shrink |xi|, f^n)``.

    ``xi`` is the orbit point of smallest modulus.  Ratios are
    ``|multiplier| / log M``; ``ratio_lower`` uses the upper sandwich bound.
    """

    orbit: PeriodicOrbit
    xi: complex
    shrink: float
    log_logM_lower: float
    log_logM_upper: float
    ratio_lower: float
    ratio_upper: float
    upper_sanity: bool | None = None
    product_bound: bool | None = None

    def csv_row(self):
        return {
            "|xi|": abs(self.xi),
            "mult_log_abs": self.orbit.multiplier_log_abs,
            "logM_lower": _safe_exp(self.log_logM_lower),
            "logM_upper": _safe_exp(self.log_logM_upper),
            "ratio_lower": self.ratio_lower,
            "ratio_upper": self.ratio_upper,
            "log_logM_lower": self.log_logM_lower,
            "log_logM_upper": self.log_logM_upper,
        }


def _safe_exp(x):
    return math.exp(x) if x < 709.78 else math.inf


@dataclass
class BoundStudy:
    rows: list
    search: PeriodicSearch
    hypothesis_ok: bool


def exp_product_log_bound(xi_abs, n):
    """``log prod_{j<n} exp^j(|xi|)``: the exact upper bound for exp multipliers."""
    total = math.log(xi_abs)
    x = xi_abs
    for _ in range(1, n):
        total += x
        x = _safe_exp(x)
    return total


def check_hypothesis(f, a=1.0, b=2.0, r_grid=(4.0, 8.0, 16.0)):
    if not is_transcendental(f):
        return False
    try:
        return all(rep.holds for rep in check_condition_a3(f, a, b, r_grid))
    except EvalError:
        return False


def bound_study_theorem1(f, n, boxes, shrink=0.9, hypothesis=None, **search_kwargs):
    """Repelling period-``n`` orbits with ``|mult| / log M(shrink |xi|, f^n)``.

    A failing minimum-modulus hypothesis only triggers a warning.  For
    ``f = exp`` each row also records the upper-bound checks
    ``log|mult| <= 1.1 log M(|xi|, f^n)`` and
    ``|mult| <= prod_{j<n} exp^j(|xi|)``.
    """
    if n < 2:
        raise InvalidInput("the iterate bound study needs n >= 2")
    if not 0 < shrink < 1:
        raise InvalidInput("shrink must lie in (0, 1)")
    ok = check_hypothesis(f, **(hypothesis or {}))
    if not ok:
        warnings.warn("f fails the minimum-modulus hypothesis on the test grid; "
                      "running the study anyway", HypothesisWarning, stacklevel=2)
    search = find_periodic_in_boxes(f, n, boxes, **search_kwargs)
    rows = []
    for orb in search.orbits:
        if orb.classification != "repelling":
            continue
        xi = orb.min_modulus_point
        im = iterate_log_max(f, n, shrink * abs(xi))
        m = orb.multiplier_log_abs
        sanity = product = None
        if f == EXP:
            full = iterate_log_max(f, n, abs(xi))
            sanity = bool(m <= 1.1 * _safe_exp(full.loglog_upper))
            product = bool(m <= exp_product_log_bound(abs(xi), n) + 1e-9 * max(1.0, abs(m)))
        rows.append(BoundStudyRow(
            orb, xi, shrink, im.loglog_lower, im.loglog_upper,
            _safe_exp(m - im.loglog_upper), _safe_exp(m - im.loglog_lower),
            sanity, product,
        ))
    return BoundStudy(rows, search, ok)


@dataclass(frozen=True)
class Theorem2Row:
    """A fixed point of ``f o g``.

    ``extremality = |g(xi)| / M(|xi|, g)``; ``ratio = |(f o g)'(xi)| /
    log M(beta M(|xi|, g), f)`` against the upper bound of that maximum modulus.
    """

    orbit: PeriodicOrbit
    xi: complex
    extremality: float
    log_logM_f: float
    ratio: float

    def csv_row(self):
        return {
            "|xi|": abs(self.xi),
            "mult_log_abs": self.orbit.multiplier_log_abs,
            "extremality": self.extremality,
            "log_logM_f": self.log_logM_f,
            "ratio": self.ratio,
        }


def bound_study_theorem2(f, g, boxes, beta=1e-10, hypothesis=None, **search_kwargs):
    if not is_transcendental(g):
        raise InvalidInput("g must be transcendental")
    if not is_transcendental(f):
        raise InvalidInput("f must be transcendental")
    if not beta > 0:
        raise InvalidInput("beta must be positive")
    ok = check_hypothesis(f, **(hypothesis or {}))
    if not ok:
        warnings.warn("f fails the minimum-modulus hypothesis on the test grid",
                      HypothesisWarning, stacklevel=2)
    fg = Compose(f, g)
    search = find_periodic_in_boxes(fg, 1, boxes, **search_kwargs)
    rows = []
    for orb in search.orbits:
        xi = orb.points[0]
        log_Mg = circle_extrema(g, abs(xi)).log_max
        extremality = _safe_exp(float(log_abs(g, xi)) - log_Mg)
        radius = math.log(beta) + log_Mg
        ll = iterate_log_max(f, 1, _safe_exp(radius)).loglog_upper
        rows.append(Theorem2Row(orb, xi, extremality, ll,
                                _safe_exp(orb.multiplier_log_abs - ll)))
    return BoundStudy(rows, search, ok)


def is_builtin(f, tag):
    return isinstance(f, Builtin) and f.tag == tag
