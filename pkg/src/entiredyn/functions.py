"""Symbolic entire functions: values, first-order jets and log-scale evaluation.

An expression is one of :class:`Polynomial`, :class:`Series`, :class:`Builtin`,
:class:`Compose` or :class:`Iterate`.  All evaluators accept a scalar or a
numpy array of complex points and are vectorized over it.

Three evaluation routes are provided:

``evaluate`` / ``eval_jet``
    plain double precision value (and derivative); raises
    :class:`ExtendedOverflow` once a value leaves the double range.
``eval_logjet``
    ``log|f|``, the unit phase ``f/|f|`` and the logarithmic derivative
    ``f'/f``.  The outermost node never overflows, so ``log|exp(exp(z))|``
    is available long after ``exp(exp(z))`` itself is not.
``loglog_abs``
    ``log log|f|`` for expressions whose outer node is exponential, usable
    when even ``log|f|`` is out of range.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

EPS = float(np.finfo(float).eps)
BUILTIN_TAGS = ("exp", "sin", "cos", "zexp")
_DIRECT_TRIG_LIMIT = 20.0


class EvalError(ArithmeticError):
    """Base class for evaluation failures."""


class SeriesOutOfTrust(EvalError):
    """A truncated series was evaluated outside its radius of trust."""


class ExtendedOverflow(EvalError, OverflowError):
    """A value left the representable range; switch to log-scale routines."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


# --------------------------------------------------------------------------
# extended-range numbers


@dataclass(frozen=True, order=True)
class ExtendedMagnitude:
    """A nonnegative magnitude stored as its natural log (``-inf`` is zero)."""

    log_abs: float

    def __post_init__(self):
        x = float(self.log_abs)
        if math.isnan(x) or x == math.inf:
            raise ValueError(f"invalid log magnitude {self.log_abs!r}")
        object.__setattr__(self, "log_abs", x)

    @classmethod
    def from_value(cls, x):
        a = abs(x)
        return cls(math.log(a) if a > 0 else -math.inf)

    def __mul__(self, other):
        return ExtendedMagnitude(self.log_abs + other.log_abs)

    def __truediv__(self, other):
        return ExtendedMagnitude(self.log_abs - other.log_abs)

    def value(self):
        if self.log_abs > 709.78:
            return math.inf
        return math.exp(self.log_abs)

    def __float__(self):
        return self.value()


@dataclass(frozen=True)
class ExtendedComplex:
    """A complex number as ``exp(log_abs) * phase`` with ``|phase| = 1``."""

    log_abs: float
    phase: complex = 1.0 + 0j

    @classmethod
    def from_complex(cls, z):
        a = abs(z)
        if a == 0:
            return cls(-math.inf, 1.0 + 0j)
        return cls(math.log(a), complex(z) / a)

    def __mul__(self, other):
        ph = self.phase * other.phase
        return ExtendedComplex(self.log_abs + other.log_abs, ph / abs(ph))

    @property
    def magnitude(self):
        return ExtendedMagnitude(self.log_abs)

    def to_complex(self):
        if self.log_abs > 709.78:
            raise ExtendedOverflow("magnitude exceeds double range")
        return math.exp(self.log_abs) * self.phase


# --------------------------------------------------------------------------
# expression nodes


def _as_coeff_tuple(coeffs):
    return tuple(complex(c) for c in coeffs)


@dataclass(frozen=True)
class Polynomial:
    """``sum coeffs[k] z**k``; coefficients ascending by power."""

    coeffs: tuple

    def __post_init__(self):
        c = _as_coeff_tuple(self.coeffs)
        if not c:
            raise ValueError("polynomial needs at least one coefficient")
        if len(c) > 1 and c[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class Series:
    """Truncated power series of an entire function.

    Evaluation is allowed only inside :attr:`trust_radius`, the largest radius
    at which the last retained term is still below machine epsilon times the
    maximum term.
    """

    coeffs: tuple

    def __post_init__(self):
        c = _as_coeff_tuple(self.coeffs)
        if len(c) < 2:
            raise ValueError("series truncation length must be >= 2")
        if sum(1 for x in c if x != 0) < 2:
            raise ValueError("series needs at least two nonzero coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @cached_property
    def log_abs_coeffs(self):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.asarray(self.coeffs)))

    @cached_property
    def trust_radius(self):
        la = self.log_abs_coeffs
        finite = np.flatnonzero(np.isfinite(la))
        last = finite[-1]
        k = np.arange(len(la))
        target = math.log(EPS)

        def excess(t):
            return la[last] + last * t - np.max(la + k * t)

        # excess is nondecreasing in t = log r
        lo, hi = -745.0, 745.0
        if excess(hi) <= target:
            return math.inf
        if excess(lo) > target:
            return 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess(mid) <= target:
                lo = mid
            else:
                hi = mid
        return math.exp(lo)


@dataclass(frozen=True)
class Builtin:
    """One of the built-in transcendental functions ``exp``, ``sin``,
    ``cos`` or ``zexp`` (``z * exp(z)``)."""

    tag: str

    def __post_init__(self):
        if self.tag not in BUILTIN_TAGS:
            raise ValueError(f"unknown builtin {self.tag!r}; expected one of {BUILTIN_TAGS}")


@dataclass(frozen=True)
class Compose:
    """``outer(inner(z))``."""

    outer: "FunctionExpr"
    inner: "FunctionExpr"


@dataclass(frozen=True)
class Iterate:
    """The ``count``-fold iterate of ``base``."""

    base: "FunctionExpr"
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ValueError("iterate count must be a positive integer")
        object.__setattr__(self, "count", int(self.count))


FunctionExpr = Union[Polynomial, Series, Builtin, Compose, Iterate]

EXP = Builtin("exp")
SIN = Builtin("sin")
COS = Builtin("cos")
ZEXP = Builtin("zexp")


def poly(*coeffs):
    """Shorthand: ``poly(0, 0, 1)`` is ``z**2``."""
    return Polynomial(coeffs)


def iterate(f, n):
    return f if n == 1 else Iterate(f, n)


def is_transcendental(f):
    """True for expressions that stand for transcendental entire functions.

    A :class:`Series` counts as transcendental: it is the truncation of one.
    """
    if isinstance(f, Polynomial):
        return False
    if isinstance(f, (Builtin, Series)):
        return True
    if isinstance(f, Compose):
        return is_transcendental(f.outer) or is_transcendental(f.inner)
    if isinstance(f, Iterate):
        return is_transcendental(f.base)
    raise TypeError(f"not a function expression: {f!r}")


def _unroll(f):
    """Return ``(outer, inner)`` with ``f = outer o inner`` or ``(f, None)``."""
    if isinstance(f, Compose):
        return f.outer, f.inner
    if isinstance(f, Iterate) and f.count > 1:
        return f.base, iterate(f.base, f.count - 1)
    if isinstance(f, Iterate):
        return _unroll(f.base)
    return f, None


# --------------------------------------------------------------------------
# evaluation helpers


def _prepare(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _finish(x, scalar):
    return complex(x) if scalar else x


def _horner(coeffs, z):
    v = np.full(z.shape, coeffs[-1], dtype=complex)
    for c in reversed(coeffs[:-1]):
        v = v * z + c
    return v


def _deriv_coeffs(coeffs):
    if len(coeffs) == 1:
        return (0j,)
    return tuple(k * coeffs[k] for k in range(1, len(coeffs)))


def _check_trust(f, z):
    if isinstance(f, Series):
        r = np.max(np.abs(z)) if z.size else 0.0
        if r > f.trust_radius:
            raise SeriesOutOfTrust(
                f"|z| = {r:.6g} exceeds the series trust radius {f.trust_radius:.6g}"
            )


def _check_finite(v, z, what="value"):
    bad = ~np.isfinite(v) & np.isfinite(z)
    if np.any(bad):
        raise ExtendedOverflow(f"{what} exceeds double range; use log-scale evaluation")


def _eval(f, z):
    with np.errstate(over="ignore", invalid="ignore"):
        if isinstance(f, (Polynomial, Series)):
            _check_trust(f, z)
            v = _horner(f.coeffs, z)
        elif isinstance(f, Builtin):
            if f.tag == "exp":
                v = np.exp(z)
            elif f.tag == "sin":
                v = np.sin(z)
            elif f.tag == "cos":
                v = np.cos(z)
            else:
                v = z * np.exp(z)
        elif isinstance(f, Compose):
            v = _eval(f.outer, _eval(f.inner, z))
        elif isinstance(f, Iterate):
            v = z
            for _ in range(f.count):
                v = _eval(f.base, v)
        else:
            raise TypeError(f"not a function expression: {f!r}")
    _check_finite(v, z)
    return v


def evaluate(f, z):
    """Value of ``f`` at ``z`` (scalar or array)."""
    arr, scalar = _prepare(z)
    return _finish(_eval(f, arr), scalar)


@dataclass(frozen=True)
class Jet:
    value: complex
    derivative: complex


def _jet(f, z):
    with np.errstate(over="ignore", invalid="ignore"):
        if isinstance(f, (Polynomial, Series)):
            _check_trust(f, z)
            v = _horner(f.coeffs, z)
            d = _horner(_deriv_coeffs(f.coeffs), z)
        elif isinstance(f, Builtin):
            if f.tag == "exp":
                v = np.exp(z)
                d = v
            elif f.tag == "sin":
                v, d = np.sin(z), np.cos(z)
            elif f.tag == "cos":
                v, d = np.cos(z), -np.sin(z)
            else:
                e = np.exp(z)
                v, d = z * e, (1 + z) * e
        elif isinstance(f, Compose):
            vi, di = _jet(f.inner, z)
            vo, do = _jet(f.outer, vi)
            v, d = vo, do * di
        elif isinstance(f, Iterate):
            v, d = z, np.ones_like(z)
            for _ in range(f.count):
                v, dk = _jet(f.base, v)
                d = dk * d
        else:
            raise TypeError(f"not a function expression: {f!r}")
    _check_finite(v, z)
    _check_finite(d, z, "derivative")
    return v, d


def eval_jet(f, z):
    """Value and derivative of ``f`` at ``z``, by forward chain rule."""
    arr, scalar = _prepare(z)
    v, d = _jet(f, arr)
    if scalar:
        return Jet(complex(v), complex(d))
    return Jet(v, d)


@dataclass(frozen=True)
class LogJet:
    """``f = exp(log_abs) * phase`` and ``dlog = f'/f``."""

    log_abs: object
    phase: object
    dlog: object

    def value(self):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.log_abs) * self.phase

    def derivative_log_abs(self):
        with np.errstate(divide="ignore"):
            return self.log_abs + np.log(np.abs(self.dlog))


def _polar(v):
    a = np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(a)
        ph = np.where(a > 0, v / np.where(a > 0, a, 1.0), 1.0 + 0j)
    return L, ph


def _poly_logjet(coeffs, z):
    d = len(coeffs) - 1
    dc = _deriv_coeffs(coeffs)
    small = np.abs(z) <= 1.0
    L = np.empty(z.shape)
    ph = np.empty(z.shape, dtype=complex)
    dl = np.empty(z.shape, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if np.any(small):
            zs = z[small]
            v = _horner(coeffs, zs)
            L[small], ph[small] = _polar(v)
            dl[small] = _horner(dc, zs) / v
        big = ~small
        if np.any(big):
            zb = z[big]
            u = 1.0 / zb
            # p(z) = z**d * P(1/z) with P the reversed polynomial
            rev = coeffs[::-1]
            drev = tuple((d - j) * coeffs[d - j] for j in range(d + 1))
            P = _horner(rev, u)
            Q = _horner(drev, u)
            Lp, php = _polar(P)
            L[big] = d * np.log(np.abs(zb)) + Lp
            ph[big] = np.exp(1j * d * np.angle(zb)) * php
            dl[big] = Q / (zb * P)
    return L, ph, dl


def _trig_logjet(tag, z):
    L = np.empty(z.shape)
    ph = np.empty(z.shape, dtype=complex)
    dl = np.empty(z.shape, dtype=complex)
    direct = np.abs(z.imag) < _DIRECT_TRIG_LIMIT
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.any(direct):
            zd = z[direct]
            s, c = np.sin(zd), np.cos(zd)
            if tag == "sin":
                L[direct], ph[direct] = _polar(s)
                dl[direct] = c / s
            else:
                L[direct], ph[direct] = _polar(c)
                dl[direct] = -s / c
        far = ~direct
        if np.any(far):
            zf = z[far]
            m = np.abs(zf.imag)
            A = np.exp(1j * zf - m)
            B = np.exp(-1j * zf - m)
            if tag == "sin":
                core = (A - B) / 2j
                dl[far] = 1j * (A + B) / (A - B)
            else:
                core = (A + B) / 2
                dl[far] = 1j * (A - B) / (A + B)
            Lc, phc = _polar(core)
            L[far] = m + Lc
            ph[far] = phc
    return L, ph, dl


def _logjet(f, z):
    if isinstance(f, (Polynomial, Series)):
        _check_trust(f, z)
        return _poly_logjet(f.coeffs, z)
    if isinstance(f, Builtin):
        if f.tag == "exp":
            return z.real.copy(), np.exp(1j * z.imag), np.ones_like(z)
        if f.tag == "zexp":
            with np.errstate(divide="ignore", invalid="ignore"):
                Lz, phz = _polar(z)
                return Lz + z.real, phz * np.exp(1j * z.imag), 1.0 + 1.0 / z
        return _trig_logjet(f.tag, z)
    if isinstance(f, (Compose, Iterate)):
        outer, inner = _unroll(f)
        if inner is None:
            return _logjet(outer, z)
        Li, phi, di = _logjet(inner, z)
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.exp(Li) * phi
        if np.any(np.isposinf(Li) | (np.abs(w) == np.inf)):
            raise ExtendedOverflow("inner value exceeds double range; use loglog_abs")
        Lo, pho, do = _logjet(outer, w)
        with np.errstate(invalid="ignore", over="ignore"):
            dl = do * di * w
        return Lo, pho, dl
    raise TypeError(f"not a function expression: {f!r}")


def eval_logjet(f, z):
    """Log-scale jet ``(log|f|, f/|f|, f'/f)`` at ``z``."""
    arr, scalar = _prepare(z)
    L, ph, dl = _logjet(f, arr)
    if scalar:
        return LogJet(float(L), complex(ph), complex(dl))
    return LogJet(L, ph, dl)


def log_abs(f, z):
    """``log|f(z)|`` (``-inf`` at zeros); overflow-free in the outer node."""
    arr, scalar = _prepare(z)
    L = _logjet(f, arr)[0]
    return float(L) if scalar else L


def loglog_abs(f, z):
    """``log(log|f(z)|)``, or ``-inf`` where ``|f(z)| <= 1``.

    When the outer node is ``exp`` or ``zexp`` only the inner value needs to
    be representable in log scale, so this reaches one level further than
    :func:`log_abs`.
    """
    arr, scalar = _prepare(z)
    outer, inner = _unroll(f)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if inner is not None and isinstance(outer, Builtin) and outer.tag in ("exp", "zexp"):
            Li, phi, _ = _logjet(inner, arr)
            cos = phi.real
            # Re(inner) = exp(Li) * cos
            out = np.where(cos > 0, Li + np.log(np.where(cos > 0, cos, 1.0)), -np.inf)
            if outer.tag == "zexp":
                # log|w e^w| = Li + Re w = Re w * (1 + Li / Re w)
                rew_log = out
                corr = np.log1p(Li * np.exp(-np.where(np.isfinite(rew_log), rew_log, 0.0)))
                out = np.where(np.isfinite(rew_log), rew_log + corr, -np.inf)
                out = np.where(np.isnan(out), -np.inf, out)
        else:
            L = _logjet(f, arr)[0]
            out = np.where(L > 0, np.log(np.where(L > 0, L, 1.0)), -np.inf)
    return float(out) if scalar else out


# --------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class Orbit:
    """``points[k] = f^k(points[0])``; ``multiplier`` is ``(f^n)'(points[0])``."""

    points: tuple
    multiplier: ExtendedComplex


def orbit(f, z, n):
    """Forward orbit of length ``n`` with the cumulative multiplier."""
    if n < 1:
        raise ValueError("n must be positive")
    pts = [complex(z)]
    log_m, phase = 0.0, 1.0 + 0j
    for k in range(n):
        jet = eval_logjet(f, pts[-1])
        nxt = jet.value()
        if not np.isfinite(nxt):
            raise ExtendedOverflow(f"orbit escapes the double range at index {k + 1}", index=k + 1)
        pts.append(complex(nxt))
        dphase = jet.dlog / abs(jet.dlog) if jet.dlog != 0 else 1.0 + 0j
        log_m += jet.derivative_log_abs()
        phase *= jet.phase * dphase
        phase /= abs(phase)
    return Orbit(tuple(pts), ExtendedComplex(float(log_m), phase))


# --------------------------------------------------------------------------
# growth bounds


def _safe_exp(x):
    return math.exp(x) if x < 709.78 else math.inf


def _poly_log_sum(coeffs, log_r):
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(np.asarray(coeffs)))
    terms = la + np.arange(len(coeffs)) * log_r
    m = np.max(terms)
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.sum(np.exp(terms - m))))


def log_max_upper(f, log_r):
    """Upper bound for ``log M(r, f)`` given ``log r``.

    Exact for ``exp`` and for compositions of functions with nonnegative
    Taylor coefficients; uses ``M(r, f o g) <= M(M(r, g), f)`` otherwise.
    """
    if isinstance(f, Series) and _safe_exp(log_r) > f.trust_radius:
        raise SeriesOutOfTrust("radius exceeds the series trust radius")
    if isinstance(f, (Polynomial, Series)):
        return _poly_log_sum(f.coeffs, log_r)
    if isinstance(f, Builtin):
        r = _safe_exp(log_r)
        return log_r + r if f.tag == "zexp" else r
    outer, inner = _unroll(f)
    if inner is None:
        return log_max_upper(outer, log_r)
    return log_max_upper(outer, log_max_upper(inner, log_r))


def loglog_max_upper(f, log_r):
    """Upper bound for ``log log M(r, f)``; ``-inf`` when ``M(r, f) <= 1``."""
    if isinstance(f, Builtin):
        if f.tag == "zexp":
            r = _safe_exp(log_r)
            if math.isinf(r):
                return log_r
            s = log_r + r
            return math.log(s) if s > 0 else -math.inf
        return log_r
    if isinstance(f, (Polynomial, Series)):
        L = log_max_upper(f, log_r)
        return math.log(L) if L > 0 else -math.inf
    outer, inner = _unroll(f)
    if inner is None:
        return loglog_max_upper(outer, log_r)
    inner_log = log_max_upper(inner, log_r)
    if math.isinf(inner_log) and inner_log > 0:
        raise ExtendedOverflow("log M of the inner function exceeds the extended range")
    return loglog_max_upper(outer, inner_log)


def oscillation_index(f, r):
    """Rough local degree of ``f`` on ``|z| = r`` (``r |f'/f|`` near the maximum).

    Polynomials give their degree, series their central index and the exp-type
    builtins ``r``; compositions multiply.
    """
    if isinstance(f, Polynomial):
        return float(f.degree)
    if isinstance(f, Series):
        la = f.log_abs_coeffs
        if r <= 0:
            return 0.0
        terms = la + np.arange(len(la)) * math.log(r)
        return float(np.max(np.flatnonzero(terms >= np.max(terms))))
    if isinstance(f, Builtin):
        return r + 1.0 if f.tag == "zexp" else float(r)
    outer, inner = _unroll(f)
    if inner is None:
        return oscillation_index(outer, r)
    lm = log_max_upper(inner, math.log(r)) if r > 0 else -math.inf
    return oscillation_index(outer, _safe_exp(lm)) * oscillation_index(inner, r)


# --------------------------------------------------------------------------
# text serialization

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


def parse_complex(text):
    """Parse ``a``, ``bi``, ``a+bi`` or ``a-bi`` (``j`` is accepted for ``i``)."""
    s = text.strip().replace(" ", "").replace("I", "i").replace("J", "j").replace("i", "j")
    if not s:
        raise ValueError("empty complex literal")
    if s in ("j", "+j"):
        return 1j
    if s == "-j":
        return -1j
    s = re.sub(r"(^|[+-])j", r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError as exc:
        raise ValueError(f"bad complex literal {text!r}") from exc


def _fmt_real(x):
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def format_complex(z):
    z = complex(z)
    re_s = _fmt_real(z.real)
    if z.imag == 0:
        return re_s
    im_s = _fmt_real(z.imag)
    if z.real == 0:
        return f"{im_s}i"
    sign = "" if im_s.startswith("-") else "+"
    return f"{re_s}{sign}{im_s}i"


class _Parser:
    def __init__(self, text):
        self.s = text.replace(" ", "")
        self.i = 0

    def error(self, msg):
        raise ValueError(f"{msg} at position {self.i} in {self.s!r}")

    def peek_word(self):
        m = re.match(r"[a-z]+", self.s[self.i:])
        return m.group(0) if m else ""

    def expect(self, ch):
        if not self.s.startswith(ch, self.i):
            self.error(f"expected {ch!r}")
        self.i += len(ch)

    def coeff_list(self):
        self.expect("[")
        end = self.s.find("]", self.i)
        if end < 0:
            self.error("unterminated coefficient list")
        body = self.s[self.i:end]
        self.i = end + 1
        if not body:
            self.error("empty coefficient list")
        return [parse_complex(t) for t in body.split(",")]

    def expr(self):
        word = self.peek_word()
        self.i += len(word)
        if word in BUILTIN_TAGS:
            return Builtin(word)
        if word == "poly":
            return Polynomial(self.coeff_list())
        if word == "series":
            return Series(self.coeff_list())
        if word == "iter":
            self.expect("(")
            base = self.expr()
            self.expect(",")
            m = re.match(r"\d+", self.s[self.i:])
            if not m:
                self.error("expected iterate count")
            self.i += len(m.group(0))
            self.expect(")")
            return Iterate(base, int(m.group(0)))
        if word == "comp":
            self.expect("(")
            outer = self.expr()
            self.expect(",")
            inner = self.expr()
            self.expect(")")
            return Compose(outer, inner)
        self.error(f"unknown function {word!r}")

    def parse(self):
        e = self.expr()
        if self.i != len(self.s):
            self.error("trailing input")
        return e


def parse_expr(text):
    """Parse the text form, e.g. ``iter(exp,2)`` or ``comp(exp,poly[0,1,1])``."""
    return _Parser(text).parse()


def format_expr(f):
    if isinstance(f, Builtin):
        return f.tag
    if isinstance(f, Polynomial):
        return "poly[" + ",".join(format_complex(c) for c in f.coeffs) + "]"
    if isinstance(f, Series):
        return "series[" + ",".join(format_complex(c) for c in f.coeffs) + "]"
    if isinstance(f, Iterate):
        return f"iter({format_expr(f.base)},{f.count})"
    if isinstance(f, Compose):
        return f"comp({format_expr(f.outer)},{format_expr(f.inner)})"
    raise TypeError(f"not a function expression: {f!r}")
