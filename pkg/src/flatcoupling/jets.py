"""Truncated Taylor series ("jets") in a single time variable.

A :class:`Jet` of order ``d`` stores the normalized Taylor coefficients
``c_k = s^(k)(t0) / k!`` for ``k = 0..d`` of some signal ``s``.  Arithmetic and
the elementary functions below act on those coefficients exactly up to the
truncation order, which is how time derivatives are pushed through the
nonlinear maps of the flatness recursion.

The module-level functions (:func:`sin`, :func:`exp`, :func:`erf`, ...) accept
either plain floats or jets, so model code can be written once and evaluated
on both.
"""

from __future__ import annotations

import math
from numbers import Real

import numpy as np

from .errors import SingularJetError

__all__ = [
    "Jet",
    "atan2",
    "cos",
    "erf",
    "erf_diff",
    "erf_diff_scalar",
    "erf_scalar",
    "erfc_scalar",
    "exp",
    "reciprocal",
    "sin",
    "sqrt",
    "value_of",
]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class Jet:
    """Truncated Taylor expansion ``c_0 + c_1 t + ... + c_d t^d``."""

    __slots__ = ("coeffs",)
    __array_priority__ = 1000  # make numpy scalars defer to Jet operators

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("a jet needs a non-empty 1-D coefficient vector")
        self.coeffs = c

    @classmethod
    def constant(cls, value, order):
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, value, order):
        """The jet of ``t -> value + t``."""
        c = np.zeros(order + 1)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivatives):
        """Build a jet from raw derivatives ``[s, s', s'', ...]``."""
        d = np.asarray(derivatives, dtype=float)
        return cls(d / _factorials(d.size))

    @property
    def order(self):
        return self.coeffs.size - 1

    @property
    def value(self):
        return float(self.coeffs[0])

    def derivatives(self):
        """Raw derivatives ``s^(k) = k! c_k``."""
        return self.coeffs * _factorials(self.coeffs.size)

    def truncate(self, order):
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.coeffs[: order + 1])

    def shift(self):
        """Time derivative; the result has one order less."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, self.coeffs.size)
        return Jet(k * self.coeffs[1:])

    def __repr__(self):
        return f"Jet({self.coeffs.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.all(self.coeffs == other.coeffs)
        )

    __hash__ = None

    # arithmetic -----------------------------------------------------------

    def __neg__(self):
        return Jet(-self.coeffs)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _common(self, other)
            return Jet(a + b)
        if isinstance(other, Real):
            c = self.coeffs.copy()
            c[0] += other
            return Jet(c)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = _common(self, other)
            return Jet(a - b)
        if isinstance(other, Real):
            c = self.coeffs.copy()
            c[0] -= other
            return Jet(c)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Real):
            c = -self.coeffs
            c[0] += other
            return Jet(c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = _common(self, other)
            return Jet(np.convolve(a, b)[: a.size])
        if isinstance(other, Real):
            return Jet(self.coeffs * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            a, b = _common(self, other)
            return Jet(_divide(a, b))
        if isinstance(other, Real):
            return Jet(self.coeffs / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Real):
            a = np.zeros_like(self.coeffs)
            a[0] = other
            return Jet(_divide(a, self.coeffs))
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = Jet.constant(1.0, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result


def _factorials(n):
    out = np.ones(n)
    for k in range(2, n):
        out[k] = out[k - 1] * k
    return out


def _common(a, b):
    """Coefficient arrays of two jets truncated to their common order."""
    ca, cb = a.coeffs, b.coeffs
    if ca.size != cb.size:
        n = min(ca.size, cb.size)
        return ca[:n], cb[:n]
    return ca, cb


def _divide(a, b):
    if b[0] == 0.0:
        raise SingularJetError("div", "denominator has zero constant term")
    c = np.empty_like(a)
    b0 = b[0]
    for k in range(a.size):
        acc = a[k]
        for j in range(1, k + 1):
            acc -= b[j] * c[k - j]
        c[k] = acc / b0
    return c


def value_of(x):
    """Constant term of a jet, or the float itself."""
    return x.value if isinstance(x, Jet) else float(x)


# scalar erf ----------------------------------------------------------------

def erf_scalar(x):
    """Error function of a float, absolute error below 1e-15 on the real line.

    Uses the everywhere-positive series
    ``erf(x) = 2/sqrt(pi) exp(-x^2) sum 2^n x^(2n+1) / (2n+1)!!`` for
    ``|x| < 3`` (no cancellation) and the Laplace continued fraction for
    ``erfc`` beyond that.
    """
    x = float(x)
    if math.isnan(x):
        return math.nan
    ax = abs(x)
    if ax < 3.0:
        x2 = x * x
        term = x
        total = x
        n = 0
        while abs(term) > 1e-17 * abs(total):
            n += 1
            term *= 2.0 * x2 / (2 * n + 1)
            total += term
        return _TWO_OVER_SQRT_PI * math.exp(-x2) * total
    return math.copysign(1.0 - _erfc_fraction(ax), x)


def _erfc_fraction(x):
    """erfc for ``x >= 1`` by the Laplace continued fraction (full precision)."""
    if x > 27.0:
        return 0.0
    terms = 200 if x < 2.0 else 80
    frac = x
    for n in range(terms, 0, -1):
        frac = x + 0.5 * n / frac
    return math.exp(-x * x) / (math.sqrt(math.pi) * frac)


def erfc_scalar(x):
    """Complementary error function with full relative precision for large ``x``."""
    x = float(x)
    if x < 1.0:
        return 1.0 - erf_scalar(x)
    return _erfc_fraction(x)


def erf_diff_scalar(a, b):
    """``erf(a) - erf(b)`` without cancellation when both lie in the same tail."""
    if a >= 1.0 and b >= 1.0:
        return erfc_scalar(b) - erfc_scalar(a)
    if a <= -1.0 and b <= -1.0:
        return erfc_scalar(-a) - erfc_scalar(-b)
    return erf_scalar(a) - erf_scalar(b)


# jet compositions -----------------------------------------------------------

def _integrate(rate, c0):
    """Coefficients of the jet whose derivative is ``rate`` and value is ``c0``."""
    out = np.empty(rate.size + 1)
    out[0] = c0
    out[1:] = rate / np.arange(1, rate.size + 1)
    return out


def _exp_jet(a):
    c = a.coeffs
    b = np.empty_like(c)
    b[0] = math.exp(c[0])
    for k in range(1, c.size):
        acc = 0.0
        for j in range(1, k + 1):
            acc += j * c[j] * b[k - j]
        b[k] = acc / k
    return Jet(b)


def _sincos_jet(a):
    c = a.coeffs
    s = np.empty_like(c)
    co = np.empty_like(c)
    s[0] = math.sin(c[0])
    co[0] = math.cos(c[0])
    for k in range(1, c.size):
        acc_s = 0.0
        acc_c = 0.0
        for j in range(1, k + 1):
            acc_s += j * c[j] * co[k - j]
            acc_c += j * c[j] * s[k - j]
        s[k] = acc_s / k
        co[k] = -acc_c / k
    return Jet(s), Jet(co)


def exp(x):
    if isinstance(x, Jet):
        return _exp_jet(x)
    return math.exp(x)


def sin(x):
    if isinstance(x, Jet):
        return _sincos_jet(x)[0]
    return math.sin(x)


def cos(x):
    if isinstance(x, Jet):
        return _sincos_jet(x)[1]
    return math.cos(x)


def sqrt(x):
    if isinstance(x, Jet):
        c = x.coeffs
        if not c[0] > 0.0:
            raise SingularJetError("sqrt", f"constant term {c[0]!r} is not positive")
        b = np.empty_like(c)
        b[0] = math.sqrt(c[0])
        for k in range(1, c.size):
            acc = c[k]
            for j in range(1, k):
                acc -= b[j] * b[k - j]
            b[k] = acc / (2.0 * b[0])
        return Jet(b)
    if x < 0.0:
        raise SingularJetError("sqrt", f"negative argument {x!r}")
    return math.sqrt(x)


def reciprocal(x):
    if isinstance(x, Jet):
        return 1.0 / x
    if x == 0.0:
        raise SingularJetError("reciprocal", "zero argument")
    return 1.0 / x


def erf(x):
    if isinstance(x, Jet):
        c = x.coeffs
        if c.size == 1:
            return Jet([erf_scalar(c[0])])
        # erf' = 2/sqrt(pi) exp(-a^2)
        g = _TWO_OVER_SQRT_PI * _exp_jet(-(x * x)).coeffs
        kc = np.arange(1, c.size) * c[1:]
        rate = np.convolve(kc, g)[: c.size - 1] / np.arange(1, c.size)
        out = np.empty_like(c)
        out[0] = erf_scalar(c[0])
        out[1:] = rate
        return Jet(out)
    return erf_scalar(x)


def erf_diff(a, b):
    """``erf(a) - erf(b)`` with a cancellation-free constant term."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return erf_diff_scalar(a, b)
    d = erf(a) - erf(b)
    coeffs = d.coeffs.copy()
    coeffs[0] = erf_diff_scalar(value_of(a), value_of(b))
    return Jet(coeffs)


def atan2(y, x):
    """Two-argument arctangent; the jet branch follows ``math.atan2`` at t=0."""
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        if x == 0.0 and y == 0.0:
            raise SingularJetError("atan2", "both arguments are zero")
        return math.atan2(y, x)
    if not isinstance(y, Jet):
        y = Jet.constant(y, x.order)
    if not isinstance(x, Jet):
        x = Jet.constant(x, y.order)
    if x.coeffs[0] == 0.0 and y.coeffs[0] == 0.0:
        raise SingularJetError("atan2", "both constant terms are zero")
    c0 = math.atan2(y.coeffs[0], x.coeffs[0])
    if min(x.order, y.order) == 0:
        return Jet([c0])
    rate = (x * y.shift() - y * x.shift()) / (x * x + y * y)
    return Jet(_integrate(rate.coeffs, c0))
