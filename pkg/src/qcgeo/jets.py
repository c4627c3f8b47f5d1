"""Truncated order-3 multivariate jet arithmetic.

A :class:`Jet3` carries a scalar value together with all coordinate partial
derivatives up to third order, propagated exactly (to roundoff) through
arithmetic and elementary functions.  No truncation error is involved: this
is Taylor-mode forward differentiation, not finite differencing.

All component arrays may carry leading batch axes, so one jet object can
hold the derivatives of a field at many points at once; every operation
broadcasts over those axes.  ``second`` and ``third`` are kept fully
symmetric by construction.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = ["Jet3", "jet_constant", "jet_variable", "UNARY_FUNCTIONS"]

# below this argument the [0,1] mollifier and its jets are below 1e-80
_BUMP_CUT = 0.005


class Jet3:
    """Value plus symmetric derivative tensors of orders 1..3 in n variables."""

    __slots__ = ("n", "value", "first", "second", "third")

    def __init__(self, n: int, value, first, second, third):
        self.n = n
        self.value = value
        self.first = first
        self.second = second
        self.third = third

    @property
    def batch_shape(self):
        return np.shape(self.value)

    def __repr__(self):
        return f"Jet3(n={self.n}, value={self.value!r})"

    # -- ring operations -----------------------------------------------------

    def _coerce(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            return other
        return jet_constant(float(other), self.n, self.batch_shape)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet3(self.n, self.value + o.value, self.first + o.first,
                    self.second + o.second, self.third + o.third)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet3(self.n, self.value - o.value, self.first - o.first,
                    self.second - o.second, self.third - o.third)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __neg__(self):
        return Jet3(self.n, -self.value, -self.first, -self.second, -self.third)

    def __mul__(self, other):
        o = self._coerce(other)
        a0 = self.value[..., None]
        b0 = o.value[..., None]
        first = self.first * b0 + o.first * a0
        second = (self.second * b0[..., None] + o.second * a0[..., None]
                  + _outer(self.first, o.first) + _outer(o.first, self.first))
        third = (self.third * b0[..., None, None]
                 + o.third * a0[..., None, None]
                 + _sym3(self.second, o.first) + _sym3(o.second, self.first))
        return Jet3(self.n, self.value * o.value, first, second, third)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * _reciprocal(o)

    def __rtruediv__(self, other):
        return self._coerce(other) * _reciprocal(self)

    # -- powers ----------------------------------------------------------------

    def pow_const(self, exponent: float) -> "Jet3":
        """Raise to a constant exponent.

        Integer exponents work for any base (by repeated multiplication);
        non-integer exponents are the exp(c*log(base)) lowering and require a
        strictly positive base.
        """
        if float(exponent) == int(exponent):
            return self._pow_int(int(exponent))
        if np.any(self.value <= 0.0):
            raise DomainError(
                f"non-integer power of nonpositive base (exponent {exponent})")
        c = float(exponent)
        x = self.value
        f0 = x ** c
        f1 = c * x ** (c - 1.0)
        f2 = c * (c - 1.0) * x ** (c - 2.0)
        f3 = c * (c - 1.0) * (c - 2.0) * x ** (c - 3.0)
        return self._compose(f0, f1, f2, f3)

    def _pow_int(self, m: int) -> "Jet3":
        if m == 0:
            return jet_constant(1.0, self.n, self.batch_shape)
        if m < 0:
            return _reciprocal(self._pow_int(-m))
        result = None
        base = self
        k = m
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- composition with a univariate function --------------------------------

    def _compose(self, f0, f1, f2, f3) -> "Jet3":
        """Chain rule for f(self), given f and its first three derivatives
        evaluated at ``self.value``."""
        a1, a2, a3 = self.first, self.second, self.third
        first = f1[..., None] * a1
        second = f1[..., None, None] * a2 + f2[..., None, None] * _outer(a1, a1)
        third = (f1[..., None, None, None] * a3
                 + f2[..., None, None, None] * _sym3(a2, a1)
                 + f3[..., None, None, None] * _outer3(a1))
        return Jet3(self.n, f0, first, second, third)


def _outer(u, v):
    return u[..., :, None] * v[..., None, :]


def _outer3(u):
    return u[..., :, None, None] * u[..., None, :, None] * u[..., None, None, :]


def _sym3(m, w):
    """Symmetric combination m_ij w_k + m_ik w_j + m_jk w_i."""
    t = m[..., :, :, None] * w[..., None, None, :]
    return t + t.swapaxes(-1, -2) + np.moveaxis(t, -1, -3)


def jet_constant(value: float, n: int, batch_shape=()) -> Jet3:
    v = np.full(batch_shape, float(value))
    return Jet3(n, v,
                np.zeros(batch_shape + (n,)),
                np.zeros(batch_shape + (n, n)),
                np.zeros(batch_shape + (n, n, n)))


def jet_variable(points: np.ndarray, index: int) -> Jet3:
    """Seed jet for coordinate ``index``; ``points`` has shape (..., n)."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    batch = points.shape[:-1]
    first = np.zeros(batch + (n,))
    first[..., index] = 1.0
    return Jet3(n, points[..., index].copy(), first,
                np.zeros(batch + (n, n)), np.zeros(batch + (n, n, n)))


def _reciprocal(a: Jet3) -> Jet3:
    if np.any(a.value == 0.0):
        raise DomainError("division by zero")
    x = a.value
    inv = 1.0 / x
    return a._compose(inv, -inv ** 2, 2.0 * inv ** 3, -6.0 * inv ** 4)


# -- elementary functions -----------------------------------------------------

def _j_sin(a):
    s, c = np.sin(a.value), np.cos(a.value)
    return a._compose(s, c, -s, -c)


def _j_cos(a):
    s, c = np.sin(a.value), np.cos(a.value)
    return a._compose(c, -s, -c, s)


def _j_sinh(a):
    s, c = np.sinh(a.value), np.cosh(a.value)
    return a._compose(s, c, s, c)


def _j_cosh(a):
    s, c = np.sinh(a.value), np.cosh(a.value)
    return a._compose(c, s, c, s)


def _j_tanh(a):
    t = np.tanh(a.value)
    u = 1.0 - t ** 2
    return a._compose(t, u, -2.0 * t * u, -2.0 * u * (1.0 - 3.0 * t ** 2))


def _j_exp(a):
    e = np.exp(a.value)
    return a._compose(e, e, e, e)


def _j_log(a):
    if np.any(a.value <= 0.0):
        raise DomainError("log of a nonpositive value")
    x = a.value
    inv = 1.0 / x
    return a._compose(np.log(x), inv, -inv ** 2, 2.0 * inv ** 3)


def _j_sqrt(a):
    if np.any(a.value <= 0.0):
        raise DomainError("sqrt of a nonpositive value (jets need base > 0)")
    x = a.value
    r = np.sqrt(x)
    return a._compose(r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x))


def _j_atan(a):
    x = a.value
    d = 1.0 / (1.0 + x ** 2)
    return a._compose(np.arctan(x), d, -2.0 * x * d ** 2,
                      (6.0 * x ** 2 - 2.0) * d ** 3)


def _mollifier_coeffs(t: np.ndarray):
    """Value and first three derivatives of the flat [0,1] smooth step
    s(t) = e(t) / (e(t) + e(1-t)), e(t) = exp(-1/t), on the open interval.

    Derivatives are obtained by running the defining expression through
    univariate jet arithmetic, so they are exact to roundoff.
    """
    seed = Jet3(1, t, np.ones(t.shape + (1,)),
                np.zeros(t.shape + (1, 1)), np.zeros(t.shape + (1, 1, 1)))
    e_lo = _j_exp(-_reciprocal(seed))
    e_hi = _j_exp(-_reciprocal(1.0 - seed))
    s = e_lo / (e_lo + e_hi)
    return (s.value, s.first[..., 0], s.second[..., 0, 0],
            s.third[..., 0, 0, 0])


def _j_bump01(a):
    """Infinitely flat smooth step: 0 for t <= 0, 1 for t >= 1, with all
    derivatives vanishing at both endpoints."""
    t = np.asarray(a.value, dtype=float)
    shape = t.shape
    f0 = np.where(t >= 1.0 - _BUMP_CUT, 1.0, 0.0)
    f1 = np.zeros(shape)
    f2 = np.zeros(shape)
    f3 = np.zeros(shape)
    interior = (t > _BUMP_CUT) & (t < 1.0 - _BUMP_CUT)
    if np.any(interior):
        v0, v1, v2, v3 = _mollifier_coeffs(t[interior])
        f0 = np.asarray(f0)
        f0[interior] = v0
        f1[interior] = v1
        f2[interior] = v2
        f3[interior] = v3
    return a._compose(f0, f1, f2, f3)


UNARY_FUNCTIONS = {
    "sin": _j_sin,
    "cos": _j_cos,
    "sinh": _j_sinh,
    "cosh": _j_cosh,
    "tanh": _j_tanh,
    "exp": _j_exp,
    "log": _j_log,
    "sqrt": _j_sqrt,
    "atan": _j_atan,
    "bump01": _j_bump01,
}

# plain float implementations, used for value-only evaluation
VALUE_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": lambda x: _checked(np.log, x, "log of a nonpositive value", x <= 0),
    "sqrt": lambda x: _checked(np.sqrt, x, "sqrt of a negative value", x < 0),
    "atan": np.arctan,
    "bump01": lambda x: _bump01_value(x),
}


def _checked(fn, x, message, bad):
    if np.any(bad):
        raise DomainError(message)
    return fn(x)


def _bump01_value(t):
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0 - _BUMP_CUT, 1.0, 0.0)
    interior = (t > _BUMP_CUT) & (t < 1.0 - _BUMP_CUT)
    if np.any(interior):
        ti = t[interior]
        e_lo = np.exp(-1.0 / ti)
        e_hi = np.exp(-1.0 / (1.0 - ti))
        out = np.asarray(out)
        out[interior] = e_lo / (e_lo + e_hi)
    return out
