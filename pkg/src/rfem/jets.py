"""Truncated bivariate Taylor arithmetic up to total order 4.

A :class:`Jet4` holds the Taylor coefficients ``c[a, b] = d^{a+b} f /
(dx^a dy^b) / (a! b!)`` for ``a + b <= 4``, vectorised over an arbitrary batch
shape.  Elementary functions are applied by composing their univariate
Taylor series with the nilpotent part of the argument, which makes every
operation exact up to the truncation order.
"""
from __future__ import annotations

from math import factorial

import numpy as np

ORDER = 4
MULTI_INDICES = [(n - b, b) for n in range(ORDER + 1) for b in range(n + 1)]
INDEX = {mi: k for k, mi in enumerate(MULTI_INDICES)}
NCOEF = len(MULTI_INDICES)  # 15

_PRODUCT_TABLE = [
    (i, j, INDEX[(a1 + a2, b1 + b2)])
    for i, (a1, b1) in enumerate(MULTI_INDICES)
    for j, (a2, b2) in enumerate(MULTI_INDICES)
    if a1 + a2 + b1 + b2 <= ORDER
]


class Jet4:
    __slots__ = ("c",)
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)
        if self.c.shape[0] != NCOEF:
            raise ValueError(f"expected {NCOEF} coefficients along axis 0")

    # ------------------------------------------------------------ construction
    @classmethod
    def constant(cls, value, shape=()) -> "Jet4":
        value = np.broadcast_to(np.asarray(value, dtype=float), shape)
        c = np.zeros((NCOEF,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def variables(cls, x, y) -> tuple["Jet4", "Jet4"]:
        """Coordinate jets ``X, Y`` expanded about the points ``(x, y)``."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        cx = np.zeros((NCOEF,) + x.shape)
        cy = np.zeros((NCOEF,) + x.shape)
        cx[0], cx[INDEX[(1, 0)]] = x, 1.0
        cy[0], cy[INDEX[(0, 1)]] = y, 1.0
        return cls(cx), cls(cy)

    # -------------------------------------------------------------- accessors
    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def d(self, a: int, b: int) -> np.ndarray:
        """Partial derivative d^{a+b}/dx^a dy^b at the expansion point."""
        return self.c[INDEX[(a, b)]] * (factorial(a) * factorial(b))

    @property
    def gradient(self) -> np.ndarray:
        return np.stack([self.d(1, 0), self.d(0, 1)], axis=-1)

    @property
    def laplacian(self) -> np.ndarray:
        return self.d(2, 0) + self.d(0, 2)

    @property
    def bilaplacian(self) -> np.ndarray:
        return self.d(4, 0) + 2 * self.d(2, 2) + self.d(0, 4)

    # -------------------------------------------------------------- arithmetic
    def __add__(self, other):
        if isinstance(other, Jet4):
            return Jet4(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet4(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet4(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet4):
            return Jet4(self.c * np.asarray(other, dtype=float))
        shape = np.broadcast_shapes(self.c.shape[1:], other.c.shape[1:])
        out = np.zeros((NCOEF,) + shape)
        for i, j, k in _PRODUCT_TABLE:
            out[k] += self.c[i] * other.c[j]
        return Jet4(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet4):
            return Jet4(self.c / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet4.constant(1.0, self.c.shape[1:])
            for _ in range(int(p)):
                out = out * self
            return out
        return power(self, float(p))

    # ------------------------------------------------------------ composition
    def compose(self, derivs) -> "Jet4":
        """``f(self)`` given ``derivs[k] = f^(k)(value)`` for ``k = 0..4``."""
        h = Jet4(self.c.copy())
        h.c[0] = 0.0
        out = np.zeros_like(self.c)
        out[0] = derivs[0]
        hk = h
        for k in range(1, ORDER + 1):
            out = out + hk.c * (np.asarray(derivs[k]) / factorial(k))
            if k < ORDER:
                hk = hk * h
        return Jet4(out)

    def reciprocal(self) -> "Jet4":
        v = self.value
        if np.any(v == 0):
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        return self.compose([1 / v, -1 / v**2, 2 / v**3, -6 / v**4, 24 / v**5])


def sin(u: Jet4) -> Jet4:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.compose([s, c, -s, -c, s])


def cos(u: Jet4) -> Jet4:
    s, c = np.sin(u.value), np.cos(u.value)
    return u.compose([c, -s, -c, s, c])


def exp(u: Jet4) -> Jet4:
    e = np.exp(u.value)
    return u.compose([e] * 5)


def log(u: Jet4) -> Jet4:
    v = u.value
    if np.any(v <= 0):
        raise ValueError("log of a jet with non-positive value")
    return u.compose([np.log(v), 1 / v, -1 / v**2, 2 / v**3, -6 / v**4])


def power(u: Jet4, p: float) -> Jet4:
    """``u**p`` for real ``p``; non-integer powers need a positive base."""
    v = u.value
    if float(p).is_integer():
        return u ** int(p) if p >= 0 else (u ** int(-p)).reciprocal()
    if np.any(v <= 0):
        raise ValueError("non-integer power of a jet is only defined for positive base")
    derivs = []
    coef = 1.0
    for k in range(ORDER + 1):
        derivs.append(coef * v ** (p - k))
        coef *= p - k
    return u.compose(derivs)


def sqrt(u: Jet4) -> Jet4:
    return power(u, 0.5)


def atan2(y: Jet4, x: Jet4, branch_start: float | None = None) -> Jet4:
    """Polar angle of ``(x, y)``.

    The value is ``arctan2`` (optionally shifted into
    ``[branch_start, branch_start + 2 pi)``); higher coefficients come from
    ``atan(w)`` with ``w = (x0 y - y0 x) / (x0 x + y0 y)``, which vanishes at
    the expansion point.
    """
    x0, y0 = x.value, y.value
    if np.any((x0 == 0) & (y0 == 0)):
        raise ValueError("angle is undefined at the origin")
    theta0 = np.arctan2(y0, x0)
    if branch_start is not None:
        theta0 = branch_start + np.mod(theta0 - branch_start, 2 * np.pi)
    w = (y * x0 - x * y0) / (x * x0 + y * y0)
    w.c[0] = 0.0
    # atan(w) = w - w^3/3 + O(w^5)
    out = w - (w * w * w) * (1.0 / 3.0)
    out.c[0] = theta0
    return out
