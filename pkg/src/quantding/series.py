"""Truncated bivariate Taylor series in (w - w0, wbar - wbar0).

A ``Series`` of order ``m`` stores the coefficients ``c[i, j]`` of
``a**i * b**j`` for ``i, j <= m`` where ``a = w - w0`` and ``b = wbar - wbar0``
are treated as independent variables.  Truncating by bidegree is closed under
multiplication, so this is forward-mode differentiation in the Wirtinger
derivatives: ``c[1, 0] = d/dw``, ``c[0, 1] = d/dwbar``, ``c[1, 1] = d2/dw dwbar``.

Trailing axes of ``c`` are batch axes (one entry per quadrature node).
"""

from __future__ import annotations

import math

import numpy as np


class Series:
    __slots__ = ("c",)

    def __init__(self, c):
        self.c = np.asarray(c, dtype=complex)

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value, order, shape=None):
        value = np.asarray(value, dtype=complex)
        if shape is None:
            shape = value.shape
        c = np.zeros((order + 1, order + 1) + tuple(shape), dtype=complex)
        c[0, 0] = value
        return cls(c)

    @classmethod
    def variable(cls, w0, order, conjugate=False):
        """The coordinate ``w`` (or ``wbar``) expanded about ``w0``."""
        w0 = np.asarray(w0, dtype=complex)
        c = np.zeros((order + 1, order + 1) + w0.shape, dtype=complex)
        if conjugate:
            c[0, 0] = np.conj(w0)
            if order >= 1:
                c[0, 1] = 1.0
        else:
            c[0, 0] = w0
            if order >= 1:
                c[1, 0] = 1.0
        return cls(c)

    # accessors ------------------------------------------------------------

    @property
    def order(self):
        return self.c.shape[0] - 1

    @property
    def shape(self):
        return self.c.shape[2:]

    @property
    def value(self):
        return self.c[0, 0]

    @property
    def d_w(self):
        return self.c[1, 0]

    @property
    def d_wbar(self):
        return self.c[0, 1]

    @property
    def d_wwbar(self):
        return self.c[1, 1]

    def truncate(self, order):
        return Series(self.c[: order + 1, : order + 1])

    def conj(self):
        """Series of the complex conjugate function."""
        return Series(np.conj(np.swapaxes(self.c, 0, 1)))

    def ddbar(self):
        """Series of d2/dw dwbar, one order lower."""
        m = self.order
        if m < 1:
            raise ValueError("need order >= 1 to differentiate")
        i = np.arange(1, m + 1)
        scale = (i[:, None] * i[None, :]).reshape((m, m) + (1,) * len(self.shape))
        return Series(self.c[1:, 1:] * scale)

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Series):
            return other
        return Series.constant(np.broadcast_to(np.asarray(other, dtype=complex), self.shape), self.order)

    def __add__(self, other):
        if isinstance(other, Series):
            return Series(self.c + other.c)
        out = self.c.copy()
        out[0, 0] = out[0, 0] + other
        return Series(out)

    __radd__ = __add__

    def __neg__(self):
        return Series(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Series):
            other = np.asarray(other)
            return Series(self.c * other)
        a, b = self.c, other.c
        m = self.order
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
        for i1 in range(m + 1):
            for j1 in range(m + 1):
                x = a[i1, j1]
                for i2 in range(m + 1 - i1):
                    for j2 in range(m + 1 - j1):
                        out[i1 + i2, j1 + j2] += x * b[i2, j2]
        return Series(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Series):
            return self * other.reciprocal()
        return Series(self.c / np.asarray(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)) or n < 0:
            return self.power(n)
        result = Series.constant(np.ones(self.shape), self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # analytic functions ---------------------------------------------------

    def _compose(self, taylor):
        """Evaluate sum_n taylor[n] * (self - self.value)**n."""
        delta = Series(self.c.copy())
        delta.c[0, 0] = 0.0
        out = Series.constant(taylor[0], self.order, self.shape)
        power = None
        for coeff in taylor[1:]:
            power = delta if power is None else power * delta
            out = out + power * coeff
        return out

    def _nterms(self):
        return 2 * self.order + 1

    def reciprocal(self):
        v = self.value
        if np.any(v == 0):
            raise ZeroDivisionError("series with vanishing constant term")
        return self._compose([(-1.0) ** n / v ** (n + 1) for n in range(self._nterms())])

    def log(self):
        v = self.value
        taylor = [np.log(v)]
        taylor += [(-1.0) ** (n + 1) / (n * v**n) for n in range(1, self._nterms())]
        return self._compose(taylor)

    def exp(self):
        e = np.exp(self.value)
        return self._compose([e / math.factorial(n) for n in range(self._nterms())])

    def power(self, alpha):
        v = self.value
        taylor = []
        coeff = 1.0
        for n in range(self._nterms()):
            taylor.append(coeff * v ** (alpha - n))
            coeff *= (alpha - n) / (n + 1)
        return self._compose(taylor)


def holomorphic_product(f, g, order):
    """Series of ``sum_i f_i(w) * conj(g_i(w))`` from holomorphic Taylor data.

    ``f`` and ``g`` have shape ``(order + 1, *batch, N)`` holding the
    coefficients of ``a**i`` of N holomorphic functions.  The result is the
    bivariate series of the sesquilinear pairing summed over the last axis.
    """
    c = np.einsum("i...n,j...n->ij...", f[: order + 1], np.conj(g[: order + 1]))
    return Series(c)
