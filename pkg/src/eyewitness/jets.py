"""Truncated Taylor series ("jets") in one real variable.

A jet of order ``k`` stores the coefficients ``c_0..c_k`` of
``f(x0 + h) = sum_j c_j h^j + O(h^(k+1))``. Products and the elementary
functions below are exact to that order, so the ``j``-th derivative at ``x0``
is simply ``j! * c_j``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["JetValue", "variable", "constant"]


class JetValue:
    __slots__ = ("coefficients",)
    __array_priority__ = 1000  # make ``ndarray * JetValue`` defer to us

    def __init__(self, coefficients):
        c = np.array(coefficients, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        self.coefficients = c

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def _lift(self, other) -> JetValue:
        if isinstance(other, JetValue):
            if other.order != self.order:
                raise ValueError(f"jet orders differ: {self.order} vs {other.order}")
            return other
        c = np.zeros_like(self.coefficients)
        c[0] = other
        return JetValue(c)

    def __add__(self, other):
        return JetValue(self.coefficients + self._lift(other).coefficients)

    __radd__ = __add__

    def __neg__(self):
        return JetValue(-self.coefficients)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, JetValue):
            return JetValue(self.coefficients * other)
        other = self._lift(other)
        k = self.order + 1
        return JetValue(np.convolve(self.coefficients, other.coefficients)[:k])

    __rmul__ = __mul__

    def reciprocal(self) -> JetValue:
        a = self.coefficients
        if a[0] == 0:
            raise ZeroDivisionError("jet with zero constant term has no reciprocal")
        c = np.zeros_like(a)
        c[0] = 1.0 / a[0]
        for k in range(1, a.size):
            c[k] = -np.dot(a[1 : k + 1], c[k - 1 :: -1][:k]) / a[0]
        return JetValue(c)

    def __truediv__(self, other):
        if not isinstance(other, JetValue):
            return JetValue(self.coefficients / other)
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def exp(self) -> JetValue:
        a = self.coefficients
        b = np.zeros_like(a)
        b[0] = np.exp(a[0])
        j = np.arange(a.size)
        for k in range(1, a.size):
            b[k] = np.dot(j[1 : k + 1] * a[1 : k + 1], b[k - 1 :: -1][:k]) / k
        return JetValue(b)

    def derivative(self, j: int) -> complex:
        """``j``-th derivative at the expansion point."""
        return self.coefficients[j] * math.factorial(j)

    def real(self) -> JetValue:
        return JetValue(self.coefficients.real)

    def __repr__(self):
        return f"JetValue({np.array2string(self.coefficients, precision=6)})"


def variable(x0, order: int) -> JetValue:
    """The identity function ``x`` expanded around ``x0``."""
    c = np.zeros(order + 1, dtype=complex)
    c[0] = x0
    if order >= 1:
        c[1] = 1.0
    return JetValue(c)


def constant(value, order: int) -> JetValue:
    c = np.zeros(order + 1, dtype=complex)
    c[0] = value
    return JetValue(c)
