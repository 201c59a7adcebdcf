"""
Dual numbers - forward-mode differentiation w.r.t. time

A Dual carries (value, tangent) where tangent = d value / dt. Values may be
Python floats or numpy arrays; arrays are treated elementwise, except for
`affine`, which applies a weight matrix to row vectors.
"""

from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("value", "tangent")

    def __init__(self, value, tangent=0.0):
        self.value = value
        self.tangent = tangent

    @classmethod
    def variable(cls, value):
        """Independent variable: tangent 1"""
        return cls(value, np.ones_like(value) if isinstance(value, np.ndarray) else 1.0)

    @staticmethod
    def _lift(other) -> "Dual":
        return other if isinstance(other, Dual) else Dual(other, 0.0)

    def __add__(self, other):
        other = self._lift(other)
        return Dual(self.value + other.value, self.tangent + other.tangent)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Dual(self.value - other.value, self.tangent - other.tangent)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Dual(-self.value, -self.tangent)

    def __mul__(self, other):
        other = self._lift(other)
        return Dual(self.value * other.value, self.value * other.tangent + self.tangent * other.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        value = self.value / other.value
        return Dual(value, (self.tangent - value * other.tangent) / other.value)

    def tanh(self) -> "Dual":
        th = np.tanh(self.value)
        return Dual(th, (1.0 - th * th) * self.tangent)

    def affine(self, weight: np.ndarray, bias: np.ndarray | None = None) -> "Dual":
        """Row vectors (..., in) -> (..., out): value @ W.T + b, tangent @ W.T"""
        value = self.value @ weight.T
        if bias is not None:
            value = value + bias
        return Dual(value, self.tangent @ weight.T)

    def __repr__(self) -> str:
        return f"Dual(value={self.value!r}, tangent={self.tangent!r})"
