"""Truncated Taylor jets along a radial grid, plus 4th-order finite differences.

A :class:`Jet` stores ``c[j] = (d/dr)^j F / j!`` at every node, so products,
quotients and elementary functions of jets are exact up to roundoff and
derivatives are a coefficient shift.  Trailing array axes broadcast, which
lets a batch of fields share one evaluation.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

# parity of a field at an axis: +1 even, -1 odd, None for a non-axis boundary
Parity = Optional[int]


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs)

    # construction
    @classmethod
    def variable(cls, r: np.ndarray, order: int) -> "Jet":
        c = np.zeros((order + 1,) + np.shape(r))
        c[0] = r
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, shape, order: int) -> "Jet":
        c = np.zeros((order + 1,) + tuple(shape), dtype=np.result_type(value, float))
        c[0] = value
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        fact = 1.0
        out = []
        for j, d in enumerate(derivs):
            if j:
                fact *= j
            out.append(np.asarray(d) / fact)
        return cls(np.stack(out))

    @classmethod
    def from_nodes(cls, values, h: float, order: int, parity=(1, 1)) -> "Jet":
        """Jet of nodal data; derivatives by repeated 4th-order differences."""
        values = np.asarray(values)
        derivs = [values]
        p = parity
        for _ in range(order):
            derivs.append(fd_derivative(derivs[-1], h, p))
            p = tuple(None if q is None else -q for q in p)
        return cls.from_derivatives(derivs)

    # basic properties
    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivative_values(self, j: int) -> np.ndarray:
        fact = 1.0
        for i in range(2, j + 1):
            fact *= i
        return self.c[j] * fact

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    def deriv(self) -> "Jet":
        """d/dr, one order lower."""
        K = self.order
        if K == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        scale = np.arange(1, K + 1, dtype=float).reshape((K,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * scale)

    # arithmetic
    @staticmethod
    def _coerce(a, b):
        if isinstance(b, Jet):
            K = min(a.order, b.order)
            return a.c[: K + 1], b.c[: K + 1], K
        return a.c, None, a.order

    def __add__(self, other):
        if isinstance(other, Jet):
            x, y, _ = Jet._coerce(self, other)
            with np.errstate(all="ignore"):
                return Jet(x + y)
        c = self.c.copy() if np.isscalar(other) else self.c.astype(np.result_type(self.c, other))
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        with np.errstate(all="ignore"):
            if isinstance(other, Jet):
                x, y, K = Jet._coerce(self, other)
                out = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=np.result_type(x, y))
                for j in range(K + 1):
                    acc = x[0] * y[j]
                    for i in range(1, j + 1):
                        acc = acc + x[i] * y[j - i]
                    out[j] = acc
                return Jet(out)
            return Jet(self.c * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        K = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        with np.errstate(all="ignore"):
            inv0 = 1.0 / a[0]
            out[0] = inv0
            for j in range(1, K + 1):
                acc = a[1] * out[j - 1]
                for i in range(2, j + 1):
                    acc = acc + a[i] * out[j - i]
                out[j] = -inv0 * acc
        return Jet(out)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        with np.errstate(all="ignore"):
            return Jet(self.c / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(1.0, self.c.shape[1:], self.order)
            base = self
            e = int(p)
            while e:
                if e & 1:
                    out = out * base
                base = base * base
                e >>= 1
            return out
        return self.power(float(p))

    def power(self, p: float) -> "Jet":
        """Real power via the J.C.P. Miller recurrence; needs a nonzero base value."""
        a = self.c
        K = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        with np.errstate(all="ignore"):
            out[0] = a[0] ** p
            inv0 = 1.0 / a[0]
            for j in range(1, K + 1):
                acc = 0.0
                for i in range(1, j + 1):
                    acc = acc + ((p + 1) * i - j) * a[i] * out[j - i]
                out[j] = acc * inv0 / j
        return Jet(out)

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def exp(self) -> "Jet":
        a = self.c
        K = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = np.exp(a[0])
        for j in range(1, K + 1):
            acc = 0.0
            for i in range(1, j + 1):
                acc = acc + i * a[i] * out[j - i]
            out[j] = acc / j
        return Jet(out)

    def log(self) -> "Jet":
        a = self.c
        K = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        with np.errstate(all="ignore"):
            out[0] = np.log(a[0])
            inv0 = 1.0 / a[0]
            for j in range(1, K + 1):
                acc = a[j]
                for i in range(1, j):
                    acc = acc - i * out[i] * a[j - i] / j
                out[j] = acc * inv0
        return Jet(out)

    def sincos(self) -> tuple["Jet", "Jet"]:
        a = self.c
        K = self.order
        s = np.zeros_like(a, dtype=np.result_type(a, float))
        c = np.zeros_like(s)
        s[0] = np.sin(a[0])
        c[0] = np.cos(a[0])
        for j in range(1, K + 1):
            acc_s = 0.0
            acc_c = 0.0
            for i in range(1, j + 1):
                acc_s = acc_s + i * a[i] * c[j - i]
                acc_c = acc_c + i * a[i] * s[j - i]
            s[j] = acc_s / j
            c[j] = -acc_c / j
        return Jet(s), Jet(c)

    def sin(self) -> "Jet":
        return self.sincos()[0]

    def cos(self) -> "Jet":
        return self.sincos()[1]

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"


# ---------------------------------------------------------------------------
# finite differences

_C = 1.0 / 12.0
_LEFT0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) * _C
_LEFT1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) * _C


def _extend(values: np.ndarray, parity) -> np.ndarray:
    """Pad two ghost nodes on each side by reflection (parity) or NaN."""
    left, right = parity
    v = values
    lo = (
        np.stack([left * v[2], left * v[1]])
        if left is not None
        else np.full((2,) + v.shape[1:], np.nan, dtype=v.dtype)
    )
    hi = (
        np.stack([right * v[-2], right * v[-3]])
        if right is not None
        else np.full((2,) + v.shape[1:], np.nan, dtype=v.dtype)
    )
    return np.concatenate([lo, v, hi], axis=0)


def fd_derivative(values, h: float, parity=(1, 1)) -> np.ndarray:
    """4th-order d/dr along axis 0.

    Axes use reflection with the given parity.  An end with parity ``None`` is
    a plain boundary and gets one-sided 4th-order stencils.
    """
    v = np.asarray(values)
    if v.shape[0] < 5:
        raise ValueError("need at least 5 nodes")
    e = _extend(v, parity)
    d = (e[:-4] - 8.0 * e[1:-3] + 8.0 * e[3:-1] - e[4:]) * (_C / h)
    left, right = parity
    if left is None:
        d[0] = np.tensordot(_LEFT0, v[:5], axes=(0, 0)) / h
        d[1] = np.tensordot(_LEFT1, v[:5], axes=(0, 0)) / h
    if right is None:
        d[-1] = -np.tensordot(_LEFT0, v[::-1][:5], axes=(0, 0)) / h
        d[-2] = -np.tensordot(_LEFT1, v[::-1][:5], axes=(0, 0)) / h
    return d


def fd_matrix(N1: int, h: float, parity=(1, 1)) -> np.ndarray:
    """Dense matrix of :func:`fd_derivative` on ``N1`` nodes."""
    return fd_derivative(np.eye(N1), h, parity)


# weights of the even quadratic-in-r^2 fit through nodes 1, 2, 3 evaluated at the axis
_AXIS_EVEN = np.array([1.5, -0.6, 0.1])


def fill_axis(values, parity=(1, 1), axes=(True, True)) -> np.ndarray:
    """Replace axis-node values by their parity limit (odd: 0, even: 6th-order fit)."""
    v = np.array(values, copy=True)
    left, right = parity
    if axes[0] and left is not None:
        v[0] = 0.0 if left == -1 else np.tensordot(_AXIS_EVEN, v[1:4], axes=(0, 0))
    if axes[1] and right is not None:
        v[-1] = 0.0 if right == -1 else np.tensordot(_AXIS_EVEN, v[-2:-5:-1], axes=(0, 0))
    return v
