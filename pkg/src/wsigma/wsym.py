"""Exact arithmetic for m-weighted elementary symmetric polynomials.

Scalars are either ``fractions.Fraction`` (numeric m) or :class:`RationalFunctionM`
(m kept as a formal variable).  Every routine below is written against plain
``+ - * /`` so the same code also runs on floats and numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

Scalar = Any  # Fraction, RationalFunctionM, float or ndarray


class PoleError(ZeroDivisionError):
    """Evaluation of a rational function at a root of its denominator."""


class ModeError(ValueError):
    """Operation is not defined in the requested numeric/symbolic mode."""


# ---------------------------------------------------------------------------
# Univariate polynomials over Fraction, stored low degree first.

def _trim(c: list[Fraction]) -> tuple[Fraction, ...]:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def _pneg(a):
    return tuple(-x for x in a)


def _as_ints(a):
    """Integer coefficients and a common denominator."""
    d = 1
    for x in a:
        d = d * x.denominator // math.gcd(d, x.denominator)
    return [x.numerator * (d // x.denominator) for x in a], d


def _pmul(a, b):
    # integer convolution with one Fraction per output coefficient
    if not a or not b:
        return ()
    ia, da = _as_ints(a)
    ib, db = _as_ints(b)
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(ia):
        if x:
            for j, y in enumerate(ib):
                out[i + j] += x * y
    den = da * db
    return _trim([Fraction(x, den) for x in out])


def _pscale(a, s):
    return _trim([x * s for x in a])


def _pdivmod(a, b):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    lead = b[-1]
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        coef = a[-1] / lead
        q[shift] = coef
        for i, y in enumerate(b):
            a[shift + i] -= coef * y
        a = list(_trim(a))
    return _trim(q), tuple(a)


def _pmonic(a):
    return _pscale(a, 1 / a[-1]) if a else a


def _pgcd(a, b):
    while b:
        a, b = b, _pdivmod(a, b)[1]
    return _pmonic(a)


def _peval(a, x):
    acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _pstr(a, var="m"):
    if not a:
        return "0"
    terms = []
    for i in range(len(a) - 1, -1, -1):
        c = a[i]
        if c == 0:
            continue
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        if mono and c == 1:
            terms.append(mono)
        elif mono and c == -1:
            terms.append("-" + mono)
        elif mono:
            terms.append(f"{c}*{mono}")
        else:
            terms.append(str(c))
    return " + ".join(terms).replace("+ -", "- ")


class RationalFunctionM:
    """Canonical rational function of the formal parameter m.

    The numerator and denominator are coprime and the denominator is monic,
    so equality is structural and ``is_zero`` certifies an identity.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Sequence = (), den: Sequence = (1,), _normalized: bool = False):
        if type(num) is not tuple or not all(type(x) is Fraction for x in num):
            num = _trim([Fraction(x) for x in num])
        if type(den) is not tuple or not all(type(x) is Fraction for x in den):
            den = _trim([Fraction(x) for x in den])
        if num and num[-1] == 0:
            num = _trim(list(num))
        if den and den[-1] == 0:
            den = _trim(list(den))
        if not den:
            raise ZeroDivisionError("denominator is identically zero")
        if not _normalized:
            if not num:
                den = (Fraction(1),)
            elif len(den) > 1 and not any(den[:-1]):
                # monomial denominator c m^a: the gcd is the common power of m
                t = 0
                while t < len(den) - 1 and num[t] == 0:
                    t += 1
                num, den = num[t:], den[t:]
            elif len(den) > 1:
                g = _pgcd(num, den)
                if len(g) > 1:
                    num = _pdivmod(num, g)[0]
                    den = _pdivmod(den, g)[0]
            lead = den[-1]
            if lead != 1:
                num = _pscale(num, 1 / lead)
                den = _pscale(den, 1 / lead)
        self.num = num
        self.den = den

    # constructors
    @classmethod
    def m(cls) -> "RationalFunctionM":
        return cls((0, 1))

    @classmethod
    def const(cls, c) -> "RationalFunctionM":
        return cls((Fraction(c),))

    @staticmethod
    def lift(x) -> "RationalFunctionM":
        if isinstance(x, RationalFunctionM):
            return x
        if isinstance(x, (int, Fraction)):
            return RationalFunctionM((Fraction(x),))
        raise TypeError(f"cannot lift {type(x).__name__} into RationalFunctionM")

    # arithmetic
    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            # p/q + c = (p + c q)/q stays coprime
            if not other:
                return self
            return RationalFunctionM(_padd(self.num, _pscale(self.den, Fraction(other))), self.den,
                                     _normalized=True)
        try:
            o = RationalFunctionM.lift(other)
        except TypeError:
            return NotImplemented
        if self.den == o.den:
            return RationalFunctionM(_padd(self.num, o.num), self.den)
        return RationalFunctionM(
            _padd(_pmul(self.num, o.den), _pmul(o.num, self.den)), _pmul(self.den, o.den)
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalFunctionM(_pneg(self.num), self.den, _normalized=True)

    def __sub__(self, other):
        try:
            return self + (-RationalFunctionM.lift(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        try:
            return RationalFunctionM.lift(other) + (-self)
        except TypeError:
            return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return RationalFunctionM()
            return RationalFunctionM(_pscale(self.num, Fraction(other)), self.den, _normalized=True)
        try:
            o = RationalFunctionM.lift(other)
        except TypeError:
            return NotImplemented
        return RationalFunctionM(_pmul(self.num, o.num), _pmul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            o = RationalFunctionM.lift(other)
        except TypeError:
            return NotImplemented
        if not o.num:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunctionM(_pmul(self.num, o.den), _pmul(self.den, o.num))

    def __rtruediv__(self, other):
        try:
            return RationalFunctionM.lift(other) / self
        except TypeError:
            return NotImplemented

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return RationalFunctionM.const(1) / (self ** (-e))
        out = RationalFunctionM.const(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        try:
            o = RationalFunctionM.lift(other)
        except TypeError:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    def is_zero(self) -> bool:
        return not self.num

    def is_constant(self) -> bool:
        return len(self.num) <= 1 and len(self.den) == 1

    def derivative(self) -> "RationalFunctionM":
        dn = tuple(i * c for i, c in enumerate(self.num))[1:]
        dd = tuple(i * c for i, c in enumerate(self.den))[1:]
        return RationalFunctionM(
            _padd(_pmul(dn, self.den), _pneg(_pmul(self.num, dd))), _pmul(self.den, self.den)
        )

    def __call__(self, m_value):
        return rfm_eval(self, m_value)

    def __repr__(self):
        if len(self.den) == 1:
            return f"RationalFunctionM({_pstr(self.num)})"
        return f"RationalFunctionM(({_pstr(self.num)}) / ({_pstr(self.den)}))"


def rfm_eval(r: RationalFunctionM, m_value) -> Fraction:
    """Exact value of ``r`` at a rational ``m_value``."""
    x = Fraction(m_value)
    d = _peval(r.den, x)
    if d == 0:
        raise PoleError(f"pole at m={x}: denominator {_pstr(r.den)} vanishes")
    return _peval(r.num, x) / d


# ---------------------------------------------------------------------------
# Weighted spectra

class MMode(enum.Enum):
    NUMERIC = "numeric"
    SYMBOLIC = "symbolic"


@dataclass(frozen=True)
class WeightedSpectrum:
    """The pair (lambda; entries) together with the dimensional parameter.

    ``m`` is a positive rational in numeric mode and ``None`` in symbolic mode,
    where the formal variable is used instead.
    """

    lam: Scalar
    entries: tuple
    m: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.m is not None:
            m = Fraction(self.m)
            if m <= 0:
                raise ModeError("numeric mode requires m > 0")
            object.__setattr__(self, "m", m)

    @property
    def mode(self) -> MMode:
        return MMode.SYMBOLIC if self.m is None else MMode.NUMERIC

    @property
    def n(self) -> int:
        return len(self.entries)

    def m_value(self):
        return RationalFunctionM.m() if self.m is None else self.m

    def removed(self, i: int) -> "WeightedSpectrum":
        """Drop entry ``i`` (1-based, input order)."""
        if not 1 <= i <= self.n:
            raise IndexError(f"index {i} outside 1..{self.n}")
        ent = self.entries[: i - 1] + self.entries[i:]
        return WeightedSpectrum(self.lam, ent, self.m)

    @classmethod
    def symbolic(cls, lam, entries):
        return cls(lam, tuple(entries), None)


class Method(enum.Enum):
    RECURSIVE = "recursive"
    DIRECT = "direct"


# ---------------------------------------------------------------------------
# Generic kernels (any commutative ring with division by m)

def elementary_symmetric(entries: Sequence, k: int):
    """Classical sigma_k of a list; 0 for k > len, 1 for k = 0."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    e = [1] + [0] * k
    for x in entries:
        for j in range(k, 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return e[k]


def elementary_symmetric_all(entries: Sequence, kmax: int) -> list:
    e = [1] + [0] * kmax
    for x in entries:
        for j in range(kmax, 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return e


def binom_over_power(m, j: int):
    """binom(m, j) / m**j with binom as the falling factorial over j!."""
    out = 1
    for i in range(j):
        out = out * (m - i) / ((i + 1) * m)
    return out


def binom_general(m, j: int):
    out = 1
    for i in range(j):
        out = out * (m - i) / (i + 1)
    return out


def weighted_power_sum(lam, entries, m, k: int):
    if k < 1:
        raise ValueError("power sums need k >= 1")
    z = lam / m
    out = m * z**k
    for x in entries:
        out = out + x**k
    return out


def weighted_sigma_all(lam, entries, m, kmax: int, method: Method = Method.DIRECT) -> list:
    """[sigma_0^m, ..., sigma_kmax^m] of (lam; entries)."""
    if method is Method.DIRECT:
        cl = elementary_symmetric_all(entries, kmax)
        coef = [binom_over_power(m, j) for j in range(kmax + 1)]
        out = []
        for k in range(kmax + 1):
            acc = 0
            for j in range(k + 1):
                acc = acc + coef[j] * lam**j * cl[k - j]
            out.append(acc)
        return out
    sig = [1]
    sums = [weighted_power_sum(lam, entries, m, j) for j in range(1, kmax + 1)]
    for k in range(1, kmax + 1):
        acc = 0
        for j in range(k):
            term = sig[k - 1 - j] * sums[j]
            acc = acc + term if j % 2 == 0 else acc - term
        sig.append(acc / k)
    return sig


def weighted_sigma(lam, entries, m, k: int, method: Method = Method.DIRECT):
    if k < 0:
        raise ValueError("k must be nonnegative")
    return weighted_sigma_all(lam, entries, m, k, method)[k]


def newton_scalar_from_sigmas(sig: Sequence, z, k: int):
    """s_k = sum_j (-1)^j z^j sigma_{k-j}, z = lambda/m."""
    acc = 0
    zp = 1
    for j in range(k + 1):
        term = zp * sig[k - j]
        acc = acc + term if j % 2 == 0 else acc - term
        zp = zp * z
    return acc


# ---------------------------------------------------------------------------
# Public operations on WeightedSpectrum

def _check_numeric_m(ws: WeightedSpectrum):
    if ws.mode is MMode.NUMERIC and ws.m == 0:
        raise ModeError("m = 0 is not allowed")


def power_sum(ws: WeightedSpectrum, k: int):
    """N_k^m(lambda; entries) = m (lambda/m)^k + sum entries^k."""
    _check_numeric_m(ws)
    return weighted_power_sum(ws.lam, ws.entries, ws.m_value(), k)


def sigma_km(ws: WeightedSpectrum, k: int, method: Method = Method.RECURSIVE):
    return weighted_sigma(ws.lam, ws.entries, ws.m_value(), k, method)


def _sigma_shifted(lam, entries, m_shift, k):
    return weighted_sigma(lam, entries, m_shift, k, Method.DIRECT)


def shift_lambda_residual(ws: WeightedSpectrum, lambda1, lambda2, k: int):
    """LHS minus RHS of the change-of-lambda expansion.

    sigma_k^m(l1 + l2) = sum_j binom(m, j) (l1/m)^j sigma_{k-j}^{m-j}((m-j) l2 / m).
    """
    m = ws.m_value()
    if ws.mode is MMode.NUMERIC:
        for j in range(k + 1):
            if m - j == 0:
                raise ModeError(f"m - {j} = 0 in numeric mode; rerun symbolically")
    lhs = weighted_sigma(lambda1 + lambda2, ws.entries, m, k, Method.RECURSIVE)
    rhs = 0
    for j in range(k + 1):
        mj = m - j
        shifted = weighted_sigma(mj * lambda2 / m, ws.entries, mj, k - j, Method.RECURSIVE)
        rhs = rhs + binom_general(m, j) * (lambda1 / m) ** j * shifted
    return lhs - rhs


def remove_index_residual(ws: WeightedSpectrum, i: int, k: int):
    """sigma_k(Lambda) - sigma_k(Lambda(i)) - lambda_i sigma_{k-1}(Lambda(i))."""
    sub = ws.removed(i)
    full = sigma_km(ws, k)
    if k == 0:
        return full - sigma_km(sub, 0)
    return full - sigma_km(sub, k) - ws.entries[i - 1] * sigma_km(sub, k - 1)


def generating_series(ws: WeightedSpectrum, order: int) -> list:
    """Coefficients of (1 + lam t / m)^m prod (1 + lam_i t) through t^order."""
    m = ws.m_value()
    series = [binom_general(m, j) * (ws.lam / m) ** j for j in range(order + 1)]
    for x in ws.entries:
        nxt = list(series)
        for j in range(1, order + 1):
            nxt[j] = series[j] + x * series[j - 1]
        series = nxt
    return series


def to_exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(str(x))


def is_exact_zero(x) -> bool:
    if isinstance(x, RationalFunctionM):
        return x.is_zero()
    return x == 0


def block_tuple(ws: WeightedSpectrum) -> tuple:
    """Integer m: the (m+n)-tuple with lam/m repeated m times."""
    if ws.m is None or ws.m.denominator != 1:
        raise ModeError("block rule needs a positive integer m")
    m = int(ws.m)
    return tuple(ws.entries) + (ws.lam / ws.m,) * m


def comb_int(a: int, b: int) -> int:
    return math.comb(a, b) if 0 <= b <= a else 0
