"""Exact weighted symmetric-function algebra."""

from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from wsigma.wsym import (
    Method,
    ModeError,
    RationalFunctionM,
    WeightedSpectrum,
    block_tuple,
    elementary_symmetric,
    generating_series,
    power_sum,
    remove_index_residual,
    shift_lambda_residual,
    sigma_km,
)

M = RationalFunctionM.m()
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)
positive_m = st.fractions(min_value=Fraction(1, 7), max_value=12, max_denominator=7)
entries = st.lists(rationals, min_size=1, max_size=4)


def to_sympy(r):
    m = sp.Symbol("m")
    r = RationalFunctionM.lift(r)
    num = sum(sp.Rational(c.numerator, c.denominator) * m**i for i, c in enumerate(r.num))
    den = sum(sp.Rational(c.numerator, c.denominator) * m**i for i, c in enumerate(r.den))
    return num / den


# rational functions of m ------------------------------------------------------

def test_canonical_form_cancels_common_factors():
    r = (M * M - 1) / (M - 1)
    assert r == M + 1
    assert r.den == (Fraction(1),)


def test_zero_is_structural():
    assert (M / (M + 1) - M / (M + 1)).is_zero()
    assert not (M / (M + 1)).is_zero()


@given(st.lists(rationals, min_size=1, max_size=3), st.lists(rationals, min_size=1, max_size=3),
       st.lists(rationals, min_size=1, max_size=3))
@settings(max_examples=60, deadline=None)
def test_field_axioms(a, b, c):
    x, y, z = (RationalFunctionM(p, (1, 1)) for p in (a, b, c))
    assert (x + y) * z == x * z + y * z
    assert x + y == y + x
    assert (x * y) * z == x * (y * z)
    if not y.is_zero():
        assert (x / y) * y == x


@given(st.lists(rationals, min_size=1, max_size=3), st.lists(rationals, min_size=1, max_size=3))
@settings(max_examples=40, deadline=None)
def test_arithmetic_matches_sympy(a, b):
    x = RationalFunctionM(a) / (M + 2)
    y = RationalFunctionM(b) / (M * M + 1)
    got = to_sympy(x * y + x - y)
    want = to_sympy(x) * to_sympy(y) + to_sympy(x) - to_sympy(y)
    assert sp.simplify(got - want) == 0


def test_evaluation_and_pole():
    r = (M + 1) / (M - 2)
    assert r(Fraction(3)) == 4
    with pytest.raises(ZeroDivisionError):
        r(Fraction(2))


# weighted sigma_k -------------------------------------------------------------

def test_sigma_of_lambda_only_is_binomial():
    # with no entries sigma_k^m(lambda) = binom(m, k) (lambda/m)^k; sympy is the oracle
    lam = Fraction(3, 2)
    m = sp.Symbol("m")
    for k in range(5):
        got = to_sympy(sigma_km(WeightedSpectrum.symbolic(lam, ()), k, Method.DIRECT))
        want = sp.binomial(m, k).expand(func=True) * (sp.Rational(3, 2) / m) ** k
        assert sp.simplify(got - want) == 0


def test_trivial_values():
    ws = WeightedSpectrum(Fraction(2), (Fraction(1), Fraction(3)), Fraction(4))
    assert sigma_km(ws, 0) == 1
    assert sigma_km(ws, 1) == 2 + 1 + 3
    assert power_sum(ws, 1) == 6


@given(rationals, entries, positive_m, st.integers(0, 5))
@settings(max_examples=80, deadline=None)
def test_recursive_equals_direct(lam, ent, m, k):
    ws = WeightedSpectrum(lam, ent, m)
    assert sigma_km(ws, k, Method.RECURSIVE) == sigma_km(ws, k, Method.DIRECT)


@given(rationals, entries, st.integers(1, 5), st.integers(0, 6))
@settings(max_examples=80, deadline=None)
def test_integer_m_block_rule(lam, ent, m, k):
    ws = WeightedSpectrum(lam, ent, m)
    assert sigma_km(ws, k) == elementary_symmetric(block_tuple(ws), k)


@given(rationals, entries, positive_m, st.integers(1, 5), st.data())
@settings(max_examples=60, deadline=None)
def test_remove_index(lam, ent, m, k, data):
    ws = WeightedSpectrum(lam, ent, m)
    i = data.draw(st.integers(1, len(ent)))
    assert remove_index_residual(ws, i, k) == 0


@given(rationals, entries, positive_m)
@settings(max_examples=40, deadline=None)
def test_generating_series(lam, ent, m):
    ws = WeightedSpectrum(lam, ent, m)
    series = generating_series(ws, 6)
    assert all(series[j] == sigma_km(ws, j, Method.DIRECT) for j in range(7))


@given(rationals, rationals, st.lists(rationals, min_size=1, max_size=3), st.integers(0, 3))
@settings(max_examples=15, deadline=None)
def test_shift_lambda_symbolic(l1, l2, ent, k):
    ws = WeightedSpectrum.symbolic(Fraction(0), ent)
    assert shift_lambda_residual(ws, l1, l2, k).is_zero()


def test_shift_lambda_numeric_integer_m_rejected():
    ws = WeightedSpectrum(Fraction(1), (Fraction(1),), Fraction(2))
    with pytest.raises(ModeError):
        shift_lambda_residual(ws, Fraction(1), Fraction(1), 3)


def test_nonpositive_m_rejected():
    with pytest.raises(ModeError):
        WeightedSpectrum(Fraction(1), (Fraction(1),), Fraction(0))


def test_block_rule_needs_integer_m():
    with pytest.raises(ModeError):
        block_tuple(WeightedSpectrum(Fraction(1), (Fraction(1),), Fraction(1, 2)))
