"""Weighted Newton transforms, scalars, cones and inequalities."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsigma import newton as nw
from wsigma.wsym import WeightedSpectrum

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@st.composite
def sym_states(draw, m_strategy=st.fractions(min_value=Fraction(1, 5), max_value=8, max_denominator=5)):
    n = draw(st.integers(1, 3))
    P = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            P[i, j] = P[j, i] = draw(rationals)
    return nw.MatrixState(P, draw(rationals), draw(m_strategy))


@given(sym_states(), st.integers(0, 4))
@settings(max_examples=60, deadline=None)
def test_transform_and_scalar_recursions(s, k):
    assert nw.residual_is_zero(nw.newton_transform(s, k) - nw.newton_transform_recursive(s, k))
    assert nw.newton_scalar(s, k) == nw.newton_scalar_recursive(s, k)


@given(sym_states(), st.integers(0, 4))
@settings(max_examples=60, deadline=None)
def test_pairing_identities(s, k):
    assert nw.pairing_identity_residual(s, k) == 0
    lhs, rhs = nw.tracefree_pairing(s, k)
    assert lhs == rhs


@given(sym_states(m_strategy=st.integers(1, 4)), st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_integer_m_matches_classical_blocks(s, k):
    B = nw.block_matrix(s)
    assert nw.sigma_of_matrix(s, k) == nw.classical_sigma_all(B, k)[k]
    TB = nw.classical_newton_transform(B, k)
    T = nw.newton_transform(s, k)
    n = s.n
    assert all(TB[i, j] == T[i, j] for i in range(n) for j in range(n))
    assert all(TB[i, i] == nw.newton_scalar(s, k) for i in range(n, B.shape[0]))


@given(sym_states(), st.integers(1, 4), rationals)
@settings(max_examples=40, deadline=None)
def test_kappa_derivative(s, k, kappa):
    assert nw.kappa_derivative_residual(s, k, kappa) == 0


@given(st.integers(1, 4), st.lists(rationals, min_size=1, max_size=4), rationals,
       st.fractions(min_value=0, max_value=6, max_denominator=4))
@settings(max_examples=200, deadline=None)
def test_newton_inequality(k, ent, lam, extra):
    m = Fraction(k - 1) + extra
    if m <= 0:
        m = Fraction(1, 4)
    assert nw.newton_gap(WeightedSpectrum(lam, ent, m), k).gap <= 0


def test_equality_cases_detected():
    g = nw.newton_gap(WeightedSpectrum(Fraction(6), [Fraction(2)] * 3, Fraction(3)), 2)
    assert g.gap == 0 and g.tag is nw.EqualityCase.ALL_EQUAL
    g = nw.newton_gap(WeightedSpectrum(Fraction(0), [Fraction(1), Fraction(0)], Fraction(2)), 2)
    assert g.gap == 0 and g.tag is nw.EqualityCase.LAMBDA_ZERO_SPARSE
    g = nw.newton_gap(WeightedSpectrum(Fraction(5), [Fraction(0)] * 2, Fraction(2)), 3)
    assert g.gap == 0 and g.tag is nw.EqualityCase.BOUNDARY_M


def test_necessity_counterexample_is_positive():
    m, k, gap = nw.find_necessity_counterexample()
    assert m.denominator != 1 and m < k - 1 and gap > 0
    # the closed form at Lambda = 0, lambda = 1, n = 1, m = 1/2, k = 2
    assert nw.necessity_counterexample(Fraction(1, 2), 2, 1) == Fraction(2, 3)


def test_non_integer_m_below_threshold_rejected():
    with pytest.raises(ValueError, match="necessary"):
        nw.newton_gap(WeightedSpectrum(Fraction(1), [Fraction(1)], Fraction(1, 2)), 3)


def test_float_mode_agrees_with_exact():
    P = np.array([[Fraction(1), Fraction(1, 2)], [Fraction(1, 2), Fraction(-1, 3)]], dtype=object)
    se = nw.MatrixState(P, Fraction(2), Fraction(5, 2))
    sf = nw.MatrixState(P.astype(float), 2.0, 2.5)
    for k in range(4):
        assert float(nw.sigma_of_matrix(se, k)) == pytest.approx(nw.sigma_of_matrix(sf, k), rel=1e-12)
        assert np.allclose(nw.newton_transform(se, k).astype(float), nw.newton_transform(sf, k), atol=1e-12)


def test_cone_membership_and_maclaurin():
    s = nw.diag_state([Fraction(1), Fraction(2)], Fraction(3), Fraction(3, 2))
    rep = nw.cone_membership(s, 2)
    assert rep.member and rep.newton_tensor_definite and rep.newton_scalar_signed
    assert nw.maclaurin_gap(s, 2) <= 0
    out = nw.diag_state([Fraction(-5), Fraction(1)], Fraction(0), Fraction(1))
    assert not nw.cone_membership(out, 1).member
    with pytest.raises(nw.ConeViolation):
        nw.maclaurin_gap(out, 1)


def test_exact_eigenvalues():
    s = nw.diag_state([Fraction(1, 3), Fraction(-2)], Fraction(1), Fraction(1))
    assert nw.eigenvalues(s) == [Fraction(-2), Fraction(1, 3)]


def test_asymmetric_rejected():
    with pytest.raises(ValueError):
        nw.MatrixState(np.array([[1.0, 2.0], [0.0, 1.0]]), 1.0, 1.0)
