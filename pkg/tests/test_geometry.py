"""Curvature of rotationally symmetric metric-measure structures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsigma.geometry import (
    StructureError,
    binom_real,
    build_model,
    conformal_rescale,
    divergence_residuals,
    einstein_scale,
    generic_structure,
    gregory,
    integrate,
    volume,
    we_constants_check,
)

N = 400


@pytest.fixture(scope="module")
def sphere():
    return build_model("weighted-sphere", 2, 2, N)


def test_weighted_sphere_scale(sphere):
    # lambda = 1, kappa = m + n - 2 for the weighted sphere
    es = einstein_scale(sphere)
    assert es.is_einstein
    assert es.lam == pytest.approx(1.0, abs=1e-10)
    assert es.kappa == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("kind,n,m,lam", [
    ("elliptic-gaussian", 2, 3, 1.5),
    ("const-v-qe", 2, 3, 0.375),
    ("weighted-sphere", 3, 1.5, 1.25),
])
def test_model_lambda(kind, n, m, lam):
    es = einstein_scale(build_model(kind, n, m, N))
    assert es.lam == pytest.approx(lam, abs=1e-9)


def test_model_constants(sphere):
    rep = we_constants_check(sphere, 3)
    assert rep.max <= 1e-7


def test_integral_identity(sphere):
    # both sides equal 16 pi / 3 for n = m = 2
    es = einstein_scale(sphere)
    assert es.integral_lhs == pytest.approx(16 * math.pi / 3, rel=1e-8)
    assert es.integral_rhs == pytest.approx(16 * math.pi / 3, rel=1e-8)


def test_volume_closed_form(sphere):
    # int (1 + cos r)^2 2 pi sin r dr over [0, pi] = 16 pi / 3
    assert volume(sphere) == pytest.approx(16 * math.pi / 3, rel=1e-12)


@given(st.integers(0, 7))
@settings(max_examples=8, deadline=None)
def test_gregory_exact_on_polynomials(deg):
    x = np.linspace(0.0, 2.0, 41)
    assert gregory(x**deg, x) == pytest.approx(2.0 ** (deg + 1) / (deg + 1), rel=1e-12)


def test_gregory_fourth_order_on_smooth():
    errs = []
    for n in (64, 128):
        x = np.linspace(0, math.pi, n + 1)
        errs.append(abs(gregory(np.sin(x) ** 3, x) - 4 / 3))
    assert errs[1] <= 1e-10


@given(st.floats(0.05, 0.3), st.floats(-0.2, 0.2))
@settings(max_examples=6, deadline=None)
def test_conformal_laws(a, b):
    s = generic_structure(3, 2.5, 200, seed=2)
    _, rep = conformal_rescale(s, lambda y: 1.0 + a * y.cos() + 0.5 * b * (2 * y).cos())
    assert rep.max <= 1e-8


def test_constant_rescaling_is_homothety(sphere):
    t, _ = conformal_rescale(sphere, lambda y: 2.0 + 0.0 * y)
    # P scales by u^2 = 4
    assert einstein_scale(t).lam == pytest.approx(4.0, abs=1e-9)


def test_divergence_identities_generic():
    d = divergence_residuals(generic_structure(3, 2.5, 800, seed=1), 2)
    assert d.max <= 1e-6


def test_round_sphere_constant_v_is_trivial():
    s = build_model("round-lcf", 3, 2.5, N)
    assert divergence_residuals(s, 2).max <= 1e-9


def test_binom_real():
    assert binom_real(5, 2) == 10
    assert binom_real(0.5, 2) == pytest.approx(-0.125)


def test_invalid_structures():
    with pytest.raises(StructureError):
        build_model("weighted-sphere", 1, 2, N)
    with pytest.raises(StructureError):
        build_model("weighted-sphere", 2, 2, 10)
    with pytest.raises(ValueError):
        build_model("no-such-model", 2, 2, N)


def test_weighted_volume_lower_power(sphere):
    # int (1 + cos r) 2 pi sin r dr over [0, pi] = 4 pi
    assert integrate(sphere, np.ones_like(sphere.r), v_power=1.0) == pytest.approx(4 * math.pi, rel=1e-12)
