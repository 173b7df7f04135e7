"""First and second variations against finite-difference oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsigma.geometry import build_model, generic_structure
from wsigma.variation import (
    NotVariationalError,
    antisymmetry,
    criticality_suite,
    exponents,
    first_variation_suite,
    full_variation_bundle,
    is_critical_fk,
    random_direction,
    richardson_first,
    second_variation_analytic,
    second_variation_fd,
)

N = 400


@pytest.fixture(scope="module")
def generic():
    return generic_structure(3, 2.5, N, seed=3)


@pytest.fixture(scope="module")
def qe():
    return build_model("const-v-qe", 2, 3, N)


def test_richardson_exact_on_cubic():
    # one Richardson step removes the h^2 term, exact for cubics
    d, err, steps = richardson_first(lambda t: 1 + 2 * t + 3 * t**2 + 4 * t**3, 0.1)
    assert float(d) == pytest.approx(2.0, abs=1e-12)
    assert steps == (0.1, 0.05)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=3, deadline=None)
def test_full_variation_formulas(seed):
    s = generic_structure(3, 2.5, N, seed=3)
    d = random_direction(s, np.random.default_rng(seed))
    for rep in full_variation_bundle(s, d).reports:
        assert rep.passed, rep.as_dict()


@pytest.mark.parametrize("k", [1, 2])
def test_conformal_first_variation(generic, k):
    reps = first_variation_suite(generic, k, np.random.default_rng(k), directions=2)
    assert all(r.passed for r in reps), [r.as_dict() for r in reps if not r.passed]


@pytest.mark.parametrize("k", [1, 2])
def test_quasi_einstein_is_critical(qe, k):
    ok, res = is_critical_fk(qe, k)
    assert ok, res
    reps = criticality_suite(qe, k, np.random.default_rng(0), directions=3)
    assert all(r.passed for r in reps)


def test_weighted_sphere_is_critical_for_scaled_functional():
    ws = build_model("weighted-sphere", 2, 2, N)
    reps = criticality_suite(ws, 1, np.random.default_rng(1), directions=3)
    assert all(r.passed for r in reps)


@pytest.mark.parametrize("k", [1, 2])
def test_linearization_self_adjoint_low_k(generic, k):
    rng = np.random.default_rng(4)
    d1 = random_direction(generic, rng, conformal=True)
    d2 = random_direction(generic, rng, conformal=True)
    assert antisymmetry(generic, k, d1.jets(generic)[2], d2.jets(generic)[2]) <= 1e-6


def test_k3_not_variational_without_lcf():
    s = generic_structure(2, 2.5, N, seed=6)
    with pytest.raises(NotVariationalError):
        first_variation_suite(s, 3, np.random.default_rng(0), directions=1)


def test_second_variation_analytic_vs_fd(qe):
    x = random_direction(qe, np.random.default_rng(9), conformal=True, mean_free=True).jets(qe)[2]
    a = second_variation_analytic(qe, 1, x)
    fd, err, _ = second_variation_fd(qe, 1, x)
    assert a == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_exponents_values():
    # m = n = 2, k = 1: c = 4, p = 12/16, a = 4/16, b = 2/4
    assert exponents(2.0, 2, 1) == pytest.approx((0.75, 0.25, 0.5))
    # k = (m+n)/2 gives b = 0
    assert exponents(2.0, 2, 2)[2] == 0.0
