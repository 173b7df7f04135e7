"""Solvers, rigidity certificates and the conjecture explorers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsigma.geometry import build_model, integrate
from wsigma.solver import (
    ConeExitError,
    FlowState,
    divfree_residual,
    flow_solve,
    obata_pairing,
    rayleigh_inf,
    sobolev_scan,
    standard_families,
    yk_solve,
)

N = 400


@pytest.fixture(scope="module")
def qe():
    return build_model("const-v-qe", 2, 3, N)


@pytest.fixture(scope="module")
def sphere():
    return build_model("weighted-sphere", 2, 2, N)


def test_constant_start_is_immediately_critical(qe):
    # a homothety of the model is critical after the volume projection
    st_ = FlowState.from_function(qe, 1, lambda x: 0.0 * x + 1.7)
    res = flow_solve(st_)
    assert res.converged and st_.iteration == 0
    assert integrate(res.structure, np.ones_like(qe.r)) == pytest.approx(1.0, abs=1e-10)


@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
@settings(max_examples=4, deadline=None)
def test_flow_recovers_model(seed, k):
    qe = build_model("const-v-qe", 2, 3, N)
    st_ = FlowState.from_perturbation(qe, k, 0.1, seed=seed)
    res = flow_solve(st_)
    assert res.converged and res.residual <= 1e-8
    assert res.certificate.passed
    assert abs(res.certificate.b) <= 1e-6
    assert min(res.margin_history) > 0
    # the functional moves monotonically toward the stable critical point
    G = np.asarray(res.functional_history)
    assert np.all(np.diff(G) <= 1e-12 * np.abs(G[:-1]) + 1e-14)


def test_volume_projection_invariant(qe):
    st_ = FlowState.from_perturbation(qe, 1, 0.1, seed=3)
    res = flow_solve(st_)
    assert integrate(res.structure, np.ones_like(qe.r)) == pytest.approx(1.0, abs=1e-10)


def test_cone_exit_reported(qe):
    st_ = FlowState.from_function(qe, 2, lambda x: 1.0 + 0.9 * (3 * x).cos())
    with pytest.raises(ConeExitError):
        flow_solve(st_)


def test_obata_pairing_vanishes_on_model(qe):
    p = obata_pairing(qe, np.ones_like(qe.r), 1, "qe")
    assert abs(p.integral) <= 1e-12


def test_divfree_trivial_on_constant_v():
    s = build_model("round-lcf", 3, 2.5, N)
    assert divfree_residual(s, 2) <= 1e-9


def test_yk_model_takes_no_iterations(sphere):
    st_ = FlowState(sphere, np.zeros(25), 1)
    r = yk_solve(st_, sphere.kappa)
    assert r.converged and st_.iteration == 0
    assert max(r.pointwise_residual, r.integral_residual) <= 1e-8


def test_yk_rescaled_model_stays_in_family(sphere):
    st_ = FlowState.from_function(sphere, 1, lambda x: 1.3 + 0.4 * x.cos())
    r = yk_solve(st_, sphere.kappa)
    assert r.converged and r.fit[2] <= 1e-6


def test_rayleigh_null_direction(sphere):
    # psi = v is tangent to the weighted Einstein family and is a null vector of both forms
    for which in ("I1", "I2"):
        r = rayleigh_inf(sphere, which, 12)
        assert r.null_directions == 1
        assert abs(r.value) <= 1e-10
        vals = dict(r.table_modulo_null)
        assert vals[24] > 0
        assert abs(vals[24] - vals[12]) <= 0.01 * vals[12]


def test_sobolev_scan_k1(sphere):
    rows = sobolev_scan(sphere, 1, standard_families(sphere, seed=0))
    model = [r for r in rows if r.family == "model"]
    assert model and abs(model[0].ratio - 1) <= 1e-12
    resc = [r.ratio for r in rows if r.family == "rescalings" and not r.excluded]
    assert np.allclose(resc, 1.0, atol=1e-6)
    kept = [r.ratio for r in rows if not r.excluded]
    assert min(kept) >= 1 - 1e-6
