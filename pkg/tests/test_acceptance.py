"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a PASS/FAIL line that is printed in the terminal summary
and also printed directly (visible with ``pytest -s``).
"""

import time

import pytest

from wsigma import suites as S

from .conftest import ACCEPTANCE


def _judge(num: int, title: str, rows, extra: str = ""):
    failed = [r for r in rows if not r.passed]
    ok = not failed
    summary = f"{title}: {len(rows) - len(failed)}/{len(rows)} checks" + (f"; {extra}" if extra else "")
    if failed:
        summary += "; failing: " + ", ".join(r.name for r in failed[:6])
    ACCEPTANCE[num] = (ok, summary)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {summary}")
    assert ok, summary


def test_01_exact_algebra_symbolic():
    rows = S.algebra_suite(kmax=5, nmax=5, samples=200, symbolic=True)
    cases = sum(r.detail["cases"] for r in rows)
    _judge(1, "exact identities, symbolic m, 200 inputs", rows, f"{cases} exact-zero residuals")


def test_02_integer_m_oracle():
    _judge(2, "integer m equals classical sigma_k of the block tuple", S.integer_m_suite(samples=500))


def test_03_weighted_newton_inequality():
    rows = S.newton_inequality_suite(samples=10_000)
    cex = next(r for r in rows if r.name == "newton-necessity-counterexample").detail
    _judge(3, "Newton inequality, equality cases, necessity", rows,
           f"counterexample m={cex['m']}, k={cex['k']}, gap={cex['gap']}")


def test_04_model_constants():
    _judge(4, "closed-form invariants at 801 nodes", S.model_constants_suite(N=800))


def test_05_integral_identity():
    rows = S.integral_identity_suite(N=800)
    _judge(5, "integral identity equals 16 pi/3", rows,
           ", ".join(f"{r.name}={r.detail['value']:.15g}" for r in rows))


def test_06_first_variations():
    rows = S.first_variation_checks(N=800, directions=20)
    worst = max(r.value for r in rows)
    _judge(6, "analytic first variations vs finite differences", rows, f"max relative residual {worst:.2e}")


def test_07_criticality():
    rows = S.criticality_checks(N=800)
    _judge(7, "models are critical", rows, f"max residual {max(r.value for r in rows):.2e}")


def test_08_stability():
    rows = S.stability_checks(N=800, size=12)
    pd = rows[0].detail
    _judge(8, "second variation of the quasi-Einstein model", rows,
           f"k=1 min eigenvalue {rows[0].value:.4g} (margin {pd['margin']:.3g} error bars)")


def test_09_self_adjointness():
    rows = S.self_adjointness_checks(N=800)
    _judge(9, "self-adjointness dichotomy", rows,
           f"non-LCF k=3 antisymmetry {rows[-1].value:.3g}")


def test_10_obata_rigidity():
    t0 = time.perf_counter()
    rows = S.obata_checks(N=400, seeds=range(10), amplitude=0.1)
    slowest = max(r.detail["seconds"] for r in rows)
    _judge(10, "flow from 10 perturbations, k = 1, 2", rows,
           f"worst fit {max(r.detail['fit_residual'] for r in rows):.2e}, slowest flow {slowest:.2f}s, "
           f"total {time.perf_counter() - t0:.1f}s")


def test_11_divergence_identities():
    rows = S.divergence_suite(N=800)
    ratios = [r.detail["ratio"] for r in rows if r.name.endswith("-order")]
    _judge(11, "divergence identities at 801 nodes, N -> 2N", rows,
           f"ratios {min(ratios):.2f}..{max(ratios):.2f}")


def test_12_conjecture_explorers():
    rows = S.explorer_checks(N=400, basis_size=12)
    info = {r.name: r for r in rows}
    extra = (f"I1 inf {info['rayleigh-I1'].value:.2e} (modulo null direction "
             f"{info['rayleigh-I1'].detail['value_modulo_null']:.4f}), "
             f"I2 inf {info['rayleigh-I2'].value:.2e} (modulo null direction "
             f"{info['rayleigh-I2'].detail['value_modulo_null']:.4f}), "
             f"sobolev min ratio {1 - info['sobolev-k1'].value:.15g}")
    _judge(12, "explorers: positive stable infimum and sobolev ratio", rows, extra)
