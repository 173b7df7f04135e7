"""Verification suites shared by the command line and the acceptance tests.

Each suite returns a list of :class:`Check` rows; a row passes when its
value is within tolerance (exact zero for the exact-arithmetic suites).
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import newton as nw
from .geometry import (
    build_model,
    conformal_rescale,
    divergence_residuals,
    einstein_scale,
    generic_structure,
    we_constants_check,
)
from .jets import Jet
from .solver import (
    FlowState,
    divfree_residual,
    flow_solve,
    obata_pairing,
    rayleigh_inf,
    rescale,
    sobolev_scan,
    standard_families,
    yk_solve,
)
from .variation import (
    Direction,
    antisymmetry,
    criticality_suite,
    first_variation_suite,
    full_variation_bundle,
    harmonic_basis,
    hessian_matrices,
    phi_map_consistency,
    random_direction,
    scale_variation_suite,
    we_second_variation,
)
from .wsym import (
    Method,
    WeightedSpectrum,
    block_tuple,
    elementary_symmetric,
    generating_series,
    is_exact_zero,
    remove_index_residual,
    shift_lambda_residual,
    sigma_km,
)


@dataclass
class Check:
    name: str
    anchor: str
    value: float
    tol: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "value": self.value, "tol": self.tol,
                "pass": self.passed, **self.detail}


def _max_check(name, anchor, values, tol, **detail) -> Check:
    v = float(max(values)) if len(values) else 0.0
    return Check(name, anchor, v, tol, bool(v <= tol), detail)


def _from_reports(prefix: str, reports) -> list[Check]:
    out = []
    for r in reports:
        out.append(Check(f"{prefix}{r.name}", r.anchor, r.residual, r.tol, r.passed,
                         {"analytic": r.analytic, "fd": r.fd, "error_bar": r.error_bar}))
    return out


# ---------------------------------------------------------------------------
# exact algebra

def _rat(rng: random.Random, span: int = 9, den: int = 5) -> Fraction:
    return Fraction(rng.randint(-span, span), rng.randint(1, den))


def _sym_matrix(rng: random.Random, n: int) -> np.ndarray:
    P = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            P[i, j] = P[j, i] = _rat(rng)
    return P


def algebra_suite(kmax: int = 5, nmax: int = 5, samples: int = 200, seed: int = 0,
                  symbolic: bool = True) -> list[Check]:
    """Exact identities for weighted elementary symmetric polynomials.

    In symbolic mode m is the formal variable and a residual passes only if it
    normalizes to the zero rational function; otherwise m is a random positive
    rational.
    """
    rng = random.Random(seed)
    failures: dict[str, int] = {}
    counts: dict[str, int] = {}

    def record(name, residual):
        counts[name] = counts.get(name, 0) + 1
        if not nw.residual_is_zero(residual):
            failures[name] = failures.get(name, 0) + 1

    def draw_m():
        return None if symbolic else Fraction(rng.randint(1, 40), rng.randint(1, 7))

    for _ in range(samples):
        n = rng.randint(1, nmax)
        lam = _rat(rng)
        ent = [_rat(rng) for _ in range(n)]
        m = draw_m()
        ws = WeightedSpectrum(lam, ent, m)
        mval = ws.m_value()
        for k in range(kmax + 1):
            record("recursive-vs-direct", sigma_km(ws, k, Method.RECURSIVE) - sigma_km(ws, k, Method.DIRECT))
            record("remove-index", remove_index_residual(ws, rng.randint(1, n), k))
            if symbolic:
                record("shift-lambda", shift_lambda_residual(ws, _rat(rng), _rat(rng), k))
        series = generating_series(ws, 8)
        for j in range(9):
            record("generating-series", series[j] - sigma_km(ws, j, Method.DIRECT))
        P = _sym_matrix(rng, n)
        st = nw.MatrixState(P, lam, mval)
        for k in range(kmax + 1):
            record("newton-transform-recursion", nw.newton_transform(st, k) - nw.newton_transform_recursive(st, k))
            record("newton-scalar-recursion", nw.newton_scalar(st, k) - nw.newton_scalar_recursive(st, k))
            record("newton-pairing", nw.pairing_identity_residual(st, k))
            lhs, rhs = nw.tracefree_pairing(st, k)
            record("tracefree-pairing", lhs - rhs)
            if symbolic:
                record("newton-scalar-shifted-weight", nw.newton_scalar(st, k) - nw.newton_scalar_shifted(st, k))
            if k >= 1:
                record("kappa-derivative", nw.kappa_derivative_residual(st, k, _rat(rng)))
    anchors = {
        "recursive-vs-direct": "weighted sigma_k as perturbations of the classical ones",
        "remove-index": "removing an entry from the weighted spectrum",
        "shift-lambda": "change of lambda via the binomial theorem",
        "generating-series": "generating function of the weighted sigma_k",
        "newton-transform-recursion": "recursion for the weighted Newton transforms",
        "newton-scalar-recursion": "recursion for the weighted Newton scalars",
        "newton-pairing": "inner product of the Newton transform with P - lambda/m",
        "tracefree-pairing": "inner product of the trace-free Newton transform",
        "newton-scalar-shifted-weight": "Newton scalars as sigma_k with weight m-1",
        "kappa-derivative": "scale derivative of sigma_k",
    }
    out = []
    for name, cnt in counts.items():
        bad = failures.get(name, 0)
        out.append(Check(f"algebra-{name}", anchors[name], float(bad), 0.0, bad == 0,
                         {"cases": cnt, "mode": "symbolic" if symbolic else "numeric"}))
    return out


def integer_m_suite(samples: int = 500, seed: int = 1) -> list[Check]:
    """Integer m: weighted sigma_k equals the classical sigma_k of the block tuple."""
    rng = random.Random(seed)
    bad = cases = 0
    bad_T = 0
    for _ in range(samples):
        m = rng.randint(1, 5)
        n = rng.randint(1, 4)
        ws = WeightedSpectrum(_rat(rng), [_rat(rng) for _ in range(n)], m)
        tup = block_tuple(ws)
        for k in range(m + n + 1):
            cases += 1
            for method in (Method.RECURSIVE, Method.DIRECT):
                if sigma_km(ws, k, method) != elementary_symmetric(tup, k):
                    bad += 1
        st = nw.diag_state(list(ws.entries), ws.lam, Fraction(m))
        B = nw.block_matrix(st)
        k = rng.randint(0, m + n)
        TB = nw.classical_newton_transform(B, k)
        T = nw.newton_transform(st, k)
        s = nw.newton_scalar(st, k)
        ok = all(TB[i, j] == T[i, j] for i in range(n) for j in range(n))
        ok = ok and all(TB[i, i] == s for i in range(n, n + m))
        bad_T += 0 if ok else 1
    return [
        Check("integer-m-block-rule", "block-diagonal description for integer m", float(bad), 0.0, bad == 0,
              {"cases": cases}),
        Check("integer-m-newton-blocks", "Newton transform decomposes blockwise", float(bad_T), 0.0, bad_T == 0,
              {"cases": samples}),
    ]


def newton_inequality_suite(samples: int = 10_000, seed: int = 2) -> list[Check]:
    """Weighted Newton inequality with m >= k-1, its equality cases and the necessity example."""
    rng = random.Random(seed)
    worst = Fraction(-10**9)
    violations = 0
    for _ in range(samples):
        k = rng.randint(1, 4)
        n = rng.randint(1, 4)
        m = Fraction(max(k - 1, 0)) + Fraction(rng.randint(1 if k == 1 else 0, 24), rng.randint(1, 4))
        ws = WeightedSpectrum(_rat(rng), [_rat(rng) for _ in range(n)], m)
        g = nw.newton_gap(ws, k).gap
        worst = max(worst, g)
        violations += int(g > 0)
    out = [Check("newton-inequality", "weighted Newton inequality", float(violations), 0.0, violations == 0,
                 {"cases": samples, "max_gap": float(worst)})]
    eq_cases = {
        "AllEqual": (WeightedSpectrum(Fraction(6), [Fraction(2)] * 3, Fraction(3)), 2, nw.EqualityCase.ALL_EQUAL),
        "LambdaZeroSparse": (WeightedSpectrum(Fraction(0), [Fraction(1), Fraction(0), Fraction(0)], Fraction(2)),
                             2, nw.EqualityCase.LAMBDA_ZERO_SPARSE),
        "BoundaryM": (WeightedSpectrum(Fraction(5), [Fraction(0)] * 3, Fraction(2)), 3,
                      nw.EqualityCase.BOUNDARY_M),
    }
    for name, (ws, k, tag) in eq_cases.items():
        g = nw.newton_gap(ws, k)
        ok = g.gap == 0 and g.tag is tag
        out.append(Check(f"newton-equality-{name}", "equality cases of the weighted Newton inequality",
                         float(abs(g.gap)), 0.0, ok, {"tag": g.tag.value}))
    # strictly non-integer m below k - 1 at Lambda = 0
    found = nw.find_necessity_counterexample()
    m, k, gap = found if found is not None else (Fraction(0), 0, Fraction(0))
    out.append(Check("newton-necessity-counterexample", "necessity of the assumption m >= k - 1",
                     float(gap), 0.0, bool(gap > 0), {"m": str(m), "k": k, "gap": str(gap)}))
    # Maclaurin on cone samples
    mac_bad = mac_cases = 0
    for _ in range(samples // 10):
        k = rng.randint(1, 3)
        n = rng.randint(1, 3)
        m = Fraction(k - 1) + Fraction(rng.randint(1, 12), rng.randint(1, 3))
        st = nw.diag_state([Fraction(rng.randint(0, 9), rng.randint(1, 3)) for _ in range(n)],
                           Fraction(rng.randint(1, 9)), m)
        if not nw.cone_membership(st, k).member:
            continue
        mac_cases += 1
        mac_bad += int(nw.maclaurin_gap(st, k) > 0)
    out.append(Check("maclaurin-inequality", "weighted Maclaurin inequality in the positive cone",
                     float(mac_bad), 0.0, mac_bad == 0, {"cases": mac_cases}))
    return out


# ---------------------------------------------------------------------------
# geometry

def model_constants_suite(N: int = 800) -> list[Check]:
    out = []
    for kind, n, m in (("elliptic-gaussian", 2, 3), ("weighted-sphere", 2, 2)):
        s = build_model(kind, n, m, N)
        rep = we_constants_check(s, 3)
        for k in range(4):
            out.append(Check(f"{kind}-sigma{k}", "closed-form invariants of the models", rep.sigma[k], 1e-7,
                             rep.sigma[k] <= 1e-7))
            out.append(Check(f"{kind}-newton-scalar{k}", "closed-form invariants of the models", rep.scalar[k],
                             1e-7, rep.scalar[k] <= 1e-7))
            out.append(Check(f"{kind}-newton-tensor{k}", "closed-form invariants of the models", rep.newton[k],
                             1e-7, rep.newton[k] <= 1e-7))
        out.append(Check(f"{kind}-bach", "Bach tensor of a weighted Einstein structure", rep.bach, 1e-7,
                         rep.bach <= 1e-7))
    return out


def integral_identity_suite(N: int = 800) -> list[Check]:
    s = build_model("weighted-sphere", 2, 2, N)
    es = einstein_scale(s)
    target = 16 * math.pi / 3
    rl = abs(es.integral_lhs - target) / target
    rr = abs(es.integral_rhs - target) / target
    return [Check("integral-identity-lhs", "integral relation for weighted Einstein structures", rl, 1e-8,
                  rl <= 1e-8, {"value": es.integral_lhs, "target": target}),
            Check("integral-identity-rhs", "integral relation for weighted Einstein structures", rr, 1e-8,
                  rr <= 1e-8, {"value": es.integral_rhs, "target": target})]


def geometry_suite(model: str, n: int, m: float, N: int) -> list[Check]:
    s = build_model(model, n, m, N)
    out = []
    es = einstein_scale(s)
    out.append(Check("einstein-scale", "weighted Einstein condition with scale", es.residual, 1e-6,
                     es.residual <= 1e-6, {"lambda": es.lam, "kappa": es.kappa}))
    _, rep = conformal_rescale(s, lambda y: 1.0 + 0.2 * y.cos())
    out.append(Check("conformal-laws", "weighted conformal transformation laws", rep.max, 1e-8, rep.max <= 1e-8))
    d = divergence_residuals(s, 2)
    for name, val in d.as_dict().items():
        out.append(Check(name, "divergence and trace identities", val, 1e-6, val <= 1e-6))
    if es.is_einstein:
        rep = we_constants_check(s, 3)
        out.append(Check("model-constants", "closed-form invariants of the models", rep.max, 1e-7, rep.max <= 1e-7))
    return out


def divergence_test_structures(N: int):
    """Conformal rescalings of the LCF models with a non-constant factor."""
    out = {}
    # the lcf factor is large enough that truncation error stays above roundoff at 2N
    for key, kind, n, m, amps in (("lcf", "round-lcf", 3, 2.5, (0.2, 0.1, 0.05)),
                                  ("sphere", "weighted-sphere", 3, 2, (0.1, 0.05, 0.0))):
        base = build_model(kind, n, m, N)
        x = Jet.variable(base.r, base.alpha.order)
        u = 1.0 + amps[0] * x.cos() + amps[1] * (2 * x).cos() + amps[2] * (3 * x).cos()
        out[key] = rescale(base, u.log())
    out["generic"] = generic_structure(3, 2.5, N, seed=1)
    return out


def divergence_suite(N: int = 800) -> list[Check]:
    """Divergence identities at N and 2N; the ratio certifies 4th-order differencing."""
    vals = {}
    for NN in (N, 2 * N):
        st = divergence_test_structures(NN)
        row = {}
        gen = divergence_residuals(st["generic"], 3).as_dict()
        row["div-newton-1-generic"] = gen["div_newton_1"]
        row["div-newton-2-generic"] = divergence_residuals(st["generic"], 2).as_dict()["div_newton_2"]
        row["div-newton-3-generic"] = gen["div_newton_3"]
        row["div-schouten-generic"] = gen["div_schouten"]
        row["div-E1-generic"] = divfree_residual(st["generic"], 1)
        for k in (2, 3):
            row[f"div-E{k}-lcf"] = divfree_residual(st["lcf"], k)
        for k in (1, 2):
            row[f"div-Ehat{k}-sphere"] = divfree_residual(st["sphere"], k, "Ehat")
        vals[NN] = row
    anchors = {"div-newton": "divergence of the weighted Newton tensors",
               "div-schouten": "divergence of the weighted Schouten tensor",
               "div-E": "divergence of the trace-adjusted Newton tensor",
               "div-Ehat": "divergence of the corrected tensor with scale"}
    out = []
    for name, v in vals[N].items():
        ratio = v / vals[2 * N][name]
        anchor = next(a for p, a in sorted(anchors.items(), key=lambda t: -len(t[0])) if name.startswith(p))
        out.append(Check(name, anchor, v, 1e-6, v <= 1e-6, {"value_2N": vals[2 * N][name], "ratio": ratio}))
        ok = 12.0 <= ratio <= 20.0
        out.append(Check(f"{name}-order", "fourth-order convergence of the differenced identity",
                         abs(ratio - 16.0), 4.0, ok, {"ratio": ratio}))
    return out


# ---------------------------------------------------------------------------
# variations

def first_variation_checks(N: int = 800, directions: int = 20, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    gen = generic_structure(3, 2.5, N, seed=3)
    for i in range(directions):
        d = random_direction(gen, rng)
        out += _from_reports(f"full-{i}-", full_variation_bundle(gen, d).reports)
    out += _from_reports("phi-map-", phi_map_consistency(gen, random_direction(gen, rng), 1.5))
    for k in (1, 2):
        out += _from_reports(f"conformal-k{k}-", first_variation_suite(gen, k, rng, directions=directions // 4))
    ws = generic_structure(3, 2.0, N, seed=4, kappa=1.5)
    for k in (1, 2):
        out += _from_reports(f"conformal-scale-k{k}-", first_variation_suite(ws, k, rng, directions=directions // 4))
        out += _from_reports(f"scale-k{k}-", scale_variation_suite(ws, k, rng, directions=directions))
    rl = build_model("round-lcf", 3, 2.5, N)
    x = Jet.variable(rl.r, rl.alpha.order)
    rl = rescale(rl, (1.0 + 0.1 * x.cos()).log())
    out += _from_reports("conformal-lcf-k3-", first_variation_suite(rl, 3, rng, directions=directions // 4))
    return out


def criticality_checks(N: int = 800, directions: int = 10, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    qe = build_model("const-v-qe", 2, 3, N)
    ws = build_model("weighted-sphere", 2, 2, N)
    for k in (1, 2):
        out += _from_reports("qe-", criticality_suite(qe, k, rng, directions))
        out += _from_reports("ws-", criticality_suite(ws, k, rng, directions))
    return out


def stability_checks(N: int = 800, size: int = 12, h0: float = 0.02) -> list[Check]:
    out = []
    qe = build_model("const-v-qe", 2, 3, N)
    basis = harmonic_basis(qe, size)
    for k, want in ((1, "positive"), (3, "negative")):
        A, F, E = hessian_matrices(qe, k, basis, h0)
        ev = np.linalg.eigvalsh(0.5 * (F + F.T))
        err = float(np.linalg.norm(E, 2))
        an = np.linalg.eigvalsh(A)
        if want == "positive":
            margin = ev[0] / err if err > 0 else math.inf
            ok = ev[0] > 0 and margin > 10
        else:
            margin = -ev[-1] / err if err > 0 else math.inf
            ok = ev[-1] < 0 and margin > 10
        out.append(Check(f"hessian-k{k}-{want}", "stability of the quasi-Einstein model",
                         float(ev[0] if want == "positive" else ev[-1]), 0.0, bool(ok),
                         {"fd_error": err, "margin": margin, "analytic_extreme": float(an[0] if want == "positive" else an[-1]),
                          "analytic_vs_fd": float(np.max(np.abs(A - F)))}))
    z = build_model("const-v-qe", 2, 2, N)
    basis = harmonic_basis(z, size)
    A, F, E = hessian_matrices(z, 2, basis, h0)
    val = float(max(np.max(np.abs(A)), np.max(np.abs(F))))
    out.append(Check("hessian-zero-form", "zero second variation at k = (m+n)/2", val, 1e-8, val <= 1e-8))
    return out


def self_adjointness_checks(N: int = 800, pairs: int = 6, seed: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    gen = generic_structure(3, 2.5, N, seed=6)
    gen2 = generic_structure(2, 2.5, N, seed=6)
    rl = build_model("round-lcf", 3, 2.5, N)
    x = Jet.variable(rl.r, rl.alpha.order)
    rl = rescale(rl, (1.0 + 0.1 * x.cos() + 0.05 * (2 * x).cos()).log())

    def asym(s, k):
        vals = []
        for _ in range(pairs):
            d1 = random_direction(s, rng, conformal=True)
            d2 = random_direction(s, rng, conformal=True)
            vals.append(antisymmetry(s, k, d1.jets(s)[2], d2.jets(s)[2]))
        return vals

    for k in (1, 2):
        for name, s in (("generic", gen), ("generic-n2", gen2), ("lcf", rl)):
            out.append(_max_check(f"self-adjoint-k{k}-{name}", "self-adjointness of the linearization",
                                  asym(s, k), 1e-6))
    out.append(_max_check("self-adjoint-k3-lcf", "self-adjointness of the linearization", asym(rl, 3), 1e-6))
    v = max(asym(gen2, 3))
    out.append(Check("not-self-adjoint-k3-generic-n2", "failure of self-adjointness without LCF", v, 1e-2,
                     v >= 1e-2))
    return out


def we_second_variation_checks(N: int = 800, seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    ws = build_model("weighted-sphere", 2, 2, N)
    es = einstein_scale(ws)
    out = []
    for k in (1, 2):
        for i in range(3):
            d = random_direction(ws, rng, conformal=True)
            r = we_second_variation(ws, k, d.jets(ws)[2], es.lam, es.kappa)
            res = max(abs(r["forms"] - r["fd"]), abs(r["assembled"] - r["fd"])) / (1 + abs(r["fd"]))
            out.append(Check(f"we-second-variation-k{k}-{i}", "second variation at weighted Einstein structures",
                             res, 1e-6, res <= 1e-6, r))
    return out


# ---------------------------------------------------------------------------
# solver

def obata_checks(N: int = 400, seeds=range(10), amplitude: float = 0.1) -> list[Check]:
    out = []
    base = build_model("const-v-qe", 2, 3, N)
    for k in (1, 2):
        for seed in seeds:
            t0 = time.perf_counter()
            st = FlowState.from_perturbation(base, k, amplitude, seed=seed)
            res = flow_solve(st)
            el = time.perf_counter() - t0
            c = res.certificate
            fit = c.fit_residual if c else math.inf
            pairing = obata_pairing(res.structure, 1.0 / st.u, k, "qe")
            ok = (res.converged and res.residual <= 1e-8 and fit <= 1e-6 and el <= 60
                  and c.passed and abs(pairing.integral) <= 1e-7)
            out.append(Check(f"obata-k{k}-seed{seed}", "rigidity of the quasi-Einstein model",
                             res.residual, 1e-8, bool(ok),
                             {"fit_residual": fit, "seconds": el, "iterations": st.iteration,
                              "divergence_residual": c.divergence_residual if c else None,
                              "pairing": pairing.integral, "one_signed": pairing.one_signed,
                              "min_cone_margin": float(min(res.margin_history))}))
    return out


def yk_checks(N: int = 400) -> list[Check]:
    base = build_model("weighted-sphere", 2, 2, N)
    out = []
    st = FlowState(base, np.zeros(25), 1)
    r = yk_solve(st, base.kappa)
    out.append(Check("yk-model-fixed", "criticality of the weighted sphere for the normalized functional",
                     max(r.pointwise_residual, r.integral_residual), 1e-8,
                     r.converged and st.iteration == 0, {"iterations": st.iteration}))
    st = FlowState.from_function(base, 1, lambda x: 1.3 + 0.4 * x.cos())
    r = yk_solve(st, base.kappa)
    out.append(Check("yk-rescaled-model", "weighted Einstein family on the sphere", r.fit[2], 1e-6,
                     r.converged and r.fit[2] <= 1e-6, {"a": r.fit[0], "b": r.fit[1]}))
    return out


def explorer_checks(N: int = 400, basis_size: int = 12) -> list[Check]:
    ws = build_model("weighted-sphere", 2, 2, N)
    out = []
    for which in ("I1", "I2"):
        r = rayleigh_inf(ws, which, basis_size)
        vals = dict(r.table)
        change = abs(vals[2 * basis_size] - vals[basis_size]) / max(abs(vals[basis_size]), 1e-300)
        ok = r.value > 0 and change < 0.01 and r.value > 1e-8
        out.append(Check(f"rayleigh-{which}", "Poincare-type inequality at weighted Einstein structures",
                         r.value, 0.0, bool(ok), r.as_dict()))
    rows = sobolev_scan(ws, 1, standard_families(ws, seed=0))
    kept = [row.ratio for row in rows if not row.excluded]
    worst = min(kept)
    out.append(Check("sobolev-k1", "sharp Sobolev-type inequality, proven case", 1 - worst, 1e-6,
                     worst >= 1 - 1e-6, {"members": len(rows), "excluded": sum(r.excluded for r in rows)}))
    return out
