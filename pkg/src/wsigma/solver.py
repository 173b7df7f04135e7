"""Constant weighted sigma_k-curvature in a conformal class.

The unknown is w = ln u expanded in even cosine modes cos(l pi r / L); the
structure is (u^-2 g, u^-1 v).  Jets of w are exact, so the curvature of
every iterate is evaluated without finite differences and the axis parity
is built into the basis.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq, minimize_scalar

from .geometry import (
    EVEN,
    Geometry,
    RotSymStructure,
    Sym2,
    Topology,
    einstein_scale,
    fd_D,
    integrate,
    interior_mask,
    nodal,
)
from .jets import Jet
from .variation import (
    conformal_linearization,
    exponents,
    functionals,
    harmonic_basis,
    is_weighted_lcf,
    normalized_total,
    volume_minus,
    we_quadratic_forms,
)


class FlowMode(enum.Enum):
    FIX_VOLUME_FK = "FixVolumeFk"
    FIX_SCALE_YK = "FixScaleYk"


class ConeExitError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# conformal factors in a cosine basis

def cosine_basis(s: RotSymStructure, modes: int) -> list[Jet]:
    x = Jet.variable(s.r, s.alpha.order)
    w = math.pi / s.L
    return [0.0 * x + 1.0] + [(x * (l * w)).cos() for l in range(1, modes + 1)]


def log_factor(basis: Sequence[Jet], coeffs: np.ndarray) -> Jet:
    out = coeffs[0] * basis[0]
    for c, b in zip(coeffs[1:], basis[1:]):
        out = out + c * b
    return out


def rescale(base: RotSymStructure, w: Jet, kappa: Optional[float] = None) -> RotSymStructure:
    """(u^-2 g, u^-1 v) with u = e^w."""
    e = (-w).exp()
    return RotSymStructure(base.r, base.alpha - w, base.f * e, base.v * e, base.n, base.m, base.mu,
                           base.kappa if kappa is None else kappa, base.topology, base.label, check=False)


def fit_coefficients(basis: Sequence[Jet], values: np.ndarray) -> np.ndarray:
    A = np.stack([b.value for b in basis], axis=1)
    return np.linalg.lstsq(A, values, rcond=None)[0]


@dataclass
class FlowState:
    base: RotSymStructure
    coeffs: np.ndarray
    k: int
    mode: FlowMode = FlowMode.FIX_VOLUME_FK
    step: float = 1.0
    iteration: int = 0
    residual_history: list = field(default_factory=list)
    seed: Optional[int] = None
    basis: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.basis is None:
            self.basis = cosine_basis(self.base, len(self.coeffs) - 1)

    @classmethod
    def from_function(cls, base: RotSymStructure, k: int, u: Callable[[Jet], Jet], modes: int = 24,
                      mode: FlowMode = FlowMode.FIX_VOLUME_FK) -> "FlowState":
        basis = cosine_basis(base, modes)
        x = Jet.variable(base.r, base.alpha.order)
        coeffs = fit_coefficients(basis, np.log(np.real(u(x).value)))
        return cls(base, coeffs, k, mode, basis=basis)

    @classmethod
    def from_perturbation(cls, base: RotSymStructure, k: int, amplitude: float, seed: int,
                          modes: int = 24, active: int = 4, mode: FlowMode = FlowMode.FIX_VOLUME_FK
                          ) -> "FlowState":
        """u = 1 + amplitude * bump; the bump mixes the first ``active`` modes with
        weights decaying like l^-2 and is scaled to unit C^2 norm (max |b| + max |b''|)."""
        rng = np.random.default_rng(seed)
        basis = cosine_basis(base, modes)
        a = rng.standard_normal(active) / np.arange(1, active + 1) ** 2
        bump = sum(a[i] * basis[i + 1] for i in range(active))
        scale = np.max(np.abs(bump.value)) + np.max(np.abs(bump.derivative_values(2)))
        bump = bump.value / scale
        coeffs = fit_coefficients(basis, np.log(1.0 + amplitude * bump))
        return cls(base, coeffs, k, mode, seed=seed, basis=basis)

    @property
    def w(self) -> Jet:
        return log_factor(self.basis, self.coeffs)

    @property
    def u(self) -> np.ndarray:
        return np.exp(np.real(self.w.value))

    def structure(self, kappa: Optional[float] = None) -> RotSymStructure:
        return rescale(self.base, self.w, kappa)


# ---------------------------------------------------------------------------
# cone and residual helpers

def solve_mask(s: RotSymStructure) -> np.ndarray:
    return interior_mask(s)


def cone_margin(s: RotSymStructure, k: int, mask: Optional[np.ndarray] = None) -> float:
    """min over masked nodes of sigma_1..sigma_k and the eigenvalues of T_{k-1}."""
    g = s.geometry
    mask = solve_mask(s) if mask is None else mask
    vals = []
    for j in range(1, k + 1):
        vals.append(np.min(nodal(g.sigma(j), s.r.shape)[mask]))
    T = g.newton_tensor(k - 1)
    vals.append(np.min(nodal(T.rad, s.r.shape)[mask]))
    vals.append(np.min(nodal(T.tan, s.r.shape)[mask]))
    return float(min(vals))


def sigma_spread(s: RotSymStructure, k: int, mask: Optional[np.ndarray] = None) -> tuple[float, float]:
    sig = nodal(s.geometry.sigma(k), s.r.shape)
    mean = integrate(s, sig) / integrate(s, np.ones_like(s.r))
    mask = solve_mask(s) if mask is None else mask
    return float(np.max(np.abs(sig[mask] - mean))), float(mean)


def fit_cosine_family(s: RotSymStructure, u: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit u ~ a + b cos(pi r / L); returns (a, b, relative max residual)."""
    c = np.cos(math.pi * s.r / s.L)
    A = np.stack([np.ones_like(c), c], axis=1)
    (a, b), *_ = np.linalg.lstsq(A, u, rcond=None)
    res = float(np.max(np.abs(u - a - b * c)) / np.max(np.abs(u)))
    return float(a), float(b), res


# ---------------------------------------------------------------------------
# divergence-free tensors and Obata pairings

def hat_quantities(s: RotSymStructure, k: int):
    """(E-hat radial, E-hat tangential, sigma-hat) with scale; needs m+n != 2k."""
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    if abs(c - 2 * k) < 1e-12:
        raise ValueError("the corrected tensors are undefined when m+n = 2k")
    T = g.newton_tensor(k)
    sig = g.sigma(k)
    sk = g.newton_scalar(k - 1)
    vinv = g.vinv
    U = g.newton_tensor(k - 1, lam=(m - 1) / m * g.Ytilde, m=m - 1)
    Q = integrate(s, nodal(sk * vinv, s.r.shape)) / volume_minus(s)
    corr = m / (c - 2 * k) * s.kappa * vinv
    shift = m * (c - k) / (c * (c - 1) * (c - 2 * k)) * Q * s.kappa * vinv
    Er = T.rad - (c - k) / c * sig + corr * (U.rad - (c - k) / c * sk) - shift
    Et = T.tan - (c - k) / c * sig + corr * (U.tan - (c - k) / c * sk) - shift
    sig_hat = sig + corr * (sk - Q)
    return Er, Et, sig_hat


def divfree_residual(s: RotSymStructure, k: int, variant: str = "E",
                     mask: Optional[np.ndarray] = None) -> float:
    """Interior max of delta_phi E - (1/m) tr E dphi + ((m+n-k)/(m+n)) d sigma (radial)."""
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    shp = s.r.shape
    if variant == "E":
        T = g.newton_tensor(k)
        sig = g.sigma(k)
        Er = T.rad - (c - k) / c * sig
        Et = T.tan - (c - k) / c * sig
    elif variant == "Ehat":
        if not s.kappa > 0:
            raise ValueError("the corrected variant needs kappa > 0")
        Er, Et, sig = hat_quantities(s, k)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    with np.errstate(all="ignore"):
        div = fd_D(s, Er) + nodal((n - 1) * g.H * (Er - Et) - g.phis * Er, shp)
        tr = nodal(Er + (n - 1) * Et, shp)
        res = div - tr * nodal(g.phis, shp) / m + (c - k) / c * fd_D(s, sig)
    mask = interior_mask(s) if mask is None else mask
    return float(np.max(np.abs(res[mask])))


@dataclass(frozen=True)
class ObataPairing:
    integral: float
    integrand: np.ndarray
    sign_field: Optional[np.ndarray]
    one_signed: Optional[bool]


def obata_pairing(s: RotSymStructure, u: np.ndarray, k: int, variant: str = "qe") -> ObataPairing:
    """Pairings used in the rigidity arguments.

    ``qe``: u = v / v_ref; returns the integral of <E_k, Hess u + <grad u, grad phi> g/m>
    together with the sign field u <E_k, P - Z g>.
    ``we``: the pairing <E-hat_k, v(P - Z-tilde g) + kappa g> on the sphere's class.
    """
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    shp = s.r.shape
    mask = interior_mask(s, v_floor=0.0)
    if variant == "qe":
        T = g.newton_tensor(k, lam=g.Y)
        sig = g.sigma(k, lam=g.Y)
        E = Sym2(T.rad - (c - k) / c * sig, T.tan - (c - k) / c * sig)
        uj = s.nodal_jet(u, EVEN)
        hess = g.hessian(uj)
        shift = g.D(uj) * g.phis / m
        X = Sym2(hess.rad + shift, hess.tan + shift)
        integrand = nodal(g.inner(E, X), shp)
        Z = g.Y / m
        sign = nodal(uj * g.inner(E, Sym2(g.P.rad - Z, g.P.tan - Z)), shp)
        scale = max(1.0, float(np.max(np.abs(sign[mask]))))
        one = bool(np.all(sign[mask] >= -1e-7 * scale) or np.all(sign[mask] <= 1e-7 * scale))
        return ObataPairing(float(integrate(s, integrand)), integrand, sign, one)
    if variant == "we":
        Er, Et, _ = hat_quantities(s, k)
        Zt = g.Ztilde
        X = Sym2(s.v * (g.P.rad - Zt) + s.kappa, s.v * (g.P.tan - Zt) + s.kappa)
        integrand = nodal(g.inner(Sym2(Er, Et), X), shp)
        return ObataPairing(float(integrate(s, integrand)), integrand, None, None)
    raise ValueError(f"unknown pairing {variant!r}")


@dataclass(frozen=True)
class ObataCertificate:
    c: float
    a: float
    b: float
    fit_residual: float
    divergence_residual: float
    cone_margin: float
    pairing: float
    tol: float = 1e-6

    @property
    def passed(self) -> bool:
        return bool(self.fit_residual <= self.tol and self.divergence_residual <= self.tol)

    def as_dict(self) -> dict:
        return {"c": self.c, "a": self.a, "b": self.b, "fit_residual": self.fit_residual,
                "divergence_residual": self.divergence_residual, "cone_margin": self.cone_margin,
                "pairing": self.pairing, "pass": self.passed}


def obata_certificate(state: FlowState, variant: str = "E", tol: float = 1e-6) -> ObataCertificate:
    s = state.structure()
    u = state.u
    a, b, res = fit_cosine_family(s, u)
    div = divfree_residual(s, state.k, variant)
    margin = cone_margin(s, state.k)
    pairing = obata_pairing(s, 1.0 / u, state.k, "qe").integral if variant == "E" else float("nan")
    return ObataCertificate(float(np.mean(u)), a, b, res, div, margin, pairing, tol)


# ---------------------------------------------------------------------------
# constrained flow for F_k on unit volume

@dataclass
class FlowResult:
    state: FlowState
    structure: RotSymStructure
    converged: bool
    reason: str
    residual: float
    certificate: Optional[ObataCertificate]
    functional_history: list
    margin_history: list
    elapsed: float

    def manifest(self) -> dict:
        return {
            "k": self.state.k,
            "mode": self.state.mode.value,
            "seed": self.state.seed,
            "iterations": self.state.iteration,
            "converged": self.converged,
            "reason": self.reason,
            "residual": self.residual,
            "residual_history": list(self.state.residual_history),
            "functional_history": list(self.functional_history),
            "margin_history": list(self.margin_history),
            "certificate": None if self.certificate is None else self.certificate.as_dict(),
        }


def project_volume(state: FlowState, target: float = 1.0) -> None:
    """Shift the constant mode so that the weighted volume equals ``target``."""
    c = state.base.m + state.base.n
    for _ in range(3):
        V = integrate(state.structure(), np.ones_like(state.base.r))
        state.coeffs[0] += math.log(V / target) / c


def flow_solve(state: FlowState, max_iter: int = 50, tol: float = 1e-8,
               armijo: float = 1e-4, max_halvings: int = 30) -> FlowResult:
    """Damped Newton flow to constant sigma_k on the unit-volume slice.

    The step solves the linearized equation D sigma_k[psi] - const = -(sigma_k - mean)
    for non-constant modes; it is a descent direction of F_k when k < (m+n)/2
    and an ascent direction when k > (m+n)/2, which is the sign that moves
    toward the stable critical point.  Steps are accepted by Armijo on the
    residual norm, subject to the cone condition and to monotonicity of the
    normalized functional.
    """
    t0 = time.perf_counter()
    base, k = state.base, state.k
    m, n = base.m, base.n
    c = m + n
    if k >= 3 and not is_weighted_lcf(base):
        raise ValueError("k >= 3 needs a weighted-LCF base")
    sign = 1.0 if 2 * k < c else (-1.0 if 2 * k > c else 0.0)
    project_volume(state)
    mask = solve_mask(base)
    fhist, mhist = [], []

    def evaluate(coeffs):
        s = rescale(base, log_factor(state.basis, coeffs))
        spread, mean = sigma_spread(s, k, mask)
        sig = nodal(s.geometry.sigma(k), s.r.shape)
        rms = float(np.sqrt(np.mean((sig[mask] - mean) ** 2)))
        return s, spread, rms, normalized_total(s, k, s.kappa), sig - mean

    s, spread, rms, G, R = evaluate(state.coeffs)
    margin = cone_margin(s, k, mask)
    if margin <= 0:
        raise ConeExitError(f"initial data outside the positive cone (margin {margin:.3e})")
    reason = "max-iter"
    converged = False
    while True:
        state.residual_history.append(spread)
        fhist.append(G)
        mhist.append(margin)
        if spread <= tol:
            converged, reason = True, "converged"
            break
        if state.iteration >= max_iter:
            break
        cols = [nodal(conformal_linearization(s, k, c * b), s.r.shape)[mask] for b in state.basis[1:]]
        cols.append(-np.ones(int(mask.sum())))
        A = np.stack(cols, axis=1)
        sol = np.linalg.lstsq(A, -R[mask], rcond=None)[0]
        delta = np.concatenate([[0.0], sol[:-1]])
        tau = 1.0
        accepted = False
        for _ in range(max_halvings):
            trial = state.coeffs + tau * delta
            tstate = FlowState(base, trial.copy(), k, state.mode, basis=state.basis)
            project_volume(tstate)
            ts, tspread, trms, tG, tR = evaluate(tstate.coeffs)
            tmargin = cone_margin(ts, k, mask)
            monotone = sign * (tG - G) <= 1e-12 * abs(G) + 1e-14
            if tmargin > 0 and trms <= (1 - armijo * tau) * rms and monotone:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            reason = "line-search"
            break
        state.coeffs = tstate.coeffs
        state.step = tau
        state.iteration += 1
        s, spread, rms, G, R, margin = ts, tspread, trms, tG, tR, tmargin
    cert = obata_certificate(state) if converged else None
    return FlowResult(state, s, converged, reason, spread, cert, fhist, mhist, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Euler system of the normalized functional with positive scale

@dataclass
class YkResult:
    state: FlowState
    structure: RotSymStructure
    converged: bool
    reason: str
    pointwise_residual: float
    integral_residual: float
    fit: tuple
    einstein_residual: float
    residual_history: list


def yk_residuals(s: RotSymStructure, k: int, mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Pointwise Euler residual times (m+n-2k), and the relative integral residual."""
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    shp = s.r.shape
    sig = nodal(g.sigma(k), shp)
    sk = nodal(g.newton_scalar(k - 1), shp)
    vinv = nodal(g.vinv, shp)
    V0 = integrate(s, np.ones_like(s.r))
    V1 = volume_minus(s)
    mean = integrate(s, sig) / V0
    Q = integrate(s, sk * vinv) / V1
    with np.errstate(all="ignore"):
        point = (c - 2 * k) * (sig - mean) + m * s.kappa * vinv * (sk - Q)
    lhs = integrate(s, sig)
    rhs = c * (2 * m + n - 2) / (2 * k * (c - 1)) * s.kappa * integrate(s, vinv * sk)
    return point[mask], float((lhs - rhs) / (abs(lhs) + abs(rhs)))


def yk_solve(state: FlowState, kappa: float, max_iter: int = 40, tol: float = 1e-8,
             fd_step: float = 1e-6) -> YkResult:
    """Damped Newton for the Euler system of Y_k at fixed scale.

    Non-constant modes solve the pointwise equation; after each step the
    constant mode is adjusted by a one-dimensional root find so that the
    integral constraint holds.
    """
    base, k = state.base, state.k
    if base.mu != 0:
        raise ValueError("the Euler system is posed for mu = 0")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if k >= 3 and not is_weighted_lcf(base):
        raise ValueError("k >= 3 needs a weighted-LCF base")
    mask = solve_mask(base)
    state.mode = FlowMode.FIX_SCALE_YK

    def struct(coeffs):
        return rescale(base, log_factor(state.basis, coeffs), kappa)

    def resid(coeffs):
        return yk_residuals(struct(coeffs), k, mask)

    def fix_scale(coeffs):
        def f(c0):
            cc = coeffs.copy()
            cc[0] = c0
            return resid(cc)[1]
        c0 = coeffs[0]
        f0 = f(c0)
        if abs(f0) <= 1e-15:
            return coeffs
        lo, hi = c0 - 0.25, c0 + 0.25
        for _ in range(40):
            if f(lo) * f(hi) < 0:
                break
            lo, hi = lo - 0.5 * (hi - lo), hi + 0.5 * (hi - lo)
        else:
            raise ConvergenceError("could not bracket the scale constraint")
        out = coeffs.copy()
        out[0] = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return out

    point, integ = resid(state.coeffs)
    res = float(np.max(np.abs(point)))
    reason, converged = "max-iter", False
    while True:
        state.residual_history.append(max(res, abs(integ)))
        if res <= tol and abs(integ) <= tol:
            converged, reason = True, "converged"
            break
        if state.iteration >= max_iter:
            break
        if cone_margin(struct(state.coeffs), k, mask) <= 0:
            raise ConeExitError("iterate left the positive cone")
        cols = []
        for l in range(1, len(state.coeffs)):
            e = np.zeros_like(state.coeffs)
            e[l] = fd_step
            cols.append((resid(state.coeffs + e)[0] - resid(state.coeffs - e)[0]) / (2 * fd_step))
        A = np.stack(cols, axis=1)
        delta = np.concatenate([[0.0], np.linalg.lstsq(A, -point, rcond=None)[0]])
        tau, accepted = 1.0, False
        norm0 = float(np.linalg.norm(point))
        for _ in range(30):
            trial = fix_scale(state.coeffs + tau * delta)
            tp, ti = resid(trial)
            if cone_margin(struct(trial), k, mask) > 0 and np.linalg.norm(tp) <= (1 - 1e-4 * tau) * norm0:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            # the scale adjustment alone may finish the job
            trial = fix_scale(state.coeffs)
            tp, ti = resid(trial)
            if np.linalg.norm(tp) >= norm0:
                reason = "line-search"
                break
        state.coeffs, state.step = trial, tau
        state.iteration += 1
        point, integ = tp, ti
        res = float(np.max(np.abs(point)))
    s = struct(state.coeffs)
    fit = fit_cosine_family(s, state.u)
    es = einstein_scale(s)
    return YkResult(state, s, converged, reason, res, abs(integ), fit, es.residual,
                    list(state.residual_history))


# ---------------------------------------------------------------------------
# conjecture explorers (report only)

@dataclass(frozen=True)
class RayleighResult:
    which: str
    basis_size: int
    value: float
    coefficients: np.ndarray
    table: tuple
    null_directions: int
    value_modulo_null: float
    table_modulo_null: tuple
    spectrum: np.ndarray

    def as_dict(self) -> dict:
        return {"which": self.which, "basis_size": self.basis_size, "value": self.value,
                "null_directions": self.null_directions, "value_modulo_null": self.value_modulo_null,
                "table": [list(t) for t in self.table],
                "table_modulo_null": [list(t) for t in self.table_modulo_null],
                "spectrum": [float(x) for x in self.spectrum[:6]]}


def _constrained_min(A: np.ndarray, b: np.ndarray, C: Optional[np.ndarray] = None) -> tuple[float, np.ndarray]:
    """min x^T A x subject to b.x = 1 and C x = 0; -inf when A is not positive on the feasible directions."""
    rows = b[None, :] if C is None else np.vstack([b[None, :], C])
    Z = np.linalg.svd(rows)[2][rows.shape[0]:].T
    if Z.shape[1] and np.linalg.eigvalsh(Z.T @ A @ Z).min() <= 0:
        return float("-inf"), np.full(len(b), np.nan)
    nc = rows.shape[0]
    K = np.zeros((len(b) + nc, len(b) + nc))
    K[:len(b), :len(b)] = 2 * A
    K[:len(b), len(b):] = rows.T
    K[len(b):, :len(b)] = rows
    rhs = np.zeros(len(b) + nc)
    rhs[len(b)] = 1.0
    x = np.linalg.lstsq(K, rhs, rcond=None)[0][:len(b)]
    return float(x @ A @ x), x


def rayleigh_inf(s: RotSymStructure, which: str, basis_size: int, lam: Optional[float] = None,
                 kappa: Optional[float] = None, null_tol: float = 1e-8) -> RayleighResult:
    """Minimum of I_1 or I_2 over rotational harmonics subject to the integral of psi being 1.

    Also reports the generalized spectrum of the form against L^2(dnu), the
    number of null directions, and the constrained minimum with those null
    directions projected out.  A null direction with nonzero integral makes
    the plain infimum zero.
    """
    if which not in ("I1", "I2"):
        raise ValueError("which must be 'I1' or 'I2'")
    if s.mu != 0:
        raise ValueError("explorer is posed for mu = 0")
    if lam is None or kappa is None:
        es = einstein_scale(s)
        lam = es.lam if lam is None else lam
        kappa = es.kappa if kappa is None else kappa
    if not (lam > 0 and kappa > 0):
        raise ValueError("needs lambda > 0 and kappa > 0")
    with np.errstate(all="ignore"):
        I1, I2 = we_quadratic_forms(s, lam, kappa)
        form = I1 if which == "I1" else I2
        table, table_null = [], []
        sizes = sorted({max(2, basis_size // 2), basis_size, 2 * basis_size})
        result = None
        for size in sizes:
            basis = harmonic_basis(s, size, start=0, mean_free=False)
            A = np.array([[form(bi, bj) for bj in basis] for bi in basis])
            A = 0.5 * (A + A.T)
            M = np.array([[integrate(s, (bi * bj).value) for bj in basis] for bi in basis])
            b = np.array([integrate(s, bi.value) for bi in basis])
            evals, evecs = eigh(A, M)
            null = evecs[:, np.abs(evals) <= null_tol * max(1.0, abs(evals).max())]
            val, x = _constrained_min(A, b)
            valn, _ = _constrained_min(A, b, (M @ null).T if null.shape[1] else None)
            table.append((size, val))
            table_null.append((size, valn))
            if size == basis_size:
                result = (val, x, null.shape[1], valn, evals)
    val, x, nnull, valn, evals = result
    return RayleighResult(which, basis_size, val, x, tuple(table), nnull, valn, tuple(table_null), evals)


@dataclass(frozen=True)
class ScanRow:
    family: str
    parameter: float
    ratio: float
    kappa: Optional[float]
    excluded: bool
    cone_nodes_failed: int


def _cone_failures(s: RotSymStructure, k: int) -> int:
    g = s.geometry
    mask = interior_mask(s, v_floor=0.0)
    bad = np.zeros(mask.sum(), dtype=bool)
    for j in range(1, k + 1):
        bad |= nodal(g.sigma(j), s.r.shape)[mask] <= 0
    return int(bad.sum())


def y_quotient(s: RotSymStructure, k: int) -> tuple[float, float]:
    """min over kappa > 0 of Y_k(g, v, kappa); returns (value, minimizing kappa)."""
    g0 = Geometry(s.with_kappa(0.0))
    F0 = integrate(s, nodal(g0.sigma(k), s.r.shape))
    p, a, b = exponents(s.m, s.n, k)
    V0 = integrate(s, np.ones_like(s.r))
    V1 = volume_minus(s)

    def Y(logk):
        kap = math.exp(logk)
        Ft = integrate(s, nodal(Geometry(s.with_kappa(kap)).sigma(k), s.r.shape))
        return kap ** (-p) * Ft * V1 ** (-a) * V0 ** (-b)

    if k == 1:
        # kappa^-p (F + m kappa V1) has its minimum at p F / ((1 - p) m V1)
        kap = p * F0 / ((1 - p) * s.m * V1)
        if kap > 0:
            return Y(math.log(kap)), kap
    res = minimize_scalar(Y, bounds=(-8.0, 8.0), method="bounded", options={"xatol": 1e-12})
    return float(res.fun), math.exp(res.x)


def sobolev_scan(base: RotSymStructure, k: int, families: dict[str, Sequence[tuple[float, Callable]]],
                 reference: Optional[float] = None) -> list[ScanRow]:
    """Conjectured-inequality ratio across families of conformal factors u(x).

    With positive scale (mu = 0, weighted sphere class) the ratio is the
    normalized functional minimized over kappa, divided by its value at the
    model; with kappa = 0 (hemisphere class) it is the volume-normalized total
    sigma_k divided by the model value.
    """
    scaled = base.topology is Topology.CLOSED_SPHERE and base.mu == 0
    if reference is None:
        reference = y_quotient(base, k)[0] if scaled else normalized_total(base, k)
    rows = []
    x = Jet.variable(base.r, base.alpha.order)
    for name, members in families.items():
        for param, ufn in members:
            w = ufn(x).log()
            s = rescale(base, w, 0.0 if scaled else base.kappa)
            if scaled:
                val, kap = y_quotient(s, k)
                fails = _cone_failures(s.with_kappa(kap), k)
            else:
                val, kap = normalized_total(s, k), None
                fails = _cone_failures(s, k)
            rows.append(ScanRow(name, float(param), float(val / reference), kap, fails > 0, fails))
    return rows


def standard_families(base: RotSymStructure, seed: int = 0, count: int = 6, amplitude: float = 0.15
                      ) -> dict[str, list[tuple[float, Callable]]]:
    """Model (u = 1), model rescalings u = 1 + b cos(pi r/L), and random smooth bumps."""
    rng = np.random.default_rng(seed)
    w = math.pi / base.L
    fams: dict[str, list] = {"model": [(0.0, lambda x: 0.0 * x + 1.0)]}
    fams["rescalings"] = [(b, (lambda b: lambda x: 1.0 + b * (x * w).cos())(b))
                          for b in np.linspace(-0.6, 0.6, count)]
    bumps = []
    for i in range(count):
        a = rng.standard_normal(4) / (2 + np.arange(4)) ** 2

        def u(x, a=a):
            out = 0.0 * x
            for j, aj in enumerate(a):
                out = out + aj * (x * ((j + 2) * w)).cos()
            return (amplitude * out).exp()
        bumps.append((float(i), u))
    fams["bumps"] = bumps
    return fams
