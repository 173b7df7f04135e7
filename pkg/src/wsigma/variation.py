"""Total curvature functionals and their first and second variations.

Every analytic formula is paired with a finite-difference oracle along an
explicit path of structures:

* conformal directions psi follow (e^{-2t psi/(m+n)} g, e^{-t psi/(m+n)} v);
* full directions (h, psi) follow the linear path g + t g', v + t v' with
  g' = h - 2(psi + tr h/2) g/(m+n) and v' = -(psi + tr h/2) v/(m+n).

Tensors are diagonal in the orthonormal frame, so h is the pair
(h_rad, h_tan) of orthonormal components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import (
    EVEN,
    Field,
    Geometry,
    RotSymStructure,
    Sym2,
    _val,
    binom_real,
    integrate,
    interior_mask,
    nodal,
)
from .jets import Jet

LCF_TOL = 1e-8


class NotVariationalError(ValueError):
    """sigma_k with k >= 3 is only variational on weighted-LCF classes."""


class ScaleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# finite-difference oracle

def richardson_first(fn: Callable[[float], object], h0: float):
    """Central difference at h0 and h0/2 with one Richardson step.

    Returns (derivative, error bar, steps); works elementwise on arrays.
    """
    d1 = (np.asarray(fn(h0)) - np.asarray(fn(-h0))) / (2 * h0)
    d2 = (np.asarray(fn(h0 / 2)) - np.asarray(fn(-h0 / 2))) / h0
    return (4 * d2 - d1) / 3, np.abs(d2 - d1) / 3, (h0, h0 / 2)


def richardson_second(fn: Callable[[float], float], h0: float, f0: Optional[float] = None):
    f0 = fn(0.0) if f0 is None else f0
    s1 = (fn(h0) - 2 * f0 + fn(-h0)) / h0**2
    s2 = (fn(h0 / 2) - 2 * f0 + fn(-h0 / 2)) / (h0 / 2) ** 2
    return (4 * s2 - s1) / 3, abs(s2 - s1) / 3, (h0, h0 / 2)


@dataclass(frozen=True)
class VariationReport:
    name: str
    anchor: str
    analytic: float
    fd: float
    residual: float
    steps: tuple
    error_bar: float = 0.0
    tol: float = 1e-5

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "analytic": self.analytic,
            "fd": self.fd,
            "residual": self.residual,
            "error_bar": self.error_bar,
            "steps": list(self.steps),
            "pass": self.passed,
        }


def relative_residual(a: float, b: float) -> float:
    return abs(a - b) / (1 + abs(a))


def scalar_report(name, anchor, analytic, fd, steps, err=0.0, tol=1e-5) -> VariationReport:
    a, b = float(np.real(analytic)), float(np.real(fd))
    return VariationReport(name, anchor, a, b, relative_residual(a, b), tuple(steps), float(err), tol)


def field_report(name, anchor, analytic, fd, steps, mask, err=None, tol=1e-5) -> VariationReport:
    """Pointwise comparison; stores the pair at the node of largest relative error."""
    a = np.real(np.asarray(analytic))[mask]
    b = np.real(np.asarray(fd))[mask]
    rel = np.abs(a - b) / (1 + np.abs(a))
    i = int(np.argmax(rel))
    e = 0.0 if err is None else float(np.max(np.asarray(err)[mask]))
    return VariationReport(name, anchor, float(a[i]), float(b[i]), float(rel[i]), tuple(steps), e, tol)


def default_step(*norms: float) -> float:
    return 1e-3 * (1 + max((abs(x) for x in norms), default=0.0))


# ---------------------------------------------------------------------------
# directions and paths

@dataclass(frozen=True)
class Direction:
    h_rad: Optional[Field] = None
    h_tan: Optional[Field] = None
    psi: Optional[Field] = None

    @property
    def conformal(self) -> bool:
        return self.h_rad is None and self.h_tan is None

    def jets(self, s: RotSymStructure) -> tuple[Jet, Jet, Jet]:
        zero = Jet.constant(0.0, s.r.shape, s.alpha.order)
        hr = zero if self.h_rad is None else s.as_jet(self.h_rad, EVEN)
        ht = zero if self.h_tan is None else s.as_jet(self.h_tan, EVEN)
        ps = zero if self.psi is None else s.as_jet(self.psi, EVEN)
        return hr, ht, ps

    def is_mean_zero(self, s: RotSymStructure, tol: float = 1e-10) -> bool:
        _, _, ps = self.jets(s)
        return abs(integrate(s, ps.value)) <= tol * (1 + integrate(s, np.abs(ps.value)))

    def norm(self, s: RotSymStructure) -> float:
        return float(max(np.max(np.abs(j.value)) for j in self.jets(s)))


def mean_zero(s: RotSymStructure, psi: Jet) -> Jet:
    return psi - integrate(s, psi.value) / integrate(s, np.ones_like(s.r))


def random_direction(s: RotSymStructure, rng: np.random.Generator, conformal: bool = False,
                     modes: int = 4, mean_free: bool = False) -> Direction:
    """Smooth rotationally symmetric direction; h_tan - h_rad vanishes at the axes."""
    x = Jet.variable(s.r, s.alpha.order)
    scale = np.pi / s.L if s.L > 0 else 1.0

    def series():
        c = rng.standard_normal(modes) / (1 + np.arange(modes)) ** 2
        out = 0.0 * x
        for j, cj in enumerate(c):
            out = out + cj * (x * (j * scale)).cos()
        return out

    psi = series()
    if mean_free:
        psi = mean_zero(s, psi)
    if conformal:
        return Direction(psi=psi)
    hr = series()
    sn = (x * scale).sin()
    ht = hr + sn * sn * series()
    return Direction(hr, ht, psi)


def conformal_path(s: RotSymStructure, psi: Jet) -> Callable[[float], RotSymStructure]:
    c = s.m + s.n

    def at(t: float) -> RotSymStructure:
        if t == 0:
            return s
        w = psi * (t / c)
        e = (-w).exp()
        return RotSymStructure(s.r, s.alpha - w, s.f * e, s.v * e, s.n, s.m, s.mu, s.kappa,
                               s.topology, s.label, check=False)

    return at


def chart_tangent(s: RotSymStructure, d: Direction) -> tuple[Jet, Jet, Jet]:
    """(g'_rad, g'_tan, v'/v) of the tangent vector attached to (h, psi)."""
    hr, ht, ps = d.jets(s)
    c = s.m + s.n
    c0 = (ps + 0.5 * (hr + (s.n - 1) * ht)) * (1.0 / c)
    return hr - 2 * c0, ht - 2 * c0, -c0


def chart_path(s: RotSymStructure, d: Direction) -> Callable[[float], RotSymStructure]:
    gr, gt, vd = chart_tangent(s, d)

    def at(t: float) -> RotSymStructure:
        if t == 0:
            return s
        return RotSymStructure(s.r, s.alpha + 0.5 * (1.0 + t * gr).log(),
                               s.f * (1.0 + t * gt).sqrt(), s.v * (1.0 + t * vd), s.n, s.m,
                               s.mu, s.kappa, s.topology, s.label, check=False)

    return at


# ---------------------------------------------------------------------------
# functionals

@dataclass(frozen=True)
class FunctionalValues:
    k: int
    F: float
    Ftilde: float
    V0: float
    V_minus1: float
    Z: Optional[float]
    Y: Optional[float]


def exponents(m: float, n: int, k: int) -> tuple[float, float, float]:
    """(p, a, b): kappa^-p, V_{-1}^-a, V_0^-b in the normalized functional."""
    c = m + n
    p = 2 * m * k * (c - 1) / (c * (2 * m + n - 2))
    a = 2 * m * k / (c * (2 * m + n - 2))
    b = (c - 2 * k) / c
    return p, a, b


def total_sigma(s: RotSymStructure, k: int, kappa: Optional[float] = None) -> float:
    g = s.geometry if kappa is None or kappa == s.kappa else Geometry(s.with_kappa(kappa))
    return float(np.real(integrate(s, nodal(g.sigma(k), s.r.shape))))


def volume_minus(s: RotSymStructure, j: float = 1.0) -> float:
    """Integral of v^-j d nu."""
    return float(np.real(integrate(s, np.ones_like(s.r), v_power=s.m - j)))


def functionals(s: RotSymStructure, k: int) -> FunctionalValues:
    g = s.geometry
    F = total_sigma(s, k, 0.0)
    Ft = total_sigma(s, k) if s.kappa != 0 else F
    V0 = float(integrate(s, np.ones_like(s.r)))
    V1 = volume_minus(s, 1.0)
    Z = Y = None
    if s.kappa > 0:
        p, a, b = exponents(s.m, s.n, k)
        Z = s.kappa ** (-p) * Ft
        Y = Z * V1 ** (-a) * V0 ** (-b)
    return FunctionalValues(k, F, Ft, V0, V1, Z, Y)


def y_functional(s: RotSymStructure, k: int, kappa: Optional[float] = None) -> float:
    kappa = s.kappa if kappa is None else kappa
    if not kappa > 0:
        raise ScaleError("the normalized functional needs kappa > 0")
    return functionals(s.with_kappa(kappa), k).Y


def z_functional(s: RotSymStructure, k: int, kappa: Optional[float] = None) -> float:
    kappa = s.kappa if kappa is None else kappa
    if not kappa > 0:
        raise ScaleError("the scale-weighted functional needs kappa > 0")
    return functionals(s.with_kappa(kappa), k).Z


def normalized_total(s: RotSymStructure, k: int, kappa: float = 0.0) -> float:
    """F_k V_0^{-(m+n-2k)/(m+n)}, invariant under homotheties."""
    _, _, b = exponents(s.m, s.n, k)
    return total_sigma(s, k, kappa) * float(integrate(s, np.ones_like(s.r))) ** (-b)


# ---------------------------------------------------------------------------
# conformal linearization

def a_residual(s: RotSymStructure) -> float:
    g = s.geometry
    mask = interior_mask(s)
    out = np.max(np.abs(g.Ara.value[mask]))
    if s.n > 2:
        out = max(out, np.max(np.abs(g.Aab.value[mask])))
    return float(out)


def is_weighted_lcf(s: RotSymStructure, tol: float = LCF_TOL) -> bool:
    return a_residual(s) <= tol


def conformal_linearization(s: RotSymStructure, k: int, psi: Field, form: str = "divergence") -> Jet:
    """D sigma_k[psi] along the conformal curve, with scale kappa."""
    g = s.geometry
    ps = s.as_jet(psi, EVEN)
    m, n = s.m, s.n
    c = m + n
    if k < 1:
        raise ValueError("k must be at least 1")
    zeroth = (2 * k * g.sigma(k) - m * s.kappa * g.vinv * g.newton_scalar(k - 1)) * ps * (1.0 / c)
    dps = g.D(ps)
    T = g.newton_tensor(k - 1)
    if form == "hessian":
        hess = g.hessian(ps)
        second = g.inner(T, hess) - g.newton_scalar(k - 1) * g.phis * dps
    else:
        second = g.div_form(T.rad * dps)
        if k >= 3:
            second = second - g.obstruction(k) * dps
    return zeroth + ((c - 2) / c) * second


def closed_form_we_linearization(s: RotSymStructure, k: int, psi: Field, lam: float, kappa: float) -> Jet:
    """Linearization at a weighted Einstein structure in closed form.

    binom(m+n-1, k-1) lambda^{k-1} (2 lambda - m kappa v^-1/(m+n) + (m+n-2) Delta_phi/(m+n)) psi
    """
    g = s.geometry
    ps = s.as_jet(psi, EVEN)
    c = s.m + s.n
    coef = binom_real(c - 1, k - 1) * lam ** (k - 1)
    return coef * ((2 * lam - s.m * kappa * g.vinv / c) * ps + ((c - 2) / c) * g.weighted_laplacian(ps))


def linearization_report(s: RotSymStructure, k: int, psi: Field, h0: Optional[float] = None,
                         tol: float = 1e-6) -> VariationReport:
    ps = s.as_jet(psi, EVEN)
    mask = interior_mask(s)
    an = nodal(conformal_linearization(s, k, ps), s.r.shape)
    path = conformal_path(s, ps)
    h0 = default_step(float(np.max(np.abs(ps.value)))) if h0 is None else h0
    d, err, steps = richardson_first(lambda t: nodal(path(t).geometry.sigma(k), s.r.shape), h0)
    return field_report(f"conformal-linearization-k{k}", "linearization of the weighted sigma_k-curvature",
                        an, d, steps, mask, err, tol)


def antisymmetry(s: RotSymStructure, k: int, psi1: Field, psi2: Field) -> float:
    """Normalized antisymmetric part of the linearization in L^2(d nu)."""
    p1, p2 = s.as_jet(psi1, EVEN), s.as_jet(psi2, EVEN)
    L1 = nodal(conformal_linearization(s, k, p1), s.r.shape)
    L2 = nodal(conformal_linearization(s, k, p2), s.r.shape)
    a = integrate(s, p2.value * L1)
    b = integrate(s, p1.value * L2)
    scale = abs(integrate(s, np.abs(p2.value * L1))) + abs(integrate(s, np.abs(p1.value * L2)))
    return float(abs(a - b) / scale) if scale > 0 else 0.0


# ---------------------------------------------------------------------------
# first-variation suite (conformal directions)

def _require_variational(s: RotSymStructure, k: int):
    if k >= 3 and not is_weighted_lcf(s):
        raise NotVariationalError(
            f"sigma_{k} is not conformally variational unless the class is weighted-LCF "
            f"(A residual {a_residual(s):.3e})")


def d_total_sigma_conformal(s: RotSymStructure, k: int, psi: Jet) -> float:
    """D int sigma_k d nu [psi] (kappa = 0 uses the plain curvature)."""
    g = s.geometry
    c = s.m + s.n
    if s.kappa == 0:
        integrand = -((c - 2 * k) / c) * g.sigma(k) * psi
    else:
        integrand = -(((c - 2 * k) / c) * g.sigma(k)
                      + (s.m / c) * s.kappa * g.vinv * g.newton_scalar(k - 1)) * psi
    return float(np.real(integrate(s, nodal(integrand, s.r.shape))))


def euler_residuals(s: RotSymStructure, k: int) -> tuple[float, float]:
    """Pointwise and integral residuals of the normalized-functional Euler system.

    The pointwise equation is multiplied by (m+n-2k) so that it stays
    meaningful when m+n = 2k.
    """
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    sig = nodal(g.sigma(k), s.r.shape)
    sk = nodal(g.newton_scalar(k - 1), s.r.shape)
    vinv = nodal(g.vinv, s.r.shape)
    V0 = integrate(s, np.ones_like(s.r))
    V1 = volume_minus(s)
    mean = integrate(s, sig) / V0
    Q = integrate(s, sk * vinv) / V1
    with np.errstate(all="ignore"):
        pointwise = (c - 2 * k) * (sig - mean) + m * s.kappa * vinv * (sk - Q)
    mask = interior_mask(s)
    r1 = float(np.max(np.abs(pointwise[mask])))
    lhs = integrate(s, sig)
    rhs = c * (2 * m + n - 2) / (2 * k * (c - 1)) * s.kappa * integrate(s, vinv * sk)
    r2 = float(abs(lhs - rhs) / (1 + abs(lhs)))
    return r1, r2


def dY_conformal(s: RotSymStructure, k: int, psi: Jet) -> float:
    """D Y_k[psi] in a conformal direction, assembled from D Z_k and volume terms."""
    fv = functionals(s, k)
    m, n = s.m, s.n
    c = m + n
    p, a, b = exponents(m, n, k)
    dZ = s.kappa ** (-p) * d_total_sigma_conformal(s, k, psi)
    vinv = nodal(s.geometry.vinv, s.r.shape)
    mean1 = integrate(s, psi.value * vinv) / fv.V_minus1
    mean0 = integrate(s, psi.value) / fv.V0
    total = dZ + 2 * m * k * (c - 1) / (c**2 * (2 * m + n - 2)) * fv.Z * mean1 + b * fv.Z * mean0
    return float(total * fv.V_minus1 ** (-a) * fv.V0 ** (-b))


def kappa_derivative(s: RotSymStructure, k: int) -> float:
    """kappa Z'(kappa) from the derivative identity in the scale."""
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    p, _, _ = exponents(m, n, k)
    A = -p * s.kappa ** (-p)
    integrand = g.sigma(k) - c * (2 * m + n - 2) / (2 * k * (c - 1)) * s.kappa * g.vinv * g.newton_scalar(k - 1)
    return float(A * integrate(s, nodal(integrand, s.r.shape)))


def kappa_expansion_residuals(s: RotSymStructure, kmax: int = 2) -> dict:
    """sigma_k with scale expanded through lower-m curvatures (pointwise)."""
    g = s.geometry
    m, n, kap = s.m, s.n, s.kappa
    c = m + n
    mask = interior_mask(s)
    g0 = Geometry(s.with_kappa(0.0))
    out = {}
    vinv = g.vinv
    r1 = g.sigma(1) - g0.sigma(1) - m * kap * vinv
    out["sigma1"] = float(np.max(np.abs(nodal(r1, s.r.shape)[mask])))
    if kmax >= 2 and m > 1:
        gm1 = Geometry(s.with_m(m - 1).with_kappa(0.0))
        r2 = (g.sigma(2) - g0.sigma(2) - m * (c - 2) / (c - 3) * kap * vinv * gm1.J
              - 0.5 * m * (m - 1) * kap**2 * vinv * vinv)
        out["sigma2"] = float(np.max(np.abs(nodal(r2, s.r.shape)[mask])))
    if is_weighted_lcf(s):
        for k in range(3, kmax + 1):
            if k > m:
                break
            acc = g.sigma(k)
            for j in range(k + 1):
                gj = Geometry(s.with_m(m - j).with_kappa(0.0)) if j < m else None
                sig = gj.sigma(k - j) if k - j > 0 else 1.0
                coef = ((c - 2) / (c - 2 - j)) ** (k - j) if k > j else 1.0
                coef *= binom_real(m, j) * kap**j
                acc = acc - coef * (vinv**j if j else 1.0) * sig
            out[f"sigma{k}"] = float(np.max(np.abs(nodal(acc, s.r.shape)[mask])))
    return out


def first_variation_suite(s: RotSymStructure, k: int, rng: Optional[np.random.Generator] = None,
                          directions: int = 3, tol: float = 1e-5) -> list[VariationReport]:
    _require_variational(s, k)
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    for i in range(directions):
        d = random_direction(s, rng, conformal=True)
        _, _, ps = d.jets(s)
        path = conformal_path(s, ps)
        h0 = default_step(d.norm(s))
        an = d_total_sigma_conformal(s, k, ps)
        fd, err, st = richardson_first(lambda t: total_sigma(path(t), k), h0)
        out.append(scalar_report(f"dF{k}-conformal-{i}", "first variation of the total sigma_k functional",
                                 an, fd, st, err, tol))
        out.append(linearization_report(s, k, ps, h0, tol))
        if s.kappa > 0:
            an = dY_conformal(s, k, ps)
            fd, err, st = richardson_first(lambda t: functionals(path(t), k).Y, h0)
            out.append(scalar_report(f"dY{k}-conformal-{i}", "first variation of the normalized functional",
                                     an, fd, st, err, tol))
    if s.kappa > 0:
        an = kappa_derivative(s, k)
        eps = 1e-3
        fd, err, st = richardson_first(lambda t: z_functional(s, k, s.kappa * math.exp(t)), eps)
        out.append(scalar_report(f"kappa-dZ{k}", "scale derivative of the scale-weighted functional",
                                 an, fd, st, err, tol))
    for name, val in kappa_expansion_residuals(s, max(k, 2)).items():
        out.append(VariationReport(f"kappa-expansion-{name}", "scale expansion of sigma_k",
                                   0.0, val, val, (), 0.0, tol))
    return out


# ---------------------------------------------------------------------------
# second variations

def is_critical_fk(s: RotSymStructure, k: int, tol: float = 1e-7) -> tuple[bool, float]:
    sig = nodal(s.geometry.sigma(k), s.r.shape)
    mask = interior_mask(s)
    mean = integrate(s, sig) / integrate(s, np.ones_like(s.r))
    res = float(np.max(np.abs(sig[mask] - mean)) / (1 + abs(mean)))
    return res <= tol, res


def second_variation_analytic(s: RotSymStructure, k: int, psi: Field) -> float:
    """Second variation of F_k on unit-volume conformal directions at a critical point."""
    g = Geometry(s.with_kappa(0.0))
    ps = s.as_jet(psi, EVEN)
    c = s.m + s.n
    dps = g.D(ps)
    T = g.newton_tensor(k - 1)
    grad = integrate(s, nodal(T.rad * dps * dps, s.r.shape))
    pot = integrate(s, nodal(g.sigma(k) * ps * ps, s.r.shape))
    return float((c - 2) * (c - 2 * k) / c**2 * grad - 2 * k * (c - 2 * k) / c**2 * pot)


def second_variation_fd(s: RotSymStructure, k: int, psi: Field, h0: float = 0.05):
    """Second difference of the homothety-normalized functional, rescaled to the base volume."""
    ps = s.as_jet(psi, EVEN)
    path = conformal_path(s, ps)
    _, _, b = exponents(s.m, s.n, k)
    V = float(integrate(s, np.ones_like(s.r)))
    f = lambda t: normalized_total(path(t), k) * V**b
    return richardson_second(f, h0)


def second_variation_form(s: RotSymStructure, k: int, psi: Field, h0: float = 0.05,
                          tol: float = 1e-4) -> tuple[float, VariationReport, float]:
    """(analytic value, report, first-variation residual of the base)."""
    _, crit = is_critical_fk(s, k)
    an = second_variation_analytic(s, k, psi)
    fd, err, st = second_variation_fd(s, k, psi, h0)
    return an, scalar_report(f"d2F{k}", "second variation of the total sigma_k functional",
                             an, fd, st, err, tol), crit


def hessian_matrices(s: RotSymStructure, k: int, basis: Sequence[Jet], h0: float = 0.05):
    """Analytic and FD Hessians of F_k on a basis of mean-zero conformal directions.

    Returns (analytic, fd, fd_error) matrices; off-diagonal FD entries use polarization.
    """
    nb = len(basis)
    A = np.zeros((nb, nb))
    F = np.zeros((nb, nb))
    E = np.zeros((nb, nb))
    for i in range(nb):
        for j in range(i, nb):
            if i == j:
                A[i, i] = second_variation_analytic(s, k, basis[i])
                F[i, i], E[i, i], _ = second_variation_fd(s, k, basis[i], h0)
            else:
                ap = second_variation_analytic(s, k, basis[i] + basis[j])
                am = second_variation_analytic(s, k, basis[i] - basis[j])
                fp, ep, _ = second_variation_fd(s, k, basis[i] + basis[j], h0)
                fm, em, _ = second_variation_fd(s, k, basis[i] - basis[j], h0)
                A[i, j] = A[j, i] = (ap - am) / 4
                F[i, j] = F[j, i] = (fp - fm) / 4
                E[i, j] = E[j, i] = (ep + em) / 4
    return A, F, E


def harmonic_basis(s: RotSymStructure, size: int, start: int = 1, mean_free: bool = True) -> list[Jet]:
    """Legendre polynomials P_l(cos r), l = start..start+size-1, optionally made mean-zero."""
    x = Jet.variable(s.r, s.alpha.order)
    cx = x.cos()
    P = [0.0 * x + 1.0, cx]
    lmax = start + size
    for l in range(1, lmax):
        P.append(((2 * l + 1) * cx * P[l] - l * P[l - 1]) * (1.0 / (l + 1)))
    out = P[start:start + size]
    if mean_free:
        out = [mean_zero(s, b) for b in out]
    return out


# weighted Einstein second variation of the normalized functional

def we_quadratic_forms(s: RotSymStructure, lam: float, kappa: float) -> tuple[Callable, Callable]:
    """Bilinear versions of the two quadratic forms governing stability with positive scale."""
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    vinv = nodal(g.vinv, s.r.shape)
    V0 = integrate(s, np.ones_like(s.r))
    V1 = volume_minus(s)
    K1 = (c - 1) * (2 * m + n) / (c * (2 * m + n - 2))
    K2 = 2 * (c - 1) ** 2 / ((c - 2) * (2 * m + n - 2))

    def parts(p: Jet):
        val = nodal(p, s.r.shape)
        return val, nodal(g.D(p), s.r.shape), integrate(s, val) / V0, integrate(s, val * vinv) / V1

    def I1(p: Jet, q: Jet) -> float:
        pv, pd, pbar, pt = parts(p)
        qv, qd, qbar, qt = parts(q)
        integrand = (pd * qd - 2 * c / (c - 2) * (pv - pbar) * (qv - qbar)
                     + m / (c - 2) * (pv * qv - pbar * qv - qbar * pv
                                      + 0.5 * K1 * (pt * qv + qt * pv)) * kappa * vinv)
        return float(integrate(s, integrand))

    def I2(p: Jet, q: Jet) -> float:
        pv, pd, _, pt = parts(p)
        qv, qd, _, qt = parts(q)
        integrand = (pd * qd - 2 * (c - 1) / (c - 2) * lam * pv * qv
                     + (m - 1) / (c - 2) * kappa * pv * qv * vinv
                     + 0.5 * K2 * lam * (pt * qv + qt * pv)) * vinv
        return float(integrate(s, integrand))

    return I1, I2


def we_second_variation(s: RotSymStructure, k: int, psi: Field, lam: float, kappa: float) -> dict:
    """Second variation of Y_k at a weighted Einstein structure, three ways.

    ``forms``: the two quadratic forms with their closed-form coefficients;
    ``assembled``: the chain rule for Z V_{-1}^-a V_0^-b with the closed-form
    linearizations of sigma_k and s_{k-1}; ``fd``: second difference along
    the conformal curve.
    """
    ps = s.as_jet(psi, EVEN)
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    p, a, b = exponents(m, n, k)
    fv = functionals(s, k)
    V1, V0, Y = fv.V_minus1, fv.V0, fv.Y
    I1, I2 = we_quadratic_forms(s, lam, kappa)
    # the closed forms are normalized to kappa = 1; the kappa^-p factor of Z_k is restored here
    pref = kappa ** (-p) * V1 ** (-a) * V0 ** (-b)
    forms = (c - 2) * (c - 2 * k) / c**2 * binom_real(c - 1, k - 1) * pref * lam ** (k - 1) * I1(ps, ps)
    if k >= 2:
        forms += m * (c - 2) / c**2 * binom_real(c - 2, k - 2) * pref * lam ** (k - 2) * kappa * I2(ps, ps)

    vinv = nodal(g.vinv, s.r.shape)
    pv = ps.value
    dsig = nodal(closed_form_we_linearization(s, k, ps, lam, kappa), s.r.shape)
    if k >= 2:
        inner = g.div_form(g.vinv * g.D(ps))
        ds = binom_real(c - 2, k - 2) * lam ** (k - 2) * (
            2 * (c - 1) / c * lam * ps - (m - 1) / c * kappa * ps * g.vinv
            + (c - 2) / c * s.v * inner)
        ds = nodal(ds, s.r.shape)
    else:
        ds = np.zeros_like(pv)
    sig = binom_real(c, k) * lam**k
    sk = binom_real(c - 1, k - 1) * lam ** (k - 1)
    B = kappa ** (-p)
    with np.errstate(all="ignore"):
        d2Z = B * (-integrate(s, ((c - 2 * k) / c * dsig + m / c * kappa * vinv * ds) * pv)
                   + integrate(s, ((c - 2 * k) / c * sig + m * (c - 1) / c**2 * kappa * vinv * sk) * pv * pv))
    dV1 = -(c - 1) / c * integrate(s, pv * vinv)
    dV0 = -integrate(s, pv)
    d2V1 = ((c - 1) / c) ** 2 * integrate(s, pv * pv * vinv)
    d2V0 = integrate(s, pv * pv)
    assembled = (d2Z * V1 ** (-a) * V0 ** (-b) - a * Y / V1 * d2V1 - b * Y / V0 * d2V0
                 - a * (a - 1) * Y / V1**2 * dV1**2 - 2 * a * b * Y / (V1 * V0) * dV1 * dV0
                 - b * (b - 1) * Y / V0**2 * dV0**2)

    path = conformal_path(s, ps)
    fd, err, st = richardson_second(lambda t: functionals(path(t), k).Y, 0.05, Y)
    return {"forms": float(forms), "assembled": float(assembled), "fd": float(fd), "fd_error": float(err)}


# ---------------------------------------------------------------------------
# full variations in (h, psi)

def tf_phi(g: Geometry, kind: str, T: Sym2, aux=None) -> Sym2:
    """Weighted trace-free part, defined only on the listed tensor types.

    kind: "metric" (returns 0), "power" (T = P^k, aux = N_k), "hessian"
    (T = Hess u, aux = Delta_phi u), "bach" (unchanged).
    """
    c = g.m + g.n
    if kind == "metric":
        return Sym2(0.0 * T.rad, 0.0 * T.tan)
    if kind in ("power", "hessian"):
        return Sym2(T.rad - aux / c, T.tan - aux / c)
    if kind == "bach":
        return T
    raise ValueError(f"the weighted trace-free part is undefined for {kind!r}")


class FullVariation:
    """Analytic first variations of curvature quantities in a direction (h, psi)."""

    def __init__(self, s: RotSymStructure, d: Direction):
        self.s = s
        self.d = d
        self.g = Geometry(s.with_kappa(0.0)) if s.kappa != 0 else s.geometry
        self.hr, self.ht, self.psi = d.jets(s)
        self.h = Sym2(self.hr, self.ht)
        self.trh = self.hr + (s.n - 1) * self.ht
        self.c = s.m + s.n

    # building blocks
    @property
    def div_h(self) -> Jet:
        return self.g.div_sym(self.h)

    @property
    def div2_h(self) -> Jet:
        return self.g.div_form(self.div_h)

    def N(self, k: int):
        g = self.g
        return g.m * (g.Y / g.m) ** k + g.P.rad**k + (g.n - 1) * g.P.tan**k

    @property
    def tfP(self) -> Sym2:
        return tf_phi(self.g, "power", self.g.P, self.g.J)

    def tf_hessian(self, u: Jet) -> Sym2:
        return tf_phi(self.g, "hessian", self.g.hessian(u), self.g.weighted_laplacian(u))

    @property
    def T1(self) -> Sym2:
        return self.g.newton_tensor(1, lam=self.g.Y)

    # scalar invariants
    @property
    def dJ(self) -> Jet:
        g, c = self.g, self.c
        return (-(c - 2) / (2 * (c - 1)) * (g.inner(self.tfP, self.h) - self.div2_h
                                            + g.weighted_laplacian(self.trh) / c)
                + (2 / c) * g.J * self.psi + ((c - 2) / c) * g.weighted_laplacian(self.psi))

    @property
    def dP(self) -> Sym2:
        g, c, m, n = self.g, self.c, self.g.m, self.g.n
        h, hr, ht, trh = self.h, self.hr, self.ht, self.trh
        w = self.div_h
        ddh = g.div_cotton(g.cotton_of(h))
        scal = -(self.div2_h - g.weighted_laplacian(trh)) / (2 * (c - 1)) \
            + g.inner(self.T1, h) / (2 * (c - 1) * (c - 2))
        htr = g.hessian(trh)
        Ah = g.a_dot(h)
        hps = g.hessian(self.psi)
        P = g.P
        rad = (-0.5 * ddh.rad + 0.5 * g.D(w) + scal - htr.rad / c - 0.5 * Ah.rad
               - g.J * hr / (2 * (c - 2)) + c / (2 * (c - 2)) * P.rad * hr
               - trh * P.rad / (2 * (c - 2)) + g.phis * g.phis * hr / (2 * m) + (c - 2) / c * hps.rad)
        tan = (-0.5 * ddh.tan + 0.5 * g.H * w + scal - htr.tan / c - 0.5 * Ah.tan
               - g.J * ht / (2 * (c - 2)) + c / (2 * (c - 2)) * P.tan * ht
               - trh * P.tan / (2 * (c - 2)) + (c - 2) / c * hps.tan)
        return Sym2(rad, tan)

    @property
    def trA(self) -> Sym2:
        g = self.g
        return g.a_dot(Sym2(1.0 + 0.0 * g.Ara, 1.0 + 0.0 * g.Ara))

    @property
    def dY(self) -> Jet:
        g, c, m = self.g, self.c, self.g.m
        hr, trh, psi = self.hr, self.trh, self.psi
        ph = g.phis
        return (-m / (2 * (c - 1)) * (self.div2_h - g.weighted_laplacian(trh))
                - 0.5 * g.div_form(hr * ph) - 0.5 * self.div_h * ph
                + ph * g.D(trh) / c + 0.5 * g.inner(self.trA, self.h) - hr * ph * ph / (2 * m)
                + m / (2 * (c - 1) * (c - 2)) * g.inner(self.T1, self.h)
                + (c - 4) / (2 * c * (c - 2)) * g.Y * trh
                + (2 / c) * psi * g.Y - (c - 2) / c * ph * g.D(psi))

    # quadratic invariant N_2
    @property
    def Psi2(self) -> Sym2:
        g, c = self.g, self.c
        P = g.P
        P2 = Sym2(P.rad * P.rad, P.tan * P.tan)
        return (tf_phi(g, "bach", g.bach)
                + (c - 4) / (c - 2) * tf_phi(g, "power", P2, self.N(2))
                - (c - 2) / (c - 1) * self.tf_hessian(g.J)
                + (c / ((c - 1) * (c - 2))) * Sym2(g.J * self.tfP.rad, g.J * self.tfP.tan))

    @property
    def Upsilon2(self) -> Jet:
        g, c = self.g, self.c
        return 2 * (c - 2) / c * g.weighted_laplacian(g.J) + (4 / c) * self.N(2)

    @property
    def Xi2(self) -> Jet:
        g, c, m, n = self.g, self.c, self.g.m, self.g.n
        hr, ht, trh, psi = self.hr, self.ht, self.trh, self.psi
        P = g.P
        w = self.div_h
        dJ = g.D(g.J)
        dtr = g.D(trh)
        return (-(n - 1) * P.tan * g.cotton_of(self.h) + (n - 1) * g.cotton * ht + P.rad * w
                - (2 / c) * P.rad * dtr - g.Y * hr * g.phis / m
                - (c - 2) / (c - 1) * hr * dJ + (c - 2) / (c * (c - 1)) * trh * dJ
                + g.J * (dtr - w) / (c - 1) + 2 * (c - 2) / c * (P.rad * g.D(psi) - psi * dJ))

    @property
    def dN2(self) -> Jet:
        g = self.g
        return -g.inner(self.Psi2, self.h) + self.Upsilon2 * self.psi + g.div_form(self.Xi2)

    @property
    def E2(self) -> Sym2:
        g, c = self.g, self.c
        T2 = g.newton_tensor(2, lam=g.Y)
        sig2 = g.sigma(2, lam=g.Y)
        tfT2 = Sym2(T2.rad - (c - 2) / c * sig2, T2.tan - (c - 2) / c * sig2)
        return tf_phi(g, "bach", g.bach) + (c - 4) / (c - 2) * tfT2

    # integrated quantities
    def integral(self, x) -> float:
        return float(np.real(integrate(self.s, nodal(x, self.s.r.shape))))

    def d_int_J(self) -> float:
        g, c = self.g, self.c
        return -self.integral((c - 2) / (2 * (c - 1)) * g.inner(self.tfP, self.h) + (c - 2) / c * g.J * self.psi)

    def d_int_J2(self) -> float:
        g, c = self.g, self.c
        tf = self.tf_hessian(g.J) - Sym2(g.J * self.tfP.rad, g.J * self.tfP.tan)
        return ((c - 2) / (c - 1) * self.integral(g.inner(tf, self.h))
                + self.integral((2 * (c - 2) / c * g.weighted_laplacian(g.J) - (c - 4) / c * g.J * g.J) * self.psi))

    def d_int_N2(self) -> float:
        g, c = self.g, self.c
        return (-self.integral(g.inner(self.Psi2, self.h))
                + self.integral((2 * (c - 2) / c * g.weighted_laplacian(g.J) - (c - 4) / c * self.N(2)) * self.psi))

    def d_F2(self) -> float:
        g, c = self.g, self.c
        return 0.5 * self.integral(g.inner(self.E2, self.h)) - (c - 4) / c * self.integral(g.sigma(2) * self.psi)

    def d_F0_shift(self, k: float) -> float:
        """D int d nu^{(m-k)}."""
        g, c = self.g, self.c
        vk = g.s.v.power(-k) if k else 1.0
        return (k / (2 * c) * self.integral(vk * self.trh) - (c - k) / c * self.integral(self.psi * vk))

    def d_F1_lower(self) -> float:
        """D int sigma_1^{(m-1)} d nu^{(m-1)}."""
        s, c = self.s, self.c
        g1 = Geometry(s.with_m(s.m - 1).with_kappa(0.0))
        T1 = g1.newton_tensor(1, lam=g1.Y)
        sig1 = g1.J
        X = Sym2(T1.rad - (c - 2) / c * sig1, T1.tan - (c - 2) / c * sig1)
        vinv = self.g.vinv
        return ((c - 3) / (2 * (c - 2)) * self.integral(vinv * self.g.inner(X, self.h))
                - (c - 3) / c * self.integral(self.psi * vinv * sig1))


# chart-path oracles

def _fd_scalar_field(s, d, fn, h0):
    path = chart_path(s, d)
    return richardson_first(lambda t: nodal(fn(path(t)), s.r.shape), h0)


def _fd_tensor_field(s, d, which: str, h0):
    gr, gt, _ = chart_tangent(s, d)
    path = chart_path(s, d)
    fac = gr if which == "rad" else gt

    def val(t):
        P = path(t).geometry.P
        comp = P.rad if which == "rad" else P.tan
        return nodal(comp * (1.0 + t * fac), s.r.shape)

    return richardson_first(val, h0)


def _fd_integral(s, d, fn, h0):
    path = chart_path(s, d)
    return richardson_first(lambda t: float(np.real(fn(path(t)))), h0)


def _int_of(fn):
    def inner(t: RotSymStructure) -> float:
        return integrate(t, nodal(fn(t.geometry), t.r.shape))
    return inner


def _lower_F1(t: RotSymStructure) -> float:
    g1 = Geometry(t.with_m(t.m - 1).with_kappa(0.0))
    return integrate(t, nodal(g1.J, t.r.shape), v_power=t.m - 1)


@dataclass
class FullVariationBundle:
    Psi2: Sym2
    Upsilon2: object
    Xi2: object
    E2: Sym2
    Phi_map: tuple
    reports: list = field(default_factory=list)


def phi_map(m: float, m_prime: float, n: int, d: Direction, s: RotSymStructure) -> Direction:
    """Change of chart (h, psi) between the identifications for m and m'."""
    hr, ht, ps = d.jets(s)
    trh = hr + (n - 1) * ht
    psi2 = ((m_prime + n) / (m + n)) * ps - ((m - m_prime) / (2 * (m + n))) * trh
    return Direction(hr, ht, psi2)


def full_variation_bundle(s: RotSymStructure, d: Direction, h0: Optional[float] = None,
                          tol: float = 1e-5) -> FullVariationBundle:
    s0 = s.with_kappa(0.0) if s.kappa != 0 else s
    fv = FullVariation(s0, d)
    mask = interior_mask(s0)
    h0 = default_step(d.norm(s0)) if h0 is None else h0
    reps = []

    def pointwise(name, anchor, an, fn):
        dval, err, st = _fd_scalar_field(s0, d, fn, h0)
        reps.append(field_report(name, anchor, nodal(an, s0.r.shape), dval, st, mask, err, tol))

    pointwise("dJ", "first variation of J", fv.dJ, lambda t: t.geometry.J)
    for which in ("rad", "tan"):
        dval, err, st = _fd_tensor_field(s0, d, which, h0)
        an = getattr(fv.dP, which)
        reps.append(field_report(f"dP-{which}", "first variation of the weighted Schouten tensor",
                                 nodal(an, s0.r.shape), dval, st, mask, err, tol))
    pointwise("dY", "first variation of Y", fv.dY, lambda t: t.geometry.Y)
    pointwise("dN2", "first variation of N_2", fv.dN2,
              lambda t: t.geometry.Y ** 2 / t.m + t.geometry.P.rad ** 2 + (t.n - 1) * t.geometry.P.tan ** 2)

    def integral(name, anchor, an, fn):
        dval, err, st = _fd_integral(s0, d, fn, h0)
        reps.append(scalar_report(name, anchor, an, dval, st, err, tol))

    integral("d-int-J", "first variation of the total weighted scalar curvature", fv.d_int_J(),
             _int_of(lambda g: g.J))
    integral("d-int-J2", "first variation of the integral of J^2", fv.d_int_J2(),
             _int_of(lambda g: g.J * g.J))
    integral("d-int-N2", "first variation of the total N_2 functional", fv.d_int_N2(),
             _int_of(lambda g: g.Y ** 2 / g.m + g.P.rad ** 2 + (g.n - 1) * g.P.tan ** 2))
    integral("dF2", "first variation of the total sigma_2 functional", fv.d_F2(),
             _int_of(lambda g: g.sigma(2)))
    for k in (0, 1, 2):
        if s.m - k > 0:
            integral(f"dF0-m-minus-{k}", "first variation of the shifted weighted volume", fv.d_F0_shift(k),
                     lambda t, k=k: integrate(t, np.ones_like(t.r), v_power=t.m - k))
    if s.m > 1 and abs(s.m + s.n - 3) > 1e-12:
        integral("dF1-m-minus-1", "first variation of the shifted total scalar curvature", fv.d_F1_lower(),
                 _lower_F1)
    phi = phi_map(s.m, s.m - 1, s.n, d, s0)
    return FullVariationBundle(fv.Psi2, fv.Upsilon2, fv.Xi2, fv.E2, (phi.h_rad, phi.h_tan, phi.psi), reps)


def phi_map_consistency(s: RotSymStructure, d: Direction, m_prime: float, h0: Optional[float] = None
                        ) -> list[VariationReport]:
    """D^{(m)} I = D^{(m')} I o Phi for I = int d nu^{(m')} and the shifted scalar curvature."""
    s0 = s.with_kappa(0.0)
    sp = s0.with_m(m_prime)
    dp = phi_map(s.m, m_prime, s.n, d, s0)
    h0 = default_step(d.norm(s0)) if h0 is None else h0
    reps = []
    funcs = {"volume": lambda t: integrate(t, np.ones_like(t.r), v_power=m_prime),
             "scalar": lambda t: integrate(t, nodal(Geometry(t.with_m(m_prime)).J, t.r.shape), v_power=m_prime)}
    for name, fn in funcs.items():
        a, ea, st = richardson_first(lambda t: fn(chart_path(s0, d)(t)), h0)
        b, eb, _ = richardson_first(lambda t: fn(chart_path(sp, dp)(t)), h0)
        reps.append(scalar_report(f"phi-map-{name}", "change of chart between weights", b, a, st, ea + eb, 1e-6))
    return reps


# ---------------------------------------------------------------------------
# positive scale: full variations of the normalized functionals

class ScaledVariation:
    """First variations of int sigma_k with scale, k in {1, 2}, in a direction (h, psi)."""

    def __init__(self, s: RotSymStructure, d: Direction):
        self.s = s
        self.d = d
        self.g = s.geometry
        self.base = FullVariation(s, d)

    @property
    def E(self):
        g, c = self.g, self.base.c

        def Ek(k):
            T = g.newton_tensor(k)
            sig = g.sigma(k)
            return Sym2(T.rad - (c - k) / c * sig, T.tan - (c - k) / c * sig)
        return Ek

    def U(self, k1: int) -> Sym2:
        """U_{k-1}: Newton tensor of the (m-1) weight at (m-1) Ytilde / m, minus its trace part."""
        g, c, m = self.g, self.base.c, self.s.m
        k = k1 + 1
        lam = (m - 1) / m * g.Ytilde
        T = g.newton_tensor(k1, lam=lam, m=m - 1)
        sk = g.newton_scalar(k1)
        return Sym2(T.rad - (c - k) / c * sk, T.tan - (c - k) / c * sk)

    @property
    def bach_scaled(self) -> Sym2:
        g, m = self.g, self.s.m
        q = Sym2(g.P.rad - g.Ytilde / m, g.P.tan - g.Ytilde / m)
        dd = g.div_cotton(g.cotton)
        extra = (g.n - 1) * g.phis * g.cotton / m
        return Sym2(dd.rad + extra, dd.tan) + g.a_dot(q)

    def dFtilde(self, k: int) -> float:
        s, g = self.s, self.g
        m, c, kap = s.m, self.base.c, s.kappa
        fv = self.base
        vinv = g.vinv
        if k == 1:
            E, U = self.E(1), self.U(0)
            X = E + (m / (c - 2)) * kap * Sym2(vinv * U.rad, vinv * U.tan)
            return (-(c - 2) / c * fv.integral((g.sigma(1) + m / (c - 2) * kap * vinv) * fv.psi)
                    + (c - 2) / (2 * (c - 1)) * fv.integral(g.inner(X, fv.h)))
        if k == 2:
            E, U, B = self.E(2), self.U(1), self.bach_scaled
            X = ((c - 4) / (2 * (c - 2))) * E + 0.5 * B \
                + (m / (2 * (c - 2))) * kap * Sym2(vinv * U.rad, vinv * U.tan)
            return (-fv.integral(((c - 4) / c * g.sigma(2) + m / c * kap * vinv * g.newton_scalar(1)) * fv.psi)
                    + fv.integral(g.inner(X, fv.h)))
        raise ValueError("full variations with scale are available for k in {1, 2}")

    def dY(self, k: int) -> float:
        s = self.s
        fvals = functionals(s, k)
        _, a, b = exponents(s.m, s.n, k)
        dV1 = self.base.d_F0_shift(1.0)
        dV0 = self.base.d_F0_shift(0.0)
        return fvals.Y * (self.dFtilde(k) / fvals.Ftilde - a * dV1 / fvals.V_minus1 - b * dV0 / fvals.V0)


def hat_E_trace_integral(s: RotSymStructure, k: int) -> Optional[float]:
    """Integral of the trace of the corrected tensor E-hat_k (None when m+n = 2k)."""
    g = s.geometry
    m, n = s.m, s.n
    c = m + n
    if abs(c - 2 * k) < 1e-12:
        return None
    sv = ScaledVariation(s, Direction())
    E, U = sv.E(k), sv.U(k - 1)
    vinv = g.vinv
    Q = integrate(s, nodal(g.newton_scalar(k - 1) * vinv, s.r.shape)) / volume_minus(s)
    extra = m * (c - k) / (c * (c - 1) * (c - 2 * k)) * Q * s.kappa
    tr = g.trace(E) + (m / (c - 2 * k)) * s.kappa * vinv * g.trace(U) - n * extra * vinv
    return float(integrate(s, nodal(tr, s.r.shape)))


def scale_variation_suite(s: RotSymStructure, k: int, rng: Optional[np.random.Generator] = None,
                          directions: int = 20, h0: Optional[float] = None, tol: float = 1e-5
                          ) -> list[VariationReport]:
    if s.mu != 0:
        raise ScaleError("the normalized functional is defined for mu = 0")
    if not s.kappa > 0:
        raise ScaleError("the normalized functional needs kappa > 0")
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    rng = np.random.default_rng(0) if rng is None else rng
    reps = []
    for i in range(directions):
        d = random_direction(s, rng)
        sv = ScaledVariation(s, d)
        path = chart_path(s, d)
        step = default_step(d.norm(s)) if h0 is None else h0
        an = sv.dFtilde(k)
        fd, err, st = richardson_first(lambda t: total_sigma(path(t), k), step)
        reps.append(scalar_report(f"dFtilde{k}-{i}", "first variation of the total sigma_k with scale",
                                  an, fd, st, err, tol))
        an = sv.dY(k)
        fd, err, st = richardson_first(lambda t: functionals(path(t), k).Y, step)
        reps.append(scalar_report(f"dY{k}-{i}", "first variation of the normalized functional",
                                  an, fd, st, err, tol))
    # homothety: (e^{2t} g, e^t v, e^{-t} kappa) leaves the functional invariant
    c = s.m + s.n
    d = Direction(psi=Jet.constant(-float(c), s.r.shape, s.alpha.order))
    an = ScaledVariation(s, d).dY(k) - kappa_derivative_Y(s, k)
    f = lambda t: y_functional(chart_path(s, d)(t), k, s.kappa * math.exp(-t))
    fd, err, st = richardson_first(f, 1e-3)
    reps.append(scalar_report(f"dY{k}-homothety", "homothety invariance of the normalized functional",
                              an, fd, st, err, tol))
    return reps


def kappa_derivative_Y(s: RotSymStructure, k: int) -> float:
    """kappa d/dkappa of Y_k, from the scale derivative of Z_k."""
    fv = functionals(s, k)
    _, a, b = exponents(s.m, s.n, k)
    return kappa_derivative(s, k) * fv.V_minus1 ** (-a) * fv.V0 ** (-b)


# ---------------------------------------------------------------------------
# criticality of the model structures

def _critical_report(name, anchor, analytic, fd, scale, steps, err, tol) -> VariationReport:
    a, b = float(np.real(analytic)), float(np.real(fd))
    return VariationReport(name, anchor, a, b, max(abs(a), abs(b)) / abs(scale), tuple(steps), float(err), tol)


def d_normalized_total(s: RotSymStructure, k: int, d: Direction) -> float:
    """Full (h, psi) variation of F_k V_0^{-b} with kappa = 0, for k in {1, 2}."""
    fv = FullVariation(s, d)
    F = total_sigma(s, k, 0.0)
    V0 = integrate(s, np.ones_like(s.r))
    _, _, b = exponents(s.m, s.n, k)
    if k == 1:
        dF = fv.d_int_J()
    elif k == 2:
        dF = fv.d_F2()
    else:
        raise ValueError("full variations are available for k in {1, 2}")
    return F * V0 ** (-b) * (dF / F - b * fv.d_F0_shift(0.0) / V0)


def criticality_suite(s: RotSymStructure, k: int, rng: Optional[np.random.Generator] = None,
                      directions: int = 10, tol: Optional[float] = None) -> list[VariationReport]:
    """First variations at a model structure, relative to the functional value.

    kappa = 0: F_k V_0^{-b} over mean-zero conformal and full directions.
    kappa > 0: the normalized functional Y_k over full directions, the scale
    derivative, the Bach tensor with scale and, when defined, the integral of
    tr E-hat_k.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    reps = []
    if s.kappa == 0:
        tol = 1e-7 if tol is None else tol
        G = normalized_total(s, k)
        for i in range(directions):
            d = random_direction(s, rng, conformal=True, mean_free=True)
            _, _, ps = d.jets(s)
            path = conformal_path(s, ps)
            h0 = default_step(d.norm(s))
            an = d_total_sigma_conformal(s, k, ps) * integrate(s, np.ones_like(s.r)) ** (-exponents(s.m, s.n, k)[2])
            fd, err, st = richardson_first(lambda t: normalized_total(path(t), k), h0)
            reps.append(_critical_report(f"critical-F{k}-conformal-{i}", "criticality of the quasi-Einstein model",
                                         an, fd, G, st, err, tol))
        if k in (1, 2):
            for i in range(directions):
                d = random_direction(s, rng)
                path = chart_path(s, d)
                h0 = default_step(d.norm(s))
                an = d_normalized_total(s, k, d)
                fd, err, st = richardson_first(lambda t: normalized_total(path(t), k), h0)
                reps.append(_critical_report(f"critical-F{k}-full-{i}", "criticality of the quasi-Einstein model",
                                             an, fd, G, st, err, tol))
        return reps
    if s.mu != 0:
        raise ScaleError("the normalized functional is defined for mu = 0")
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    tol = 1e-6 if tol is None else tol
    fvals = functionals(s, k)
    for i in range(directions):
        d = random_direction(s, rng)
        path = chart_path(s, d)
        h0 = default_step(d.norm(s))
        an = ScaledVariation(s, d).dY(k)
        fd, err, st = richardson_first(lambda t: functionals(path(t), k).Y, h0)
        reps.append(_critical_report(f"critical-Y{k}-full-{i}", "criticality of the weighted Einstein model",
                                     an, fd, fvals.Y, st, err, tol))
    an = kappa_derivative(s, k)
    fd, err, st = richardson_first(lambda t: z_functional(s, k, s.kappa * math.exp(t)), 1e-3)
    reps.append(_critical_report(f"critical-kappa-Z{k}", "scale criticality of the weighted Einstein model",
                                 an, fd, fvals.Z, st, err, 1e-8))
    mask = interior_mask(s)
    B = ScaledVariation(s, Direction()).bach_scaled
    bmax = max(float(np.max(np.abs(nodal(B.rad, s.r.shape)[mask]))),
               float(np.max(np.abs(nodal(B.tan, s.r.shape)[mask]))))
    reps.append(VariationReport("bach-with-scale", "Bach tensor with scale at the weighted Einstein model",
                                0.0, bmax, bmax, (), 0.0, 1e-7))
    tr = hat_E_trace_integral(s, k)
    if tr is not None:
        reps.append(VariationReport(f"trace-Ehat{k}", "integral of the trace of the corrected tensor",
                                    0.0, tr, abs(tr) / abs(fvals.Ftilde), (), 0.0, 1e-8))
    return reps
