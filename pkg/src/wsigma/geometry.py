"""Rotationally symmetric smooth metric measure spaces.

A structure is g = e^{2 alpha} dr^2 + f^2 g_{S^{n-1}} with density v on a
uniform grid in r.  Every tensor is diagonal in the orthonormal frame
(e_r, e_a), so a symmetric 2-tensor is a pair (radial, tangential) and a
one-form is its radial component.  Derivatives along e_r are written ``D``.

Base fields are Taylor jets (see :mod:`wsigma.jets`), so curvature is exact up
to roundoff.  Identities that are meant to exhibit discretization error are
checked with 4th-order finite differences of nodal fields instead.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import simpson

from .jets import Jet, fd_derivative, fill_axis
from .wsym import Method, binom_over_power, elementary_symmetric_all

DEFAULT_ORDER = 6


class Topology(enum.Enum):
    CLOSED_SPHERE = "closed-sphere"
    HEMISPHERE = "hemisphere"
    INTERVAL = "interval"


class ModelKind(enum.Enum):
    ELLIPTIC_GAUSSIAN = "elliptic-gaussian"
    WEIGHTED_SPHERE = "weighted-sphere"
    CONSTANT_V_QE = "const-v-qe"
    ROUND_LCF = "round-lcf"


class StructureError(ValueError):
    pass


EVEN, ODD = 1, -1

Field = Union[Jet, np.ndarray, Callable[[Jet], Jet]]


def sphere_area(n: int) -> float:
    """Area of the unit (n-1)-sphere."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True, eq=False)
class RotSymStructure:
    r: np.ndarray
    alpha: Jet
    f: Jet
    v: Jet
    n: int
    m: float
    mu: float
    kappa: float
    topology: Topology
    label: str = ""
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise StructureError("n must be at least 2")
        if not self.m > 0:
            raise StructureError("m must be positive")
        if self.check:
            self.validate()

    # grid
    @property
    def N(self) -> int:
        return len(self.r) - 1

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def L(self) -> float:
        return float(self.r[-1] - self.r[0])

    @property
    def axes(self) -> tuple[bool, bool]:
        return {
            Topology.CLOSED_SPHERE: (True, True),
            Topology.HEMISPHERE: (True, False),
            Topology.INTERVAL: (False, False),
        }[self.topology]

    def parity(self, p: int) -> tuple:
        """FD parity tuple for a field of axis parity ``p``."""
        left, right = self.axes
        return (p if left else None, p if right else None)

    def validate(self):
        r = self.r
        d = np.diff(r)
        if np.any(d <= 0) or np.max(np.abs(d - d[0])) > 1e-12 * max(1.0, abs(r[-1])):
            raise StructureError("grid must be strictly increasing and uniform")
        inner = slice(1, -1)
        if np.any(~(self.f.value[inner].real > 0)):
            raise StructureError("f must be positive on interior nodes")
        if np.any(~(self.v.value[inner].real > 0)):
            raise StructureError("v must be positive on interior nodes")
        tol = 10 * self.h**2
        fs = (self.f.deriv() * (-self.alpha).exp()).value.real
        left, right = self.axes
        if left and (abs(self.f.value[0]) > tol or abs(fs[0] - 1) > tol):
            raise StructureError("axis closure at r=0 fails (need f=0, f_s=1)")
        if right and (abs(self.f.value[-1]) > tol or abs(fs[-1] + 1) > tol):
            raise StructureError("axis closure at r=L fails (need f=0, f_s=-1)")

    # constructors
    @classmethod
    def from_functions(
        cls,
        r: np.ndarray,
        alpha: Callable[[Jet], Jet],
        f: Callable[[Jet], Jet],
        v: Callable[[Jet], Jet],
        n: int,
        m: float,
        mu: float = 0.0,
        kappa: float = 0.0,
        topology: Topology = Topology.CLOSED_SPHERE,
        order: int = DEFAULT_ORDER,
        label: str = "",
    ) -> "RotSymStructure":
        x = Jet.variable(np.asarray(r, float), order)
        return cls(np.asarray(r, float), alpha(x), f(x), v(x), n, float(m), float(mu),
                   float(kappa), topology, label)

    @classmethod
    def from_nodes(
        cls,
        r: np.ndarray,
        alpha: np.ndarray,
        f: np.ndarray,
        v: np.ndarray,
        n: int,
        m: float,
        mu: float = 0.0,
        kappa: float = 0.0,
        topology: Topology = Topology.CLOSED_SPHERE,
        order: int = 4,
        label: str = "",
    ) -> "RotSymStructure":
        r = np.asarray(r, float)
        h = float(r[1] - r[0])
        tmp = cls(r, Jet.from_nodes(alpha, h, 0), Jet.from_nodes(f, h, 0), Jet.from_nodes(v, h, 0),
                  n, m, mu, kappa, topology, label, check=False)
        a = Jet.from_nodes(alpha, h, order, tmp.parity(EVEN))
        fj = Jet.from_nodes(f, h, order, tmp.parity(ODD))
        vj = Jet.from_nodes(v, h, order, tmp.parity(EVEN))
        return cls(r, a, fj, vj, n, float(m), float(mu), float(kappa), topology, label)

    # derived structures
    def with_kappa(self, kappa: float) -> "RotSymStructure":
        return replace(self, kappa=float(kappa), check=False)

    def with_m(self, m: float) -> "RotSymStructure":
        return replace(self, m=float(m), check=False)

    def homothety(self, c: float, scale_kappa: bool = True) -> "RotSymStructure":
        """(c^2 g, c v) with kappa / c so that scale-invariant quantities are preserved."""
        kappa = self.kappa / c if scale_kappa else self.kappa
        return replace(self, alpha=self.alpha + math.log(c), f=self.f * c, v=self.v * c,
                       kappa=kappa, check=False)

    def nodal_jet(self, values, parity: int = EVEN, order: Optional[int] = None) -> Jet:
        order = self.alpha.order if order is None else order
        return Jet.from_nodes(values, self.h, order, self.parity(parity))

    def as_jet(self, u: Field, parity: int = EVEN, order: Optional[int] = None) -> Jet:
        if isinstance(u, Jet):
            return u
        if callable(u):
            return u(Jet.variable(self.r, self.alpha.order if order is None else order))
        return self.nodal_jet(np.asarray(u), parity, order)

    @cached_property
    def geometry(self) -> "Geometry":
        return Geometry(self)


# ---------------------------------------------------------------------------
# models

def build_model(kind: Union[ModelKind, str], n: int, m: float, N: int,
                order: int = DEFAULT_ORDER) -> RotSymStructure:
    kind = ModelKind(kind)
    if N < 64:
        raise StructureError("N must be at least 64")
    if kind is ModelKind.ELLIPTIC_GAUSSIAN:
        r = np.linspace(0.0, math.pi / 2, N + 1)
        return RotSymStructure.from_functions(
            r, lambda x: 0.0 * x, lambda x: x.sin(), lambda x: x.cos(), n, m, mu=1.0, kappa=0.0,
            topology=Topology.HEMISPHERE, order=order, label=kind.value)
    r = np.linspace(0.0, math.pi, N + 1)
    if kind is ModelKind.WEIGHTED_SPHERE:
        return RotSymStructure.from_functions(
            r, lambda x: 0.0 * x, lambda x: x.sin(), lambda x: 1.0 + x.cos(), n, m, mu=0.0,
            kappa=m + n - 2, topology=Topology.CLOSED_SPHERE, order=order, label=kind.value)
    if kind is ModelKind.CONSTANT_V_QE:
        if m <= 1:
            raise StructureError("the constant-v quasi-Einstein sphere needs m > 1")
        return RotSymStructure.from_functions(
            r, lambda x: 0.0 * x, lambda x: x.sin(), lambda x: 0.0 * x + 1.0, n, m,
            mu=(n - 1) / (m - 1), kappa=0.0, topology=Topology.CLOSED_SPHERE, order=order,
            label=kind.value)
    # round sphere with v = 1 and mu = -1: locally conformally flat in the weighted sense
    return RotSymStructure.from_functions(
        r, lambda x: 0.0 * x, lambda x: x.sin(), lambda x: 0.0 * x + 1.0, n, m, mu=-1.0,
        kappa=0.0, topology=Topology.CLOSED_SPHERE, order=order, label=kind.value)


def model_lambda(kind: Union[ModelKind, str], n: int, m: float) -> float:
    kind = ModelKind(kind)
    if kind in (ModelKind.ELLIPTIC_GAUSSIAN, ModelKind.WEIGHTED_SPHERE):
        return (m + n - 2) / 2.0
    if kind is ModelKind.CONSTANT_V_QE:
        return (n - 1) * (m + n - 2) / (2.0 * (m + n - 1))
    R = n * (n - 1) - m * (m - 1)
    return (n - 1) - R / (2.0 * (m + n - 1))


def generic_structure(n: int, m: float, N: int, seed: int = 0, amplitude: float = 0.3,
                      mu: float = 0.0, kappa: float = 0.0, order: int = DEFAULT_ORDER,
                      modes: int = 3) -> RotSymStructure:
    """Closed rotationally symmetric structure with random smooth alpha, f, v > 0.

    alpha = a(r) + b(r) sin^2 r and f = sin r e^{a(r)} keep the axis closure,
    while b and the density make the structure generically non-flat.
    """
    rng = np.random.default_rng(seed)
    ca, cb, cv = (amplitude * rng.standard_normal(modes) / (1 + np.arange(modes)) for _ in range(3))

    def series(x: Jet, coef) -> Jet:
        out = 0.0 * x
        for j, c in enumerate(coef):
            out = out + c * (x * float(j + 1)).cos()
        return out

    def alpha(x):
        s = x.sin()
        return series(x, ca) + series(x, cb) * s * s

    r = np.linspace(0.0, math.pi, N + 1)
    return RotSymStructure.from_functions(
        r, alpha, lambda x: x.sin() * series(x, ca).exp(),
        lambda x: (series(x, cv) * 0.5).exp(), n, m, mu=mu, kappa=kappa,
        topology=Topology.CLOSED_SPHERE, order=order, label=f"generic-seed{seed}")


# ---------------------------------------------------------------------------
# curvature

@dataclass(frozen=True)
class Sym2:
    """Diagonal symmetric 2-tensor in the orthonormal frame."""

    rad: object
    tan: object

    def __add__(self, o):
        return Sym2(self.rad + o.rad, self.tan + o.tan)

    def __sub__(self, o):
        return Sym2(self.rad - o.rad, self.tan - o.tan)

    def __neg__(self):
        return Sym2(-self.rad, -self.tan)

    def scale(self, c):
        return Sym2(self.rad * c, self.tan * c)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def values(self):
        return Sym2(_val(self.rad), _val(self.tan))


def _val(x):
    return x.value if isinstance(x, Jet) else x


class Geometry:
    """Curvature of a structure, computed lazily from jets."""

    def __init__(self, s: RotSymStructure):
        self.s = s
        self.n = s.n
        self.m = s.m
        self._einv = (-s.alpha).exp()

    def D(self, x: Jet) -> Jet:
        """Derivative along the unit radial field e_r."""
        return self._einv * x.deriv()

    # first order quantities
    @cached_property
    def fs(self) -> Jet:
        return self.D(self.s.f)

    @cached_property
    def H(self) -> Jet:
        """f_s / f, the mean curvature of the distance spheres per direction."""
        with np.errstate(all="ignore"):
            return self.fs / self.s.f

    @cached_property
    def vs(self) -> Jet:
        return self.D(self.s.v)

    @cached_property
    def vss(self) -> Jet:
        return self.D(self.vs)

    @cached_property
    def vinv(self) -> Jet:
        return self.s.v.reciprocal()

    @cached_property
    def phis(self) -> Jet:
        return -self.m * self.vs * self.vinv

    @cached_property
    def Kra(self) -> Jet:
        return -self.D(self.fs) / self.s.f

    @cached_property
    def Kab(self) -> Jet:
        with np.errstate(all="ignore"):
            return (1.0 - self.fs * self.fs) / (self.s.f * self.s.f)

    # calculus helpers on scalars / tensors
    def hessian(self, u: Jet) -> Sym2:
        us = self.D(u)
        return Sym2(self.D(us), self.H * us)

    def laplacian(self, u: Jet) -> Jet:
        us = self.D(u)
        return self.D(us) + (self.n - 1) * self.H * us

    def weighted_laplacian(self, u: Jet) -> Jet:
        us = self.D(u)
        return self.D(us) + ((self.n - 1) * self.H - self.phis) * us

    def div_sym(self, T: Sym2) -> Jet:
        """Weighted divergence of a diagonal 2-tensor (radial component)."""
        return self.D(T.rad) + (self.n - 1) * self.H * (T.rad - T.tan) - self.phis * T.rad

    def div_form(self, w: Jet) -> Jet:
        """Weighted divergence of the one-form w e^r."""
        return self.D(w) + ((self.n - 1) * self.H - self.phis) * w

    def cotton_of(self, T: Sym2) -> Jet:
        """Single component of dT for a diagonal T."""
        return self.D(T.tan) + self.H * (T.tan - T.rad)

    def div_cotton(self, c: Jet) -> Sym2:
        """delta_phi dT for dT with component c."""
        Hc = self.H * c
        return Sym2((self.n - 1) * Hc, self.D(c) + (self.n - 2) * Hc - self.phis * c)

    def inner(self, A: Sym2, B: Sym2):
        return A.rad * B.rad + (self.n - 1) * (A.tan * B.tan)

    def trace(self, A: Sym2):
        return A.rad + (self.n - 1) * A.tan

    def a_dot(self, T: Sym2) -> Sym2:
        """<A(., x, ., y), T> for diagonal T."""
        n = self.n
        rr = (n - 1) * self.Ara * T.tan
        tt = self.Ara * T.rad
        if n > 2:
            tt = tt + (n - 2) * self.Aab * T.tan
        return Sym2(rr, tt)

    # weighted curvature
    @cached_property
    def scalar_curvature(self) -> Jet:
        n = self.n
        out = 2 * (n - 1) * self.Kra
        if n > 2:
            out = out + (n - 1) * (n - 2) * self.Kab
        return out

    @cached_property
    def ricci(self) -> Sym2:
        n = self.n
        tan = self.Kra
        if n > 2:
            tan = tan + (n - 2) * self.Kab
        return Sym2((n - 1) * self.Kra, tan)

    @cached_property
    def hess_v(self) -> Sym2:
        return Sym2(self.vss, self.H * self.vs)

    @cached_property
    def ricci_phi(self) -> Sym2:
        return self.ricci - self.hess_v.scale(self.m * self.vinv)

    @cached_property
    def R_phi(self) -> Jet:
        m, n = self.m, self.n
        lap_v = self.vss + (n - 1) * self.H * self.vs
        vi = self.vinv
        return (self.scalar_curvature - 2 * m * lap_v * vi
                - m * (m - 1) * self.vs * self.vs * vi * vi
                + m * (m - 1) * self.s.mu * vi * vi)

    @cached_property
    def J(self) -> Jet:
        m, n = self.m, self.n
        return (m + n - 2) / (2 * (m + n - 1)) * self.R_phi

    @cached_property
    def P(self) -> Sym2:
        shift = self.J / (self.m + self.n - 2)
        rp = self.ricci_phi
        return Sym2(rp.rad - shift, rp.tan - shift)

    @cached_property
    def Y(self) -> Jet:
        return self.J - self.trace(self.P)

    @cached_property
    def Ytilde(self) -> Jet:
        return self.Y + self.m * self.s.kappa * self.vinv

    @cached_property
    def Ztilde(self) -> Jet:
        return self.Ytilde / self.m

    @cached_property
    def Y_from_formula(self) -> Jet:
        """Delta_phi phi - m J/(m+n-2) + m(m-1) mu v^-2 (cross-check of the definition)."""
        m, n = self.m, self.n
        lap_phi = self.D(self.phis) + ((n - 1) * self.H - self.phis) * self.phis
        return lap_phi - m * self.J / (m + n - 2) + m * (m - 1) * self.s.mu * self.vinv * self.vinv

    @cached_property
    def Ara(self) -> Jet:
        return self.Kra - (self.P.rad + self.P.tan) / (self.m + self.n - 2)

    @cached_property
    def Aab(self) -> Jet:
        return self.Kab - 2 * self.P.tan / (self.m + self.n - 2)

    @cached_property
    def cotton(self) -> Jet:
        return self.cotton_of(self.P)

    @cached_property
    def bach(self) -> Sym2:
        m = self.m
        c = self.cotton
        q = Sym2(self.P.rad - self.Y / m, self.P.tan - self.Y / m)
        dd = self.div_cotton(c)
        # -(1/m) dphi(y) tr dP(., x, .) with tr dP = -(n-1) c e^r
        extra = (self.n - 1) * self.phis * c / m
        return Sym2(dd.rad + extra, dd.tan) + self.a_dot(q)

    @cached_property
    def P_m_minus_1(self) -> Sym2:
        """P + v^-1 Hess v + Y g/(m(m+n-2)), the Schouten tensor of the (m-1)-structure."""
        m, n = self.m, self.n
        c = self.Y / (m * (m + n - 2))
        hv = self.hess_v.scale(self.vinv)
        return Sym2(self.P.rad + hv.rad + c, self.P.tan + hv.tan + c)

    # weighted symmetric functions of (Ytilde; P)
    def _entries(self, P: Sym2, drop: Optional[str] = None):
        n = self.n
        ent = [] if drop == "rad" else [P.rad]
        ent += [P.tan] * (n - 1 - (1 if drop == "tan" else 0))
        return ent

    def sigma_list(self, kmax: int, lam: Optional[Jet] = None, m: Optional[float] = None,
                   P: Optional[Sym2] = None, drop: Optional[str] = None) -> list:
        lam = self.Ytilde if lam is None else lam
        m = self.m if m is None else m
        P = self.P if P is None else P
        cl = elementary_symmetric_all(self._entries(P, drop), kmax)
        out = []
        powers = [1.0]
        for j in range(1, kmax + 1):
            powers.append(powers[-1] * lam)
        coef = [binom_over_power(m, j) for j in range(kmax + 1)]
        for k in range(kmax + 1):
            acc = 0.0
            for j in range(k + 1):
                if isinstance(cl[k - j], int) and cl[k - j] == 0:
                    continue
                acc = acc + coef[j] * powers[j] * cl[k - j]
            out.append(acc)
        return out

    def sigma(self, k: int, **kw):
        return self.sigma_list(k, **kw)[k]

    def newton_tensor(self, k: int, lam=None, m=None, P=None) -> Sym2:
        """T_k^m(lam; P): eigenvalues sigma_k with one entry removed."""
        rad = self.sigma_list(k, lam, m, P, drop="rad")[k]
        tan = self.sigma_list(k, lam, m, P, drop="tan")[k]
        return Sym2(rad, tan)

    def newton_scalar(self, k: int, lam=None, m=None, P=None):
        lam = self.Ytilde if lam is None else lam
        m = self.m if m is None else m
        sig = self.sigma_list(k, lam, m, P)
        z = lam / m
        acc = 0.0
        zp = 1.0
        for j in range(k + 1):
            term = zp * sig[k - j]
            acc = acc + term if j % 2 == 0 else acc - term
            zp = zp * z
        return acc

    def obstruction(self, k: int) -> Jet:
        """Radial component of S_k = sum_l (-1)^l T_{k-3-l}(dP . Q_{l+1})."""
        out = 0.0 * self.cotton
        for ell in range(0, k - 2):
            T = self.newton_tensor(k - 3 - ell)
            q = self.P.tan ** (ell + 1) - self.Ztilde ** (ell + 1)
            term = T.rad * (-(self.n - 1)) * self.cotton * q
            out = out + term if ell % 2 == 0 else out - term
        return out


# ---------------------------------------------------------------------------
# masks, quadrature, nodal derivatives

def interior_mask(s: RotSymStructure, axis_collar: float = 0.1, v_floor: float = 0.25) -> np.ndarray:
    """Nodes away from the axes and from small v.

    Removable singularities such as (1 - f_s^2)/f^2 lose digits to cancellation
    within ``axis_collar`` of an axis, and the weight phi = -m ln v blows up
    where v is small, so both regions are excluded from pointwise max-norms.
    """
    r = s.r
    mask = np.ones(len(r), dtype=bool)
    left, right = s.axes
    if left:
        mask &= (r - r[0]) >= axis_collar
    if right:
        mask &= (r[-1] - r) >= axis_collar
    v = s.v.value.real
    mask &= v >= v_floor * np.max(v)
    mask[0] = mask[-1] = False if (left or right) else mask[0]
    return mask


def measure_density(s: RotSymStructure, v_power: Optional[float] = None) -> np.ndarray:
    """omega_{n-1} f^{n-1} e^alpha v^p on the nodes (p = m by default)."""
    p = s.m if v_power is None else v_power
    with np.errstate(all="ignore"):
        f = s.f.value
        v = s.v.value
        dens = sphere_area(s.n) * f ** (s.n - 1) * np.exp(s.alpha.value) * _safe_pow(v, p)
    # f vanishes at an axis; rounding (sin(pi) ~ 1e-16) must not leak into integrals
    left, right = s.axes
    if left:
        dens[0] = 0.0
    if right:
        dens[-1] = 0.0
    return dens


def _safe_pow(v, p):
    """|v|^p with 0^p = 0 for p > 0 (the measure vanishes where v does)."""
    with np.errstate(all="ignore"):
        return np.where(v == 0, 0.0, np.abs(v) ** p)


def integrate(s: RotSymStructure, values, v_power: Optional[float] = None) -> float:
    """Gregory quadrature of ``values`` against v^p dvol (default p = m)."""
    dens = measure_density(s, v_power)
    vals = _val(values)
    vals = np.broadcast_to(vals, dens.shape + np.shape(vals)[1:]) if np.ndim(vals) else vals
    with np.errstate(all="ignore"):
        dshape = dens.reshape(dens.shape + (1,) * (np.ndim(vals) - 1)) if np.ndim(vals) else dens
        integrand = np.where(dshape == 0, 0.0, dshape * vals)
    return gregory(integrand, s.r)


# Gregory end-correction coefficients (trapezoid rule plus forward/backward differences)
_GREGORY = (1 / 12, 1 / 24, 19 / 720, 3 / 160, 863 / 60480, 275 / 24192, 33953 / 3628800)


def gregory(y: np.ndarray, x: np.ndarray) -> float:
    """Trapezoid rule with Gregory end corrections through 7th differences.

    Exact for polynomials of degree 7 on a uniform grid; falls back to
    Simpson on grids too short for the end stencils.
    """
    y = np.asarray(y)
    n = y.shape[0] - 1
    if n < 16:
        return simpson(y, x=x, axis=0)
    h = (x[-1] - x[0]) / n
    total = 0.5 * (y[0] + y[-1]) + np.sum(y[1:-1], axis=0)
    fwd = y[:8]
    bwd = y[::-1][:8]
    for j, g in enumerate(_GREGORY, start=1):
        fwd = np.diff(fwd, axis=0)
        bwd = np.diff(bwd, axis=0)
        # bwd[0] is (-1)^j times the backward difference at the right end
        total = total - g * (-1) ** j * (fwd[0] + bwd[0])
    return h * total


def volume(s: RotSymStructure) -> float:
    return integrate(s, np.ones_like(s.r))


def nodal_radial_derivative(s: RotSymStructure, values: np.ndarray, parity: int) -> np.ndarray:
    """e^{-alpha} d/dr of a nodal field by 4th-order differences (axis values filled first)."""
    vals = fill_axis(_val(values), s.parity(parity), s.axes)
    d = fd_derivative(vals, s.h, s.parity(parity))
    return np.exp(-s.alpha.value) * d


# ---------------------------------------------------------------------------
# public curvature bundle

@dataclass(frozen=True)
class CurvatureBundle:
    r: np.ndarray
    J: np.ndarray
    P_rad: np.ndarray
    P_tan: np.ndarray
    Y: np.ndarray
    Ytilde: np.ndarray
    A_comp: np.ndarray
    A_tan: np.ndarray
    cotton_comp: np.ndarray
    bach_rad: np.ndarray
    bach_tan: np.ndarray
    obstruction_k: np.ndarray
    k_for_obstruction: int
    interior: np.ndarray

    def max_interior(self, name: str) -> float:
        return float(np.max(np.abs(getattr(self, name)[self.interior])))


def curvature_bundle(s: RotSymStructure, k_for_obstruction: int = 3) -> CurvatureBundle:
    g = s.geometry
    with np.errstate(all="ignore"):
        zeros = np.zeros_like(s.r)
        return CurvatureBundle(
            r=s.r,
            J=g.J.value,
            P_rad=g.P.rad.value,
            P_tan=g.P.tan.value,
            Y=g.Y.value,
            Ytilde=g.Ytilde.value,
            A_comp=g.Ara.value,
            A_tan=g.Aab.value if s.n > 2 else zeros,
            cotton_comp=g.cotton.value,
            bach_rad=g.bach.rad.value,
            bach_tan=g.bach.tan.value,
            obstruction_k=_val(g.obstruction(k_for_obstruction)) if k_for_obstruction >= 3 else zeros,
            k_for_obstruction=k_for_obstruction,
            interior=interior_mask(s),
        )


def sigma_field(s: RotSymStructure, k: int) -> np.ndarray:
    with np.errstate(all="ignore"):
        val = _val(s.geometry.sigma(k))
    return np.broadcast_to(val, s.r.shape).copy() if np.ndim(val) == 0 else val


def export_csv(s: RotSymStructure, path, kmax: int = 2) -> None:
    import csv

    b = curvature_bundle(s)
    cols = {
        "r": s.r, "alpha": s.alpha.value, "f": s.f.value, "v": s.v.value, "J": b.J,
        "P_rad": b.P_rad, "P_tan": b.P_tan, "Y": b.Y,
    }
    for k in range(1, kmax + 1):
        cols[f"sigma_{k}"] = sigma_field(s, k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        for i in range(len(s.r)):
            w.writerow([repr(float(np.real(cols[c][i]))) for c in cols])


# ---------------------------------------------------------------------------
# conformal change

class ConformalError(ValueError):
    pass


@dataclass(frozen=True)
class ConformalReport:
    J: float
    P: float
    A: float
    cotton: float

    @property
    def max(self) -> float:
        return max(self.J, self.P, self.A, self.cotton)


def conformal_rescale(s: RotSymStructure, u: Field, mask: Optional[np.ndarray] = None
                      ) -> tuple[RotSymStructure, ConformalReport]:
    """(u^-2 g, u^-1 v) together with a check of the transformation laws.

    With f = (m+n-2) ln u the laws read, in orthonormal components,
    J' = u^2 (J + Delta_phi f - |df|^2 / 2),
    P' = u^2 (P + Hess f + df^2/(m+n-2) - |df|^2 g/(2(m+n-2))),
    A' = u^2 A and dP' = u^3 (dP - A(., ., grad f, .)).
    """
    uj = s.as_jet(u, EVEN)
    if np.any(~(uj.value[s.v.value > 0].real > 0)):
        raise ConformalError("u must be positive where v > 0")
    t = RotSymStructure(s.r, s.alpha - uj.log(), s.f / uj, s.v / uj, s.n, s.m, s.mu, s.kappa,
                        s.topology, s.label + "-rescaled", check=False)
    g, gt = s.geometry, t.geometry
    w = -uj.log()
    ws = g.D(w)
    hw = g.hessian(w)
    u2 = uj * uj
    c = s.m + s.n - 2
    J_law = u2 * (g.J - c * g.weighted_laplacian(w) - 0.5 * c * c * ws * ws)
    P_law = Sym2(u2 * (g.P.rad - c * hw.rad + 0.5 * c * ws * ws),
                 u2 * (g.P.tan - c * hw.tan - 0.5 * c * ws * ws))
    A_law = u2 * g.Ara
    C_law = u2 * uj * (g.cotton + c * ws * g.Ara)
    mask = interior_mask(s) if mask is None else mask

    def err(a, b):
        return float(np.max(np.abs(_val(a - b)[mask])))

    rep = ConformalReport(
        J=err(gt.J, J_law),
        P=max(err(gt.P.rad, P_law.rad), err(gt.P.tan, P_law.tan)),
        A=err(gt.Ara, A_law),
        cotton=err(gt.cotton, C_law),
    )
    return t, rep


# ---------------------------------------------------------------------------
# divergence and trace identities (finite differences of nodal fields)

@dataclass(frozen=True)
class DivergenceResiduals:
    schouten: float
    newton_1: float
    newton_k: float
    trace_cotton: float
    trace_weyl: float
    k: int

    def as_dict(self) -> dict:
        return {
            "div_schouten": self.schouten,
            "div_newton_1": self.newton_1,
            f"div_newton_{self.k}": self.newton_k,
            "trace_cotton": self.trace_cotton,
            "trace_weyl": self.trace_weyl,
        }

    @property
    def max(self) -> float:
        return max(self.schouten, self.newton_1, self.newton_k, self.trace_cotton, self.trace_weyl)


def nodal(x, shape) -> np.ndarray:
    val = _val(x)
    return np.broadcast_to(val, shape).astype(float) if np.ndim(val) == 0 else np.real(val)


def fd_D(s: RotSymStructure, x, parity: int = EVEN) -> np.ndarray:
    """Arclength derivative of a jet field by differencing its nodal values."""
    return nodal_radial_derivative(s, nodal(x, s.r.shape), parity)


def newton_div_residual(s: RotSymStructure, k: int) -> np.ndarray:
    """delta_phi T_k + s_k dphi - sum_j (-1)^j T_{k-2-j}(dP . Q_{j+1}), radial component."""
    g = s.geometry
    T = g.newton_tensor(k)
    with np.errstate(all="ignore"):
        res = (fd_D(s, T.rad) + nodal((g.n - 1) * g.H * (T.rad - T.tan) - g.phis * T.rad, s.r.shape)
               + nodal(g.newton_scalar(k) * g.phis, s.r.shape))
        for j in range(0, k - 1):
            Tj = g.newton_tensor(k - 2 - j)
            q = g.P.tan ** (j + 1) - g.Ztilde ** (j + 1)
            term = nodal(Tj.rad * (-(g.n - 1)) * g.cotton * q, s.r.shape)
            res = res - term if j % 2 == 0 else res + term
    return res


def divergence_residuals(s: RotSymStructure, k: int = 2, mask: Optional[np.ndarray] = None
                         ) -> DivergenceResiduals:
    g = s.geometry
    m, n = s.m, s.n
    mask = interior_mask(s) if mask is None else mask
    shp = s.r.shape

    def mx(x):
        return float(np.max(np.abs(x[mask])))

    with np.errstate(all="ignore"):
        P = g.P
        div_P = fd_D(s, P.rad) + nodal((n - 1) * g.H * (P.rad - P.tan) - g.phis * P.rad, shp)
        schouten = div_P - fd_D(s, g.J) + nodal(g.Y * g.phis / m, shp)
        # tr dP = P(grad phi) + dY - Y dphi / m, radial component
        trace_c = (nodal(-(n - 1) * g.cotton - P.rad * g.phis + g.Y * g.phis / m, shp) - fd_D(s, g.Y))
        # tr A = m P/(m+n-2) - Hess phi + dphi^2/m + Y g/(m+n-2)
        c0 = m / (m + n - 2)
        hp = Sym2(g.D(g.phis), g.H * g.phis)  # Hess phi
        trA_rad = (n - 1) * g.Ara
        trA_tan = g.Ara + ((n - 2) * g.Aab if n > 2 else 0.0)
        rhs_rad = c0 * P.rad - hp.rad + g.phis * g.phis / m + g.Y / (m + n - 2)
        rhs_tan = c0 * P.tan - hp.tan + g.Y / (m + n - 2)
        trace_w = max(mx(nodal(trA_rad - rhs_rad, shp)), mx(nodal(trA_tan - rhs_tan, shp)))
    return DivergenceResiduals(
        schouten=mx(schouten),
        newton_1=mx(newton_div_residual(s, 1)),
        newton_k=mx(newton_div_residual(s, k)),
        trace_cotton=mx(trace_c),
        trace_weyl=trace_w,
        k=k,
    )


# ---------------------------------------------------------------------------
# weighted Einstein structures

@dataclass(frozen=True)
class EinsteinScale:
    kappa: float
    lam: float
    residual: float
    einstein_gap: float
    is_einstein: bool
    integral_lhs: Optional[float] = None
    integral_rhs: Optional[float] = None


def _positive_v_mask(s: RotSymStructure) -> np.ndarray:
    mask = interior_mask(s, axis_collar=0.1, v_floor=0.0)
    return mask & (s.v.value.real > 0)


def einstein_scale(s: RotSymStructure, rel_tol: float = 1e-6) -> EinsteinScale:
    """Fit P = lambda g and J + m kappa / v = (m+n) lambda.

    The scale equation is multiplied through by v before the least-squares
    fit, which keeps it well posed where v vanishes.
    """
    g = s.geometry
    mask = _positive_v_mask(s)
    pr, pt = g.P.rad.value[mask], g.P.tan.value[mask]
    lam = float(np.mean(np.concatenate([pr, pt])))
    gap = float(np.max(np.abs(pr - pt)))
    v = s.v.value[mask]
    J = g.J.value[mask]
    m, n = s.m, s.n
    rhs = v * ((m + n) * lam - J)
    kappa = float(np.mean(rhs) / m)
    residual = max(float(np.max(np.abs(pr - lam))), float(np.max(np.abs(pt - lam))),
                   float(np.max(np.abs(rhs - m * kappa))))
    out = dict(kappa=kappa, lam=lam, residual=residual, einstein_gap=gap,
               is_einstein=gap <= rel_tol * (1 + abs(lam)) and residual <= rel_tol * (1 + abs(lam)))
    if s.mu == 0 and s.topology is Topology.CLOSED_SPHERE:
        out["integral_lhs"] = float(lam * volume(s))
        out["integral_rhs"] = float((2 * m + n - 2) / (2 * (m + n - 1)) * kappa
                                    * integrate(s, np.ones_like(s.r), v_power=m - 1))
    return EinsteinScale(**out)


@dataclass(frozen=True)
class WeConstantsReport:
    lam: float
    kappa: float
    sigma: dict
    scalar: dict
    newton: dict
    bach: float

    @property
    def max(self) -> float:
        return max([self.bach, *self.sigma.values(), *self.scalar.values(), *self.newton.values()])


def we_constants_check(s: RotSymStructure, k_max: int = 3, mask: Optional[np.ndarray] = None
                       ) -> WeConstantsReport:
    """Compare a weighted Einstein structure with its closed-form invariants."""
    es = einstein_scale(s)
    g = s.geometry.__class__(s.with_kappa(es.kappa)) if es.kappa != s.kappa else s.geometry
    lam, kappa = es.lam, es.kappa
    m, n = s.m, s.n
    mask = interior_mask(s) if mask is None else mask

    def err(x, c):
        return float(np.max(np.abs(nodal(x, s.r.shape)[mask] - c)))

    sig, sc, nt = {}, {}, {}
    for k in range(k_max + 1):
        sig[k] = err(g.sigma(k), binom_real(m + n, k) * lam**k)
        sc[k] = err(g.newton_scalar(k), binom_real(m + n - 1, k) * lam**k)
        T = g.newton_tensor(k)
        c = binom_real(m + n - 1, k) * lam**k
        nt[k] = max(err(T.rad, c), err(T.tan, c))
    Pm1 = g.P_m_minus_1
    coef = m * kappa * g.vinv
    shift = m * (m + n - 3) / (m + n - 2) * lam * kappa * g.vinv
    B = g.bach
    bach = max(err(B.rad - (coef * Pm1.rad - shift), 0.0), err(B.tan - (coef * Pm1.tan - shift), 0.0))
    return WeConstantsReport(lam, kappa, sig, sc, nt, bach)


def binom_real(a: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (a - i) / (i + 1)
    return out
