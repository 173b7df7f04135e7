"""Weighted Newton transforms, Newton scalars, cones and inequalities.

Matrices are numpy arrays.  ``dtype=object`` arrays holding ``Fraction`` or
``RationalFunctionM`` entries give exact results; ``float64`` arrays give the
float mode.  None of the polynomial quantities need eigenvalues: they are
built from traces of powers of P.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .wsym import (
    Method,
    RationalFunctionM,
    WeightedSpectrum,
    binom_general,
    is_exact_zero,
    weighted_sigma_all,
)


class Sign(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1


class EqualityCase(enum.Enum):
    ALL_EQUAL = "AllEqual"
    LAMBDA_ZERO_SPARSE = "LambdaZeroSparse"
    BOUNDARY_M = "BoundaryM"
    STRICT = "Strict"


class ConeViolation(ValueError):
    def __init__(self, report: "ConeReport"):
        super().__init__(f"outside the cone: sigma_{report.first_violation} has the wrong sign")
        self.report = report


def _is_exact(P: np.ndarray) -> bool:
    return P.dtype == object


def _identity_like(P: np.ndarray):
    n = P.shape[0]
    if _is_exact(P):
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = Fraction(int(i == j))
        return out
    return np.eye(n)


def _trace(A):
    acc = 0
    for i in range(A.shape[0]):
        acc = acc + A[i, i]
    return acc


def _zero(x) -> bool:
    if isinstance(x, RationalFunctionM):
        return x.is_zero()
    return x == 0


@dataclass(frozen=True)
class MatrixState:
    """A symmetric endomorphism P together with lambda and m."""

    P: np.ndarray
    lam: object
    m: object
    eigen_cache: Optional[tuple] = field(default=None, compare=False)
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        P = np.asarray(self.P)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("P must be square")
        if _is_exact(P):
            for i in range(P.shape[0]):
                for j in range(i):
                    if not _zero(P[i, j] - P[j, i]):
                        raise ValueError("P is not symmetric")
        else:
            P = P.astype(float)
            if not np.array_equal(P, P.T):
                asym = np.max(np.abs(P - P.T))
                if asym > 1e-12 * (1 + np.max(np.abs(P))):
                    raise ValueError("P is not symmetric")
                P = 0.5 * (P + P.T)
        object.__setattr__(self, "P", P)
        if not isinstance(self.m, RationalFunctionM) and self.m <= 0:
            raise ValueError("m must be positive")

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def exact(self) -> bool:
        return _is_exact(self.P)

    @property
    def z(self):
        return self.lam / self.m

    def powers(self, kmax: int) -> list:
        out = self._memo.get("powers")
        if out is None or len(out) <= kmax:
            out = [_identity_like(self.P)]
            for _ in range(kmax):
                out.append(out[-1].dot(self.P))
            self._memo["powers"] = out
        return out[: kmax + 1]

    def with_eigen_cache(self) -> "MatrixState":
        return MatrixState(self.P, self.lam, self.m, tuple(eigenvalues(self)))


def diag_state(entries: Sequence, lam, m) -> MatrixState:
    n = len(entries)
    exact = not any(isinstance(x, float) for x in list(entries) + [lam, m])
    if exact:
        P = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                P[i, j] = Fraction(entries[i]) if i == j else Fraction(0)
        return MatrixState(P, lam, m)
    return MatrixState(np.diag(np.asarray(entries, float)), float(lam), float(m))


# ---------------------------------------------------------------------------
# polynomial invariants

def matrix_power_sums(s: MatrixState, kmax: int) -> list:
    """[N_1, ..., N_kmax] with N_j = m z^j + tr P^j."""
    pw = s.powers(kmax)
    z = s.z
    return [s.m * z**j + _trace(pw[j]) for j in range(1, kmax + 1)]


def sigma_all_of_matrix(s: MatrixState, kmax: int) -> list:
    cached = s._memo.get("sigma")
    if cached is not None and len(cached) > kmax:
        return cached[: kmax + 1]
    sig = _sigma_all_of_matrix(s, kmax)
    s._memo["sigma"] = sig
    return list(sig)


def _sigma_all_of_matrix(s: MatrixState, kmax: int) -> list:
    sums = matrix_power_sums(s, kmax)
    sig = [1]
    for k in range(1, kmax + 1):
        acc = 0
        for j in range(k):
            term = sig[k - 1 - j] * sums[j]
            acc = acc + term if j % 2 == 0 else acc - term
        sig.append(acc / k)
    return sig


def sigma_of_matrix(s: MatrixState, k: int):
    if k < 0:
        raise ValueError("k must be nonnegative")
    return sigma_all_of_matrix(s, k)[k]


def classical_sigma_all(M: np.ndarray, kmax: int) -> list:
    """Classical sigma_j(M), j <= kmax, from traces of powers."""
    pw = [_identity_like(M)]
    for _ in range(kmax):
        pw.append(pw[-1].dot(M))
    sums = [_trace(pw[j]) for j in range(1, kmax + 1)]
    sig = [1]
    for k in range(1, kmax + 1):
        acc = 0
        for j in range(k):
            term = sig[k - 1 - j] * sums[j]
            acc = acc + term if j % 2 == 0 else acc - term
        sig.append(acc / k)
    return sig


def classical_newton_transform(M: np.ndarray, k: int) -> np.ndarray:
    sig = classical_sigma_all(M, k)
    pw = [_identity_like(M)]
    for _ in range(k):
        pw.append(pw[-1].dot(M))
    out = sig[k] * pw[0]
    for j in range(1, k + 1):
        out = out + (-1) ** j * sig[k - j] * pw[j]
    return out


def newton_transform(s: MatrixState, k: int) -> np.ndarray:
    """T_k^m = sum_j (-1)^j sigma_{k-j}^m P^j."""
    sig = sigma_all_of_matrix(s, k)
    pw = s.powers(k)
    out = sig[k] * pw[0]
    for j in range(1, k + 1):
        out = out + (-1) ** j * sig[k - j] * pw[j]
    return out


def newton_transform_recursive(s: MatrixState, k: int) -> np.ndarray:
    """T_{j+1} = sigma_{j+1} I - P T_j, T_0 = I."""
    sig = sigma_all_of_matrix(s, k)
    eye = _identity_like(s.P)
    T = eye
    for j in range(k):
        T = sig[j + 1] * eye - s.P.dot(T)
    return T


def newton_scalar(s: MatrixState, k: int):
    """s_k^m = sum_j (-1)^j (lambda/m)^j sigma_{k-j}^m."""
    sig = sigma_all_of_matrix(s, k)
    z = s.z
    acc = 0
    for j in range(k + 1):
        term = z**j * sig[k - j]
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def newton_scalar_recursive(s: MatrixState, k: int):
    """s_{j+1} = sigma_{j+1} - (lambda/m) s_j, s_0 = 1."""
    sig = sigma_all_of_matrix(s, k)
    val = 1
    for j in range(k):
        val = sig[j + 1] - s.z * val
    return val


def newton_scalar_shifted(s: MatrixState, k: int):
    """sigma_k^{m-1}((m-1) lambda / m; P), the closed form of s_k^m."""
    m1 = s.m - 1
    shifted = MatrixState(s.P, m1 * s.lam / s.m, m1) if not _zero(m1) else None
    if shifted is None:
        raise ValueError("m = 1 has no (m-1)-structure in numeric mode")
    return sigma_of_matrix(shifted, k)


def tracefree_newton(s: MatrixState, k: int) -> np.ndarray:
    """E_k^m = T_k^m - ((m+n-k)/(m+n)) sigma_k^m I."""
    n = s.n
    T = newton_transform(s, k)
    sk = sigma_of_matrix(s, k)
    return T - ((s.m + n - k) / (s.m + n)) * sk * _identity_like(s.P)


def inner(A: np.ndarray, B: np.ndarray):
    """tr(AB) without forming the product."""
    acc = 0
    n = A.shape[0]
    for i in range(n):
        for j in range(n):
            acc = acc + A[i, j] * B[j, i]
    return acc


def shifted_identity(s: MatrixState) -> np.ndarray:
    return s.P - s.z * _identity_like(s.P)


def tracefree_pairing(s: MatrixState, k: int):
    """Returns (<E_k, P - z I>, (k+1) sigma_{k+1} - ((m+n-k)/(m+n)) sigma_1 sigma_k)."""
    n = s.n
    sig = sigma_all_of_matrix(s, k + 1)
    lhs = inner(tracefree_newton(s, k), shifted_identity(s))
    rhs = (k + 1) * sig[k + 1] - ((s.m + n - k) / (s.m + n)) * sig[1] * sig[k]
    return lhs, rhs


def pairing_identity_residual(s: MatrixState, k: int):
    """<T_k, P - z I> - [(k+1) sigma_{k+1} - (m+n-k) z sigma_k]."""
    n = s.n
    sig = sigma_all_of_matrix(s, k + 1)
    lhs = inner(newton_transform(s, k), shifted_identity(s))
    return lhs - ((k + 1) * sig[k + 1] - (s.m + n - k) * s.z * sig[k])


# ---------------------------------------------------------------------------
# inequalities

@dataclass(frozen=True)
class NewtonGap:
    gap: object
    tag: EqualityCase
    exact: bool
    below_threshold: bool = False  # integer m < k - 1, allowed but flagged


def newton_gap_raw(lam, entries, m, k: int):
    sig = weighted_sigma_all(lam, entries, m, k + 1, Method.DIRECT)
    n = len(entries)
    c = Fraction(k) * (m + n - k) / ((k + 1) * (m + n - k + 1))
    return sig[k - 1] * sig[k + 1] - c * sig[k] ** 2


def _equality_case(lam, entries, m, k, close) -> EqualityCase:
    z = lam / m
    if all(close(x, z) for x in entries):
        return EqualityCase.ALL_EQUAL
    if close(lam, 0) and sum(1 for x in entries if not close(x, 0)) <= k - 1:
        return EqualityCase.LAMBDA_ZERO_SPARSE
    if close(m, k - 1) and all(close(x, 0) for x in entries):
        return EqualityCase.BOUNDARY_M
    return EqualityCase.STRICT


def newton_gap(ws: WeightedSpectrum, k: int, rel_tol: float = 1e-9) -> NewtonGap:
    """sigma_{k-1} sigma_{k+1} - k(m+n-k)/((k+1)(m+n-k+1)) sigma_k^2 with its equality tag."""
    if k < 1:
        raise ValueError("k must be positive")
    m = ws.m
    if m is None:
        raise ValueError("the inequality is stated for numeric m")
    below = False
    if m < k - 1:
        if Fraction(m).denominator != 1:
            raise ValueError(
                f"m = {m} < k - 1 = {k - 1} with non-integer m: the assumption m >= k-1 is "
                "necessary (counterexample at Lambda = 0)"
            )
        below = True
    entries = ws.entries
    exact = all(isinstance(x, (int, Fraction)) for x in (ws.lam, *entries))
    gap = newton_gap_raw(ws.lam, entries, m, k)
    if exact:
        tag = _equality_case(ws.lam, entries, m, k, lambda a, b: a == b)
    else:
        scale = 1 + max(abs(float(x)) for x in (ws.lam, *entries))
        tag = _equality_case(
            ws.lam, entries, m, k, lambda a, b: abs(float(a) - float(b)) <= rel_tol * scale
        )
    return NewtonGap(gap, tag, exact, below)


def necessity_counterexample(m, k: int, n: int = 1, lam=Fraction(1)):
    """Gap at Lambda = 0 for m < k - 1; positive for suitable non-integer m."""
    return newton_gap_raw(lam, (Fraction(0),) * n, m, k)


def find_necessity_counterexample(kmax: int = 4, n: int = 1, denominators: Sequence[int] = (2, 3, 4)):
    """First non-integer m < k - 1 with a positive gap at Lambda = 0, as (m, k, gap).

    Not every such m works (m = 1/2, k = 3 gives a negative gap), so a small
    grid of rational m is searched.
    """
    for k in range(2, kmax + 1):
        for d in denominators:
            for num in range(1, d * (k - 1)):
                m = Fraction(num, d)
                if m.denominator == 1:
                    continue
                gap = necessity_counterexample(m, k, n)
                if gap > 0:
                    return m, k, gap
    return None


@dataclass(frozen=True)
class ConeReport:
    k: int
    sign: Sign
    member: bool
    sigma_values: tuple
    first_violation: Optional[int] = None
    newton_tensor_definite: Optional[bool] = None
    newton_scalar_signed: Optional[bool] = None
    min_eigenvalue: Optional[float] = None


def _positive(x) -> bool:
    return x > 0


def _positive_definite_exact(A: np.ndarray) -> bool:
    """Gaussian elimination without pivoting: all pivots positive."""
    M = [[A[i, j] for j in range(A.shape[1])] for i in range(A.shape[0])]
    n = len(M)
    for p in range(n):
        if not M[p][p] > 0:
            return False
        for i in range(p + 1, n):
            f = M[i][p] / M[p][p]
            for j in range(p, n):
                M[i][j] = M[i][j] - f * M[p][j]
    return True


def cone_membership(s: MatrixState, k: int, sign: Sign = Sign.POSITIVE) -> ConeReport:
    sig = sigma_all_of_matrix(s, max(k, 0))
    eps = sign.value
    violation = None
    for j in range(1, k + 1):
        if not _positive(eps**j * sig[j]):
            violation = j
            break
    member = violation is None
    if not member or k < 1:
        return ConeReport(k, sign, member, tuple(sig[1:]), violation)
    T = eps ** (k - 1) * newton_transform(s, k - 1)
    sc = eps ** (k - 1) * newton_scalar(s, k - 1)
    Tf = np.array([[float(x) for x in row] for row in T], dtype=float)
    min_eig = float(np.linalg.eigvalsh(Tf)[0]) if s.n else float("inf")
    definite = _positive_definite_exact(T) if s.exact else min_eig > 0
    return ConeReport(k, sign, True, tuple(sig[1:]), None, definite, bool(sc > 0), min_eig)


def maclaurin_gap(s: MatrixState, k: int, sign: Sign = Sign.POSITIVE):
    """(+-1)^{k+1} [sigma_{k+1} - (m+n-k)/((m+n)(k+1)) sigma_1 sigma_k]."""
    rep = cone_membership(s, k, sign)
    if not rep.member:
        raise ConeViolation(rep)
    n = s.n
    sig = sigma_all_of_matrix(s, k + 1)
    val = sig[k + 1] - ((s.m + n - k) / ((s.m + n) * (k + 1))) * sig[1] * sig[k]
    return sign.value ** (k + 1) * val


def kappa_derivative_residual(s: MatrixState, k: int, kappa):
    """d/dkappa sigma_k^m(lambda + m kappa; P) - m s_{k-1}^m(lambda + m kappa; P).

    sigma_k^m(lambda + m kappa) = sum_j binom(m, j) (z + kappa)^j sigma_{k-j}(P) is a
    polynomial in kappa and is differentiated term by term.
    """
    if k < 1:
        raise ValueError("k must be positive")
    cl = classical_sigma_all(s.P, k)
    z = s.z
    deriv = 0
    for j in range(1, k + 1):
        deriv = deriv + binom_general(s.m, j) * j * (z + kappa) ** (j - 1) * cl[k - j]
    shifted = MatrixState(s.P, s.lam + s.m * kappa, s.m)
    return deriv - s.m * newton_scalar(shifted, k - 1)


# ---------------------------------------------------------------------------
# eigenvalues

def eigenvalues(s: MatrixState) -> list:
    """Sorted eigenvalues: exact when P is rational with rational spectrum."""
    if s.exact:
        ex = exact_eigenvalues(s.P)
        if ex is not None:
            return ex
    Pf = np.array([[float(x) for x in row] for row in s.P], dtype=float)
    return sorted(float(x) for x in np.linalg.eigvalsh(Pf))


def exact_eigenvalues(P: np.ndarray, max_den: int = 10**6) -> Optional[list]:
    """Rational spectrum of a rational symmetric matrix, or None.

    Float roots are rationalized and then certified by comparing the exact
    characteristic polynomial coefficients with those of prod (x - r_i).
    """
    n = P.shape[0]
    if n == 0:
        return []
    try:
        Pf = np.array([[float(x) for x in row] for row in P], dtype=float)
    except TypeError:
        return None
    roots = [Fraction(float(x)).limit_denominator(max_den) for x in np.linalg.eigvalsh(Pf)]
    target = classical_sigma_all(P, n)
    cand = [1] + [0] * n
    for r in roots:
        for j in range(n, 0, -1):
            cand[j] = cand[j] + r * cand[j - 1]
    if all(Fraction(a) == Fraction(b) for a, b in zip(cand, target)):
        return sorted(roots)
    return None


def block_matrix(s: MatrixState) -> np.ndarray:
    """Integer m: P (+) (lambda/m) I_m."""
    m = s.m
    if isinstance(m, RationalFunctionM) or Fraction(m).denominator != 1:
        raise ValueError("block form needs integer m")
    m = int(m)
    n = s.n
    N = n + m
    if s.exact:
        B = np.empty((N, N), dtype=object)
        for i in range(N):
            for j in range(N):
                B[i, j] = Fraction(0)
    else:
        B = np.zeros((N, N))
    B[:n, :n] = s.P
    for i in range(n, N):
        B[i, i] = s.z
    return B


def residual_is_zero(x) -> bool:
    if isinstance(x, np.ndarray):
        return all(is_exact_zero(v) for v in x.ravel())
    return is_exact_zero(x)
