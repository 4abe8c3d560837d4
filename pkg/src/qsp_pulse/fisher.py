"""Fisher information of the QSP surrogate under Gaussian unitary noise:
numerical FIM with analytic derivatives, closed-form Toeplitz constructions,
eigenvalue bounds, determinant sweeps and Cramer-Rao reports."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularFIM
from .numkit import I2, Z
from .qsp import qsp_factor

DFI_FLOOR = 1e-14


@dataclass(eq=False)
class FIMatrix:
    m: np.ndarray
    M: float
    N: int
    nu: float | None
    L: int

    def eigvalsh(self):
        return np.linalg.eigvalsh(self.m)


def _toeplitz(first_col) -> np.ndarray:
    c = np.asarray(first_col)
    n = c.size
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return c[idx]


def fim_numeric(psis, thetas, M: float) -> FIMatrix:
    """F_ij = M sum_theta Re <0| dW/dpsi_i (dW/dpsi_j)^dagger |0>, with
    dV/dpsi = -(i/2)[Z, V] carried through the product by the product rule."""
    psis = np.asarray(psis, dtype=float)
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    L, n = psis.size, th.size
    V = np.stack([qsp_factor(th, p) for p in psis])  # (L, n, 2, 2)
    dV = -0.5j * (Z @ V - V @ Z)
    prefix = np.empty((L + 1, n, 2, 2), dtype=complex)
    prefix[0] = I2
    for k in range(L):
        prefix[k + 1] = V[k] @ prefix[k]
    # row <0| of the product of the factors to the left of factor k
    row = np.zeros((n, 1, 2), dtype=complex)
    row[:, 0, 0] = 1.0
    D = np.empty((L, n, 2), dtype=complex)
    for k in range(L - 1, -1, -1):
        D[k] = (row @ dV[k] @ prefix[k])[:, 0, :]
        row = row @ V[k]
    F = M * np.einsum("inc,jnc->ij", D, D.conj()).real
    return FIMatrix(0.5 * (F + F.T), M, n, float(th.max()) if n else None, L)


def _K(d, N: int, nu: float) -> float:
    """sum_{n=1}^N cos(2 d theta_n) on theta_n = nu n / N."""
    x = d * nu / N
    if abs(math.sin(x)) < 1e-12:
        return float(np.sum(np.cos(2 * d * nu * np.arange(1, N + 1) / N)))
    return math.cos((N + 1) * x) * math.sin(d * nu) / math.sin(x)


def fim_toeplitz_constant(L: int, N: int, nu: float, M: float) -> FIMatrix:
    """FIM at constant phases on theta_n = nu n / N, n = 1..N:
    s_d = (M/4)(2K(d) - K(d+1) - K(d-1))."""
    K = [_K(d, N, nu) for d in range(L + 1)]
    s = [0.25 * M * (2 * K[d] - K[d + 1] - K[abs(d - 1)]) for d in range(L)]
    return FIMatrix(_toeplitz(s), M, N, nu, L)


def fim_midpoint_constant(L: int, N: int, nu: float, M: float) -> np.ndarray:
    """Same quantity on the midpoint grid theta_n = (2n+1) nu / (2N)."""
    th = (2 * np.arange(N) + 1) * nu / (2 * N)
    d = np.arange(L)
    s = M * np.sum(np.sin(th) ** 2 * np.cos(2 * np.outer(d, th)), axis=1)
    return _toeplitz(s)


def second_difference(L: int) -> np.ndarray:
    return 2 * np.eye(L) - np.eye(L, k=1) - np.eye(L, k=-1)


def fim_exact_solvable(L: int, N: int, M: float, r: int):
    """Closed forms for the midpoint grid on [0, r pi/2] with N = r(L+1):
    the FIM is tridiagonal (MN/2 on the diagonal, -MN/4 off it) with inverse
    (4/MN)(min(i,j) - ij/(L+1)). Compare with ``fim_midpoint_constant`` for
    the sampled matrix."""
    F = 0.25 * M * N * second_difference(L)
    i = np.arange(1, L + 1)
    inv = 4.0 / (M * N) * (np.minimum.outer(i, i) - np.outer(i, i) / (L + 1))
    if np.max(np.abs(inv - np.linalg.inv(F))) > 1e-10 * max(1.0, np.abs(inv).max()):
        raise ArithmeticError("closed-form inverse disagrees with direct solve")
    return FIMatrix(F, M, N, r * math.pi / 2, L), inv


def normalized_dfi(F: FIMatrix) -> float:
    """(det F)^{1/L} / (MN), floored at 1e-14."""
    ev = F.eigvalsh()
    if ev.min() <= 0:
        return DFI_FLOOR
    val = math.exp(float(np.mean(np.log(ev)))) / (F.M * F.N)
    return max(val, DFI_FLOOR)


def small_nu_bound(L: int, N: int, M: float, nu: float) -> float:
    return (2.0 / 3.0) * M * N * L * nu * nu


def large_nu_bound(N: int, M: float, nu: float) -> float:
    """Continuum estimate; only meaningful for nu <= pi/2, beyond which the
    largest eigenvalue is close to twice this value."""
    return math.pi / (2 * nu) * math.sin(nu) ** 2 * M * N


def circulant_max_eig(F: FIMatrix) -> float:
    """Largest eigenvalue of the size 2L-2 circulant embedding."""
    s = F.m[0]
    if s.size < 2:
        return float(s[0])
    c = np.concatenate([s, s[-2:0:-1]])
    return float(np.max(np.fft.fft(c).real))


@dataclass(eq=False)
class DFIPoint:
    nu: float
    L: int
    dfi: float
    max_eig: float
    bound: float


def dfi_sweep(L: int, M: float, N: int, nus) -> list[DFIPoint]:
    """Normalized DFI of the constant-phase Toeplitz FIM for each nu.
    ``bound`` is the smaller of the small- and large-nu eigenvalue bounds."""
    out = []
    for nu in nus:
        F = fim_toeplitz_constant(L, N, float(nu), M)
        bound = min(small_nu_bound(L, N, M, nu), large_nu_bound(N, M, nu))
        out.append(DFIPoint(float(nu), L, normalized_dfi(F), float(F.eigvalsh().max()), bound))
    return out


def fim_continuum(L: int, M: float, N: int, nu: float) -> np.ndarray:
    """(MN/nu) int_0^nu sin^2(theta) cos(2 d theta) d theta, Toeplitz in d."""
    def I(k):
        return nu if k == 0 else math.sin(2 * k * nu) / (2 * k)

    s = [M * N / nu * (0.5 * I(d) - 0.25 * I(d + 1) - 0.25 * I(abs(d - 1))) for d in range(L)]
    return _toeplitz(s)


def loewner_check(L: int, M: float, N: int, nu: float):
    """Smallest eigenvalues of F - (pi MN / 8 nu) D and (pi MN / 4 nu) D - F."""
    if not math.pi / 2 - 1e-12 <= nu <= math.pi + 1e-12:
        raise ValueError("nu must lie in [pi/2, pi]")
    F = fim_continuum(L, M, N, nu)
    D = second_difference(L)
    lo = np.linalg.eigvalsh(F - math.pi * M * N / (8 * nu) * D).min()
    hi = np.linalg.eigvalsh(math.pi * M * N / (4 * nu) * D - F).min()
    return float(lo), float(hi)


@dataclass(eq=False)
class CRLBReport:
    variances: np.ndarray
    rho_bar: float
    rho_defined: bool
    covariance: np.ndarray


def crlb_report(F) -> CRLBReport:
    """Diagonal of F^{-1} and the average correlation
    sum_{i<j} C_ij / sum_{i<j} sqrt(C_ii C_jj)."""
    m = F.m if isinstance(F, FIMatrix) else np.asarray(F, dtype=float)
    ev = np.linalg.eigvalsh(m)
    if ev.min() <= 1e-12 * max(abs(ev.max()), 1e-300):
        raise SingularFIM(f"FIM not positive definite (min eigenvalue {ev.min():.2e})")
    C = np.linalg.inv(m)
    var = np.diag(C).copy()
    L = var.size
    if L < 2:
        return CRLBReport(var, 0.0, False, C)
    iu = np.triu_indices(L, 1)
    sig = np.sqrt(var)
    rho_bar = float(C[iu].sum() / np.outer(sig, sig)[iu].sum())
    return CRLBReport(var, rho_bar, True, C)
