"""Small dense kernels: SU(2)/SO(3)/quaternion maps, midpoint-grid Fourier
transforms, a natural cubic spline and a tridiagonal solver.

All functions are pure and operate on numpy arrays.
"""
from __future__ import annotations

import numpy as np

from .errors import (
    AliasingRisk,
    AntipodalSingularity,
    InsufficientPoints,
    NonMonotonicKnots,
    NotUnitary,
    Singular,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([X, Y, Z])


def spectral_norm(A) -> float:
    return float(np.linalg.norm(A, 2))


def unitarity_defect(U) -> float:
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])))


def su2_exp(a: float, b: float, c: float) -> np.ndarray:
    """exp(-i(aX + bY + cZ)) via the Rodrigues form."""
    th = np.sqrt(a * a + b * b + c * c)
    sinc = np.sinc(th / np.pi)  # sin(th)/th
    return np.cos(th) * I2 - 1j * sinc * (a * X + b * Y + c * Z)


def su2_log(U, tol: float = 1e-10) -> tuple[float, float, float]:
    """Return (a, b, c) with exp(-i(aX+bY+cZ)) = U and norm in [0, pi].

    Raises NotUnitary if U is not in SU(2) within ``tol`` and
    AntipodalSingularity when U is within 1e-8 of -I.
    """
    U = np.asarray(U, dtype=complex)
    if unitarity_defect(U) > tol or abs(np.linalg.det(U) - 1.0) > max(tol, 1e-12) * 10:
        raise NotUnitary("matrix is not in SU(2) within tolerance")
    if spectral_norm(U + I2) < 1e-8:
        raise AntipodalSingularity("U is -I; rotation axis undefined")
    cos_t = 0.5 * np.trace(U).real
    # Tr(U sigma) = -2i sin(theta) n
    s = np.array([-0.5 * np.trace(U @ P).imag for P in PAULIS])
    sin_t = np.linalg.norm(s)
    theta = np.arctan2(sin_t, cos_t)
    if theta < 1e-6:
        factor = 1.0 + sin_t * sin_t / 6.0
    else:
        factor = theta / sin_t
    a, b, c = factor * s
    return float(a), float(b), float(c)


def project_su2(U) -> np.ndarray:
    """Nearest unitary (polar factor) of a 2x2 matrix, rescaled to det 1."""
    W, _, Vh = np.linalg.svd(np.asarray(U, dtype=complex))
    Q = W @ Vh
    return Q / np.sqrt(np.linalg.det(Q))


def polar3(B) -> np.ndarray:
    """Nearest rotation to a real 3x3 matrix in Frobenius norm (via SVD)."""
    B = np.asarray(B, dtype=float)
    W, sv, Vt = np.linalg.svd(B)
    if sv[-1] <= 1e-12:
        raise Singular(f"smallest singular value {sv[-1]:.3e} too small")
    R = W @ Vt
    if np.linalg.det(R) < 0:
        W = W.copy()
        W[:, -1] *= -1
        R = W @ Vt
    return R


def adjoint_rotation(U) -> np.ndarray:
    """R_ij = Tr(sigma_i U sigma_j U^dagger) / 2."""
    U = np.asarray(U, dtype=complex)
    conj = np.einsum("ab,jbc,dc->jad", U, PAULIS, U.conj())
    return 0.5 * np.einsum("iba,jab->ij", PAULIS, conj).real


def quat_from_rotation(R) -> np.ndarray:
    """Unit quaternion (w, x, y, z) with w >= 0 for a rotation matrix."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0:
        w = 0.5 * np.sqrt(1.0 + tr)
        x = (R[2, 1] - R[1, 2]) / (4 * w)
        y = (R[0, 2] - R[2, 0]) / (4 * w)
        z = (R[1, 0] - R[0, 1]) / (4 * w)
    else:
        # w close to zero: pivot on the largest diagonal entry
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        v = np.empty(3)
        v[i] = 0.5 * np.sqrt(max(1.0 + R[i, i] - R[j, j] - R[k, k], 0.0))
        v[j] = (R[j, i] + R[i, j]) / (4 * v[i])
        v[k] = (R[k, i] + R[i, k]) / (4 * v[i])
        w = (R[k, j] - R[j, k]) / (4 * v[i])
        x, y, z = v
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q


def su2_from_quat(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([[w - 1j * z, -1j * x - y], [-1j * x + y, w + 1j * z]])


# Fourier transforms on the midpoint grid theta_j = (2j+1) pi / Nt

def midpoint_grid(n_total: int) -> np.ndarray:
    return (2 * np.arange(n_total) + 1) * np.pi / n_total


def midpoint_idft(samples, L: int) -> np.ndarray:
    """Coefficients C_k, k = -L..L, of sum_k C_k e^{ik theta} from samples
    on the full-circle midpoint grid. Returns an array of shape (2L+1, ...).
    """
    A = np.asarray(samples, dtype=complex)
    nt = A.shape[0]
    if nt % 4 or nt // 4 <= L:
        raise AliasingRisk(f"need 4N samples with N > L; got {nt} samples for L={L}")
    Ct = np.fft.fft(A, axis=0) / nt
    k = np.arange(-L, L + 1)
    phase = np.exp(-1j * np.pi * k / nt).reshape((-1,) + (1,) * (A.ndim - 1))
    return Ct[k % nt] * phase


def midpoint_dft_direct(samples, L: int) -> np.ndarray:
    """O(Nt^2) reference for midpoint_idft."""
    A = np.asarray(samples, dtype=complex)
    nt = A.shape[0]
    th = midpoint_grid(nt)
    k = np.arange(-L, L + 1)
    E = np.exp(-1j * np.outer(k, th)) / nt
    return np.tensordot(E, A, axes=(1, 0))


def fourier_eval(coeffs, thetas) -> np.ndarray:
    """Evaluate sum_k C_k e^{ik theta} for k = -L..L at each theta."""
    C = np.asarray(coeffs)
    L = (C.shape[0] - 1) // 2
    k = np.arange(-L, L + 1)
    E = np.exp(1j * np.outer(np.atleast_1d(thetas), k))
    return np.tensordot(E, C, axes=(1, 0))


# Splines

def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas algorithm. ``lower`` and ``upper`` have length n-1; rhs may be 2-D."""
    d = np.array(diag, dtype=float)
    r = np.array(rhs, dtype=float)
    lo = np.asarray(lower, dtype=float)
    up = np.asarray(upper, dtype=float)
    n = d.size
    for i in range(1, n):
        m = lo[i - 1] / d[i - 1]
        d[i] -= m * up[i - 1]
        r[i] -= m * r[i - 1]
    x = np.empty_like(r)
    x[-1] = r[-1] / d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (r[i] - up[i] * x[i + 1]) / d[i]
    return x


class NaturalCubicSpline:
    """Natural cubic interpolant; outside the knot range the end cubics are
    continued."""

    def __init__(self, knots, values):
        x = np.asarray(knots, dtype=float)
        y = np.asarray(values, dtype=float)
        if x.size < 3 or x.size != y.size:
            raise InsufficientPoints("need at least 3 knots with matching values")
        h = np.diff(x)
        if np.any(h <= 0):
            raise NonMonotonicKnots("knots must be strictly increasing")
        slope = np.diff(y) / h
        m = np.zeros_like(x)
        m[1:-1] = solve_tridiagonal(
            h[1:-1], 2 * (h[:-1] + h[1:]), h[1:-1], 6 * np.diff(slope)
        )
        self.x, self.y, self.h, self.m = x, y, h, m

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.x, t, side="right") - 1, 0, self.h.size - 1)
        return t, i

    def __call__(self, t):
        t, i = self._locate(t)
        x, y, h, m = self.x, self.y, self.h[i], self.m
        a = x[i + 1] - t
        b = t - x[i]
        return (
            m[i] * a**3 / (6 * h)
            + m[i + 1] * b**3 / (6 * h)
            + (y[i] / h - m[i] * h / 6) * a
            + (y[i + 1] / h - m[i + 1] * h / 6) * b
        )

    eval = __call__

    def deriv(self, t):
        t, i = self._locate(t)
        x, y, h, m = self.x, self.y, self.h[i], self.m
        a = x[i + 1] - t
        b = t - x[i]
        return (
            -m[i] * a**2 / (2 * h)
            + m[i + 1] * b**2 / (2 * h)
            + (y[i + 1] - y[i]) / h
            - (m[i + 1] - m[i]) * h / 6
        )


def natural_cubic_spline(knots, values) -> NaturalCubicSpline:
    return NaturalCubicSpline(knots, values)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
