"""Time-ordered propagators of H(t) = omega (cos phi(t) X + sin phi(t) Y),
segment generators, the atan2 digitizer and Magnus-term diagnostics."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import MagnusRangeViolation
from .numkit import I2, su2_exp, su2_log
from .pulse import Pulse

_MAX_STEPS = 1 << 22


@dataclass(frozen=True)
class SegmentGenerator:
    """Pauli components of the generator: U = exp(-i(aX + bY + cZ))."""

    a: float
    b: float
    c: float
    t1: float
    t2: float
    omega: float

    @property
    def phase(self) -> float:
        return math.atan2(self.b, self.a)


def _uv_to_matrix(uv):
    u, v = uv
    nrm = math.sqrt(abs(u) ** 2 + abs(v) ** 2)
    u, v = u / nrm, v / nrm
    return np.array([[u, -np.conj(v)], [v, np.conj(u)]])


def propagate_many(p: Pulse, omegas, t1: float, t2: float, rtol: float = 1e-10):
    """Propagators U(t2, t1; omega) for several drive amplitudes on a shared
    RK4 grid. Returns an array of shape (len(omegas), 2, 2)."""
    omegas = np.ascontiguousarray(omegas, dtype=float)
    tau = t2 - t1
    if tau < 0:
        raise ValueError("need t1 <= t2")
    if tau == 0 or omegas.size == 0:
        return np.broadcast_to(I2, (omegas.size, 2, 2)).copy()
    wmax = float(np.max(np.abs(omegas)))
    n = max(64, math.ceil(wmax * tau * 64))

    def run(n):
        ts = np.linspace(t1, t2, 2 * n + 1)
        return kernels.rk4_su2(np.ascontiguousarray(p(ts), dtype=float), omegas, tau / n)

    coarse = run(n)
    while True:
        fine = run(2 * n)
        # RK4 error of the finer solution is about |fine - coarse| / 15
        err = float(np.max(np.abs(fine - coarse))) / 15.0
        if err <= rtol:
            break
        if 2 * n >= _MAX_STEPS:
            warnings.warn(f"propagate: step cap reached, error estimate {err:.2e}")
            break
        n *= 2
        coarse = fine
    best = fine + (fine - coarse) / 15.0
    return np.stack([_uv_to_matrix(uv) for uv in best])


def propagate(p: Pulse, omega: float, t1: float, t2: float, rtol: float = 1e-10) -> np.ndarray:
    """RK4 solution of dU/dt = -iH(t)U on [t1, t2], projected onto SU(2)."""
    return propagate_many(p, [omega], t1, t2, rtol)[0]


def linear_pulse_propagator(alpha: float, omega: float, t1: float, t2: float) -> np.ndarray:
    """Closed form for phi(t) = alpha t: R(t2) V R(-t1) with R(t) = e^{-i alpha t Z/2}."""
    dt = t2 - t1
    R2 = su2_exp(0.0, 0.0, 0.5 * alpha * t2)
    R1 = su2_exp(0.0, 0.0, -0.5 * alpha * t1)
    V = su2_exp(omega * dt, 0.0, -0.5 * alpha * dt)
    return R2 @ V @ R1


def extract_generator(U, t1: float, t2: float, omega: float) -> SegmentGenerator:
    a, b, c = su2_log(U)
    return SegmentGenerator(a, b, c, t1, t2, omega)


def digitize(p: Pulse, omega: float, L: int, rtol: float = 1e-12) -> np.ndarray:
    """psi_j = atan2(b_j, a_j) from the exact generator of each of L segments."""
    tau = p.T / L
    if omega * tau >= math.pi:
        raise MagnusRangeViolation(f"omega*tau = {omega * tau:.4f} >= pi")
    edges = np.linspace(0.0, p.T, L + 1)
    out = np.empty(L)
    for j in range(L):
        U = propagate(p, omega, edges[j], edges[j + 1], rtol)
        out[j] = extract_generator(U, edges[j], edges[j + 1], omega).phase
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def magnus_terms(p: Pulse, omega: float, t1: float, t2: float):
    """First Magnus term (as a SegmentGenerator with c = 0) and the Z
    coefficient of the second term.

    With U ~ exp(-i(aX + bY + cZ)), the second term contributes
    c2 = -omega^2 int_{t1}^{t2} int_{t1}^{s} sin(phi(s) - phi(r)) dr ds.
    """
    h = t2 - t1
    s = t1 + h * _GL_X
    ph = p(s)
    a1 = omega * h * float(np.dot(_GL_W, np.cos(ph)))
    b1 = omega * h * float(np.dot(_GL_W, np.sin(ph)))
    # Duffy map of the triangle r < s: s = t1 + h u, r = t1 + h u v
    u = _GL_X[:, None]
    r = t1 + h * u * _GL_X[None, :]
    integrand = np.sin(ph[:, None] - p(r)) * u
    c2 = -omega**2 * h**2 * float(_GL_W @ integrand @ _GL_W)
    return SegmentGenerator(a1, b1, 0.0, t1, t2, omega), c2
