# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 propagation of the single-qubit drive, first column only."""
import numpy as np
from libc.math cimport cos, sin


def rk4_su2(const double[::1] phi, const double[::1] omegas, double dt):
    """Integrate du/dt = -i w e^{-i phi} v, dv/dt = -i w e^{i phi} u.

    ``phi`` holds 2n+1 samples spaced dt/2 apart; returns (m, 2) complex
    array of the final (u, v) for each drive amplitude, starting at (1, 0).
    """
    cdef Py_ssize_t ns = phi.shape[0]
    cdef Py_ssize_t n = (ns - 1) // 2
    cdef Py_ssize_t m = omegas.shape[0]
    cdef Py_ssize_t i, s, k
    cdef double[::1] cr = np.empty(ns)
    cdef double[::1] ci = np.empty(ns)
    for i in range(ns):
        cr[i] = cos(phi[i])
        ci[i] = sin(phi[i])
    out = np.empty((m, 2), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double complex u, v, e0, eh, e1, mi, k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    for s in range(m):
        mi = -1j * omegas[s]
        u = 1.0
        v = 0.0
        for i in range(n):
            k = 2 * i
            e0 = cr[k] + 1j * ci[k]
            eh = cr[k + 1] + 1j * ci[k + 1]
            e1 = cr[k + 2] + 1j * ci[k + 2]
            k1u = mi * e0.conjugate() * v
            k1v = mi * e0 * u
            k2u = mi * eh.conjugate() * (v + h2 * k1v)
            k2v = mi * eh * (u + h2 * k1u)
            k3u = mi * eh.conjugate() * (v + h2 * k2v)
            k3v = mi * eh * (u + h2 * k2u)
            k4u = mi * e1.conjugate() * (v + dt * k3v)
            k4v = mi * e1 * (u + dt * k3u)
            u = u + h6 * (k1u + 2 * k2u + 2 * k3u + k4u)
            v = v + h6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        o[s, 0] = u
        o[s, 1] = v
    return out
