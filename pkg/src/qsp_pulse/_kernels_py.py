"""Pure-Python RK4 kernel, used when the compiled extension is unavailable."""
import numpy as np


def rk4_su2(phi, omegas, dt):
    """Same contract as the compiled ``rk4_su2``."""
    phi = np.asarray(phi, dtype=float)
    n = (phi.size - 1) // 2
    e = np.exp(1j * phi).tolist()
    ec = np.exp(-1j * phi).tolist()
    h2 = 0.5 * dt
    h6 = dt / 6.0
    out = np.empty((len(omegas), 2), dtype=complex)
    for s, w in enumerate(np.asarray(omegas, dtype=float).tolist()):
        mi = -1j * w
        u, v = 1.0 + 0j, 0j
        for i in range(n):
            k = 2 * i
            k1u = mi * ec[k] * v
            k1v = mi * e[k] * u
            k2u = mi * ec[k + 1] * (v + h2 * k1v)
            k2v = mi * e[k + 1] * (u + h2 * k1u)
            k3u = mi * ec[k + 1] * (v + h2 * k2v)
            k3v = mi * e[k + 1] * (u + h2 * k2u)
            k4u = mi * ec[k + 2] * (v + dt * k3v)
            k4v = mi * e[k + 2] * (u + dt * k3u)
            u += h6 * (k1u + 2 * k2u + 2 * k3u + k4u)
            v += h6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        out[s] = u, v
    return out
