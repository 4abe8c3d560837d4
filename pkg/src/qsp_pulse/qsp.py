"""QSP surrogate W(theta, Psi), full-circle augmentation of first-quadrant
samples, Fourier coefficient extraction and the layer-stripping phase
estimator with its variance diagnostics.

Phase vectors are plain float arrays ordered in time: psis[0] is applied
first, i.e. it is the rightmost factor of W.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCoefficient, GridMismatch
from .numkit import I2, X, Y, Z, fourier_eval, midpoint_idft


@dataclass(eq=False)
class SampleSet:
    """Unitary samples W(theta_j) on an ascending theta grid.

    ``noise_sigma`` is the standard deviation of the real and imaginary part
    of the noise on each matrix entry (0 for exact data).
    """

    thetas: np.ndarray
    unitaries: np.ndarray
    L: int
    noise_sigma: float = 0.0

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.unitaries = np.asarray(self.unitaries, dtype=complex)
        if np.any(np.diff(self.thetas) <= 0):
            raise ValueError("thetas must be strictly increasing")

    def __len__(self):
        return self.thetas.size


@dataclass(eq=False)
class FourierStack:
    """Coefficients C_k for k = -L..L, stored at index k + L."""

    coeffs: np.ndarray
    L: int = field(init=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        self.L = (self.coeffs.shape[0] - 1) // 2

    def __getitem__(self, k):
        return self.coeffs[k + self.L]

    def evaluate(self, thetas):
        return fourier_eval(self.coeffs, thetas)


@dataclass(eq=False)
class VarianceProfile:
    """Per-step noise propagation constants of the right-to-left sweep.

    Arrays are ordered by reduction step, stage j = L, L-1, ..., 2; the
    final stage j = 1 is stored in ``terminal``.
    """

    stage: np.ndarray
    g: np.ndarray
    aR: np.ndarray
    aL: np.ndarray
    aP: np.ndarray
    aQ: np.ndarray
    B: np.ndarray
    rho: np.ndarray
    alpha: np.ndarray
    terminal: dict


def wrap_phase(x):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


def projector(phi: float) -> np.ndarray:
    """P_phi = (I - cos(phi) X - sin(phi) Y) / 2."""
    return 0.5 * (I2 - math.cos(phi) * X - math.sin(phi) * Y)


def qsp_factor(thetas, psi: float) -> np.ndarray:
    th = np.atleast_1d(np.asarray(thetas, dtype=float))[:, None, None]
    gen = math.cos(psi) * X + math.sin(psi) * Y
    return np.cos(th) * I2 - 1j * np.sin(th) * gen


def build_W(theta, psis) -> np.ndarray:
    """W = V(theta, psi_L) ... V(theta, psi_1). Vectorized over theta:
    a scalar theta gives a 2x2 matrix, an array gives shape (n, 2, 2)."""
    scalar = np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    W = np.broadcast_to(I2, (th.size, 2, 2)).copy()
    for psi in np.asarray(psis, dtype=float):
        W = qsp_factor(th, psi) @ W
    return W[0] if scalar else W


def midpoint_thetas(N: int) -> np.ndarray:
    """Midpoints (2j+1) pi / (4N) of N cells covering [0, pi/2]."""
    return (2 * np.arange(N) + 1) * np.pi / (4 * N)


def exact_samples(psis, N: int | None = None) -> SampleSet:
    psis = np.asarray(psis, dtype=float)
    N = psis.size + 1 if N is None else N
    th = midpoint_thetas(N)
    return SampleSet(th, build_W(th, psis), psis.size)


def add_entry_noise(samples: SampleSet, sigma: float, rng) -> SampleSet:
    """Gaussian noise on the real coordinates of W = aI + i(bZ + cY + dX).

    Each of a, b, c, d receives independent N(0, sigma^2) noise, so every
    matrix entry has real and imaginary parts of standard deviation sigma.
    With sigma^2 = 1/M this is the model behind ``fisher.fim_numeric``.
    """
    n = rng.normal(0.0, sigma, (len(samples), 4))[:, :, None, None]
    noise = n[:, 0] * I2 + 1j * (n[:, 1] * Z + n[:, 2] * Y + n[:, 3] * X)
    return SampleSet(samples.thetas, samples.unitaries + noise, samples.L, sigma)


def augment_full_circle(samples: SampleSet) -> SampleSet:
    """Extend first-quadrant midpoint samples to the 4N-point grid on
    [0, 2 pi) using W(pi - theta) = (-1)^L Z W Z and W(2 pi - theta) = Z W Z."""
    N = len(samples)
    if not np.allclose(samples.thetas, midpoint_thetas(N), rtol=0, atol=1e-9):
        raise GridMismatch("thetas are not the midpoint grid of [0, pi/2]")
    A = samples.unitaries
    sign = -1.0 if samples.L % 2 else 1.0
    half = np.concatenate([A, sign * (Z @ A[::-1] @ Z)])
    full = np.concatenate([half, Z @ half[::-1] @ Z])
    th = (2 * np.arange(4 * N) + 1) * np.pi / (4 * N)
    return SampleSet(th, full, samples.L, samples.noise_sigma)


def fourier_coeffs(samples: SampleSet, L: int | None = None) -> FourierStack:
    """C_k, |k| <= L, from full-circle samples (see ``augment_full_circle``)."""
    L = samples.L if L is None else L
    return FourierStack(midpoint_idft(samples.unitaries, L))


def _read_phase(P) -> float:
    return math.atan2((P[0, 1] - P[1, 0]).imag, -(P[0, 1] + P[1, 0]).real)


def _leading_projector(top):
    s = float(np.vdot(top, top).real)
    if s < 1e-14:
        raise DegenerateCoefficient(f"leading coefficient norm^2 {s:.2e} below 1e-14")
    return top.conj().T @ top / s


def _sweep(C) -> np.ndarray:
    """Strip factors from the right of W; returns psi_1, psi_2, ... in order."""
    L = (C.shape[0] - 1) // 2
    out = np.empty(L)
    for n in range(L):
        P = _leading_projector(C[-1])
        out[n] = _read_phase(P)
        Q = I2 - P
        # W V(-theta, phi): C'_k = C_{k-1} Q + C_{k+1} P
        C = C[:-2] @ Q + C[2:] @ P
    return out


def estimate_phases(coeffs: FourierStack, direction: str = "stitched") -> np.ndarray:
    """Estimate Psi from Fourier coefficients.

    ``right-to-left`` peels psi_1 first, ``left-to-right`` works on the
    transposed coefficients and peels psi_L first, ``stitched`` keeps the
    first ceil(L/2) phases of the former and the rest from the latter.
    """
    C = coeffs.coeffs
    L = coeffs.L
    if direction not in ("right-to-left", "left-to-right", "stitched"):
        raise ValueError(f"unknown direction {direction!r}")
    if direction != "left-to-right":
        fwd = _sweep(C)
        if direction == "right-to-left":
            return wrap_phase(fwd)
    # V(theta, psi)^T = V(theta, -psi), so W^T has phases -psi_L, ..., -psi_1
    bwd = -_sweep(np.swapaxes(C, 1, 2))[::-1]
    if direction == "left-to-right":
        return wrap_phase(bwd)
    m = math.ceil(L / 2)
    return wrap_phase(np.concatenate([fwd[:m], bwd[m:]]))


def learn_phases(samples: SampleSet, direction: str = "stitched") -> np.ndarray:
    """First-quadrant samples to phase estimates."""
    return estimate_phases(fourier_coeffs(augment_full_circle(samples)), direction)


def _inner(A, B) -> complex:
    return complex(np.vdot(A, B))


def _riesz_projector(P, G, scale):
    return scale * (P @ (G - G.conj().T) - 2j * np.trace(P @ G).imag * P)


def variance_profile(coeffs: FourierStack, psis) -> VarianceProfile:
    """Gains and Riesz-representative norms along a clean right-to-left
    reduction of noiseless coefficients for the phases ``psis``."""
    C = coeffs.coeffs
    L = coeffs.L
    psis = np.asarray(psis, dtype=float)
    rows = []
    for j in range(L, 0, -1):
        Cj, Cjm2 = C[-1], C[-3]
        P = _leading_projector(Cj)
        Q = I2 - P
        Cn = C[:-2] @ Q + C[2:] @ P
        Cp = Cn[-1]
        s_prev = float(np.vdot(Cp, Cp).real)
        s_j = float(np.vdot(Cj, Cj).real)
        phi = psis[L - j]
        dP = 0.5 * (math.sin(phi) * X - math.cos(phi) * Y)
        k = 2.0 / s_prev
        CpZ = Cp @ Z
        g = k * _inner((Cj - Cjm2) @ dP, CpZ).imag
        A_R = k * CpZ @ P
        A_L = k * CpZ @ Q
        A_P = _riesz_projector(P, Cj.conj().T @ CpZ, k)
        A_Q = _riesz_projector(Q, Cjm2.conj().T @ CpZ, k)
        norms = [float(np.vdot(A, A).real) for A in (A_R, A_L, A_P, A_Q)]
        B = 2 * g / s_j * _inner(A_R + A_L + A_P + A_Q, CpZ @ P).real
        rows.append((j, g, *norms, B, g * g, B + 0.5 * sum(norms)))
        C = Cn
    arr = np.array(rows)
    cols = ["stage", "g", "aR", "aL", "aP", "aQ", "B", "rho", "alpha"]
    terminal = dict(zip(cols, arr[-1]))
    body = {c: arr[:-1, i] for i, c in enumerate(cols)}
    body["stage"] = body["stage"].astype(int)
    return VarianceProfile(**body, terminal=terminal)


# CSV exchange

_ENTRY_COLS = ["re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11"]


def samples_to_rows(samples: SampleSet):
    U = samples.unitaries.reshape(-1, 4)
    rows = []
    for th, u in zip(samples.thetas, U):
        row = [th]
        for z in u:
            row += [z.real, z.imag]
        rows.append(row)
    return ["theta"] + _ENTRY_COLS, rows


def samples_from_rows(rows, L: int, noise_sigma: float = 0.0) -> SampleSet:
    arr = np.asarray(rows, dtype=float)
    U = (arr[:, 1::2] + 1j * arr[:, 2::2]).reshape(-1, 2, 2)
    return SampleSet(arr[:, 0], U, L, noise_sigma)
