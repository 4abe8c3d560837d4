"""Simulated single-qubit process tomography with depolarizing, SPAM and
shot noise, reference-sandwich reconstruction and global sign alignment."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .dynamics import propagate_many
from .errors import ReferenceIllConditioned
from .numkit import I2, adjoint_rotation, polar3, quat_from_rotation, spectral_norm, su2_from_quat
from .pulse import Pulse
from .qsp import SampleSet, midpoint_thetas

log = logging.getLogger(__name__)

NOISE_KINDS = ("bernoulli-counts", "gaussian-entries")

# Bloch vectors of the input states z+, z-, x, y
_INPUTS = np.array([[0, 0, 1], [0, 0, -1], [1, 0, 0], [0, 1, 0]], dtype=float)


@dataclass(eq=False)
class NoiseModel:
    """Depolarizing fidelity, SPAM generators and shot budget.

    ``shots`` may be ``math.inf`` for exact expectation values.
    """

    alpha: float = 1.0
    gS: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    gM: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    shots: float = math.inf
    noise_kind: str = "bernoulli-counts"
    symmetric_diff: bool = False

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        self.gS = np.asarray(self.gS, dtype=float)
        self.gM = np.asarray(self.gM, dtype=float)

    @property
    def delta(self) -> float:
        return max(spectral_norm(self.gS), spectral_norm(self.gM))

    @property
    def exact(self) -> bool:
        return math.isinf(self.shots)

    @property
    def entry_sigma(self) -> float:
        """Nominal per-entry precision 1/(alpha sqrt(M))."""
        return 0.0 if self.exact else 1.0 / (self.alpha * math.sqrt(self.shots))

    @classmethod
    def random(cls, alpha=1.0, delta=0.0, shots=math.inf, symmetric=False,
               noise_kind="bernoulli-counts", rng=None):
        """SPAM generators with i.i.d. normal entries rescaled to spectral norm
        delta. The symmetric variant uses gM = -gS = sym(G)."""
        rng = np.random.default_rng(rng)

        def scaled(G):
            n = spectral_norm(G)
            return G * (delta / n) if n > 0 else G

        if symmetric:
            G = rng.standard_normal((3, 3))
            D = scaled(0.5 * (G + G.T))
            gS, gM = -D, D
        else:
            gS = scaled(rng.standard_normal((3, 3)))
            gM = scaled(rng.standard_normal((3, 3)))
        return cls(alpha, gS, gM, shots, noise_kind, symmetric)


@dataclass(eq=False)
class PTM:
    """Unital-part blocks of a Pauli transfer matrix."""

    t_vec: np.ndarray
    A: np.ndarray
    clamped: bool = False


def channel_block(U, noise: NoiseModel) -> np.ndarray:
    """Lower-right block M (alpha R) S of the noisy channel."""
    R = adjoint_rotation(U)
    return expm(noise.gM) @ (noise.alpha * R) @ expm(noise.gS)


def simulate_expectations(U, noise: NoiseModel, rng=None) -> PTM:
    """Pauli expectations for the four input states, then PTM assembly."""
    rng = np.random.default_rng(rng)
    r = _INPUTS @ channel_block(U, noise).T  # row s: expectations for input s
    clamped = False
    if not noise.exact:
        M = int(noise.shots)
        if noise.noise_kind == "bernoulli-counts":
            p = 0.5 * (1.0 + r)
            if np.any((p < 0) | (p > 1)):
                clamped = True
                log.warning("expectation outside [-1, 1]; clamped for sampling")
            k = rng.binomial(M, np.clip(p, 0.0, 1.0))
            r = 2.0 * k / M - 1.0
        else:
            r = r + rng.normal(0.0, 1.0 / math.sqrt(M), r.shape)
    t = 0.5 * (r[0] + r[1])
    A = np.column_stack([r[2] - t, r[3] - t, 0.5 * (r[0] - r[1])])
    return PTM(t, A, clamped)


def reference_inverse_sqrt(reference: PTM) -> np.ndarray:
    """K^{-1/2} of the symmetrized reference block."""
    K = reference.A
    Ks = 0.5 * (K + K.T)
    asym = float(np.linalg.norm(K - Ks))
    if asym > 1e-3:
        log.warning("reference block asymmetric part %.2e discarded", asym)
    w, V = np.linalg.eigh(Ks)
    if w.min() <= 1e-6:
        raise ReferenceIllConditioned(f"reference eigenvalue {w.min():.2e} <= 1e-6")
    return (V / np.sqrt(w)) @ V.T


def _sandwich_lift(target: PTM, Kmh) -> np.ndarray:
    R = polar3(Kmh @ target.A @ Kmh)
    return su2_from_quat(quat_from_rotation(R))


def robust_reconstruct(target: PTM, reference: PTM) -> np.ndarray:
    """Unitary (up to sign) from the sandwich K^{-1/2} A K^{-1/2}, polar
    projection and quaternion lift with w >= 0."""
    return _sandwich_lift(target, reference_inverse_sqrt(reference))


def align_signs(omegas, unitaries) -> np.ndarray:
    """Fix the global sign of each unitary by continuity with its predecessor:
    flip when the spectral-norm gap is at least 1."""
    U = np.array(unitaries, dtype=complex)
    if np.any(np.diff(np.asarray(omegas, dtype=float)) < 0):
        raise ValueError("omegas must be ascending")
    for i in range(1, len(U)):
        if spectral_norm(U[i] - U[i - 1]) >= 1.0:
            U[i] = -U[i]
    return U


@dataclass(eq=False)
class SuiteRecord:
    samples: SampleSet
    omegas: np.ndarray
    exact: np.ndarray
    ptms: list
    reference: PTM


def suite_grid(L: int, T: float, N: int | None = None):
    """theta_j = (2j+1) pi / (4N) and omega_j = theta_j L / T; N defaults to L + 1."""
    N = L + 1 if N is None else N
    thetas = midpoint_thetas(N)
    return thetas, thetas * L / T


def tomograph_suite(thetas, omegas, exact, L: int, noise: NoiseModel, seed) -> SuiteRecord:
    """Noisy tomography of precomputed propagators, reference anchored."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = ss.spawn(len(exact) + 1)
    ref = simulate_expectations(I2, noise, np.random.default_rng(seeds[0]))
    ptms = [simulate_expectations(U, noise, np.random.default_rng(s))
            for U, s in zip(exact, seeds[1:])]
    Kmh = reference_inverse_sqrt(ref)
    recon = [_sandwich_lift(ptm, Kmh) for ptm in [ref] + ptms]
    # the omega = 0 reference anchors the sign chain at +I
    chain = align_signs(np.concatenate([[0.0], omegas]), recon)[1:]
    samples = SampleSet(thetas, chain, L, noise.entry_sigma)
    return SuiteRecord(samples, np.asarray(omegas), np.asarray(exact), ptms, ref)


def run_experiment_suite_detailed(p: Pulse, L: int, T: float | None, noise: NoiseModel,
                                  seed, N: int | None = None, rtol: float = 1e-10) -> SuiteRecord:
    T = p.T if T is None else T
    thetas, omegas = suite_grid(L, T, N)
    exact = propagate_many(p, omegas, 0.0, T, rtol)
    return tomograph_suite(thetas, omegas, exact, L, noise, seed)


def run_experiment_suite(p: Pulse, L: int, T: float | None, noise: NoiseModel, seed,
                         N: int | None = None, rtol: float = 1e-10) -> SampleSet:
    """Tomograph U(T, 0; omega_j) on the grid theta_j = (2j+1) pi / (4N),
    omega_j = theta_j L / T, and return sign-aligned samples for the QSP
    learner. N defaults to L + 1."""
    return run_experiment_suite_detailed(p, L, T, noise, seed, N, rtol).samples


def ptm_rows(ptms):
    header = ["index"] + [f"t{i}" for i in range(3)] + [f"A{i}{j}" for i in range(3) for j in range(3)]
    rows = [[k, *ptm.t_vec, *ptm.A.ravel()] for k, ptm in enumerate(ptms)]
    return header, rows
