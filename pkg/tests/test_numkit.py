import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline
from scipy.linalg import expm, solve_banded
from scipy.spatial.transform import Rotation

from qsp_pulse.errors import (
    AliasingRisk,
    AntipodalSingularity,
    InsufficientPoints,
    NonMonotonicKnots,
    NotUnitary,
    Singular,
)
from qsp_pulse.numkit import (
    I2,
    PAULIS,
    X,
    Y,
    Z,
    NaturalCubicSpline,
    adjoint_rotation,
    fourier_eval,
    loglog_slope,
    midpoint_dft_direct,
    midpoint_grid,
    midpoint_idft,
    polar3,
    project_su2,
    quat_from_rotation,
    solve_tridiagonal,
    su2_exp,
    su2_from_quat,
    su2_log,
)
from qsp_pulse.qsp import build_W, projector

coord = st.floats(-1.0, 1.0, allow_nan=False)


def _is_rotation(R, tol=1e-10):
    return np.allclose(R.T @ R, np.eye(3), atol=tol) and abs(np.linalg.det(R) - 1) < tol


# su(2) exp / log

def test_su2_exp_matches_expm():
    rng = np.random.default_rng(1)
    for a, b, c in rng.uniform(-2, 2, (20, 3)):
        want = expm(-1j * (a * X + b * Y + c * Z))
        assert np.allclose(su2_exp(a, b, c), want, atol=1e-13)


def test_su2_log_identity():
    assert su2_log(I2) == pytest.approx((0.0, 0.0, 0.0), abs=1e-15)


def test_su2_log_single_axis():
    U = expm(-0.3j * X)
    assert su2_log(U) == pytest.approx((0.3, 0.0, 0.0), abs=1e-14)


def test_su2_log_roundtrip_seeded():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        vec = n * rng.uniform(1e-3, np.pi - 0.1)
        got = np.array(su2_log(su2_exp(*vec)))
        worst = max(worst, np.abs(got - vec).max())
    assert worst < 1e-9


@given(coord, coord, coord)
def test_su2_log_roundtrip_property(a, b, c):
    got = su2_log(su2_exp(a, b, c))
    assert np.allclose(got, (a, b, c), atol=1e-9)


def test_su2_log_tiny_angle_series():
    vec = np.array([3e-8, -1e-8, 2e-8])
    assert np.allclose(su2_log(su2_exp(*vec)), vec, atol=1e-15)


def test_su2_log_errors():
    with pytest.raises(AntipodalSingularity):
        su2_log(-I2)
    with pytest.raises(NotUnitary):
        su2_log(2 * I2)


def test_project_su2_returns_unit_determinant():
    rng = np.random.default_rng(3)
    U = su2_exp(0.2, -0.4, 0.1) + 1e-3 * rng.standard_normal((2, 2))
    V = project_su2(U)
    assert np.allclose(V.conj().T @ V, I2, atol=1e-12)
    assert abs(np.linalg.det(V) - 1) < 1e-12


# polar decomposition

def test_polar3_keeps_rotations():
    R = Rotation.random(random_state=4).as_matrix()
    assert np.allclose(polar3(R), R, atol=1e-12)


def test_polar3_removes_positive_scale():
    assert np.allclose(polar3(2 * np.eye(3)), np.eye(3), atol=1e-14)


def test_polar3_symmetric_perturbation_second_order():
    rng = np.random.default_rng(5)
    R = Rotation.random(random_state=6).as_matrix()
    G = rng.standard_normal((3, 3))
    E = 0.5 * (G + G.T)
    E /= np.linalg.norm(E, 2)
    errs = [np.linalg.norm(polar3(R @ (np.eye(3) + d * E)) - R) for d in (1e-2, 1e-3)]
    # O(delta^2) is the guarantee; a purely symmetric stretch is in fact removed exactly
    for d, e in zip((1e-2, 1e-3), errs):
        assert e <= 10 * d * d


def test_polar3_matches_scipy_for_positive_determinant():
    from scipy.linalg import polar
    rng = np.random.default_rng(8)
    B = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    assert np.linalg.det(B) > 0
    assert np.allclose(polar3(B), polar(B)[0], atol=1e-12)


def test_polar3_negative_determinant_flipped():
    B = np.diag([1.0, 2.0, -0.5])
    R = polar3(B)
    assert _is_rotation(R)


@settings(max_examples=50)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=9, max_size=9))
def test_polar3_always_special_orthogonal(entries):
    B = np.array(entries).reshape(3, 3)
    if np.linalg.svd(B, compute_uv=False).min() <= 1e-6:
        return
    assert _is_rotation(polar3(B))


def test_polar3_singular():
    with pytest.raises(Singular):
        polar3(np.diag([1.0, 1.0, 0.0]))


# quaternions and the adjoint action

def _adjoint_oracle(U):
    # R_ij from U sigma_j U^dagger = sum_i R_ij sigma_i
    return np.array([[0.5 * np.trace(PAULIS[i] @ U @ PAULIS[j] @ U.conj().T).real
                      for j in range(3)] for i in range(3)])


def test_quat_identity():
    q = quat_from_rotation(np.eye(3))
    assert np.allclose(q, [1, 0, 0, 0])
    assert np.allclose(su2_from_quat(q), I2)


def test_quat_pi_rotation_branch():
    R = Rotation.from_rotvec([0, 0, np.pi]).as_matrix()
    q = quat_from_rotation(R)
    assert abs(q[0]) < 1e-12
    assert np.allclose(_adjoint_oracle(su2_from_quat(q)), R, atol=1e-10)


def test_quat_random_adjoint_roundtrip():
    for R in Rotation.random(50, random_state=9).as_matrix():
        q = quat_from_rotation(R)
        assert abs(np.linalg.norm(q) - 1) < 1e-10
        U = su2_from_quat(q)
        assert np.allclose(U.conj().T @ U, I2, atol=1e-10)
        assert np.allclose(_adjoint_oracle(U), R, atol=1e-10)
        assert np.allclose(adjoint_rotation(U), R, atol=1e-10)


def test_adjoint_rotation_x_quarter_turn():
    R = adjoint_rotation(expm(-1j * np.pi / 4 * X))
    want = Rotation.from_rotvec([np.pi / 2, 0, 0]).as_matrix()
    assert np.allclose(R, want, atol=1e-12)


# midpoint Fourier transforms

def test_idft_single_mode():
    th = midpoint_grid(16)
    samples = np.exp(1j * th)[:, None, None] * I2
    C = midpoint_idft(samples, 3)
    assert np.allclose(C[3 + 1], I2, atol=1e-12)
    others = [k for k in range(7) if k != 4]
    assert np.abs(C[others]).max() < 1e-12


def _brute_force_coeffs(psis):
    # V(theta, psi) = e^{i theta} P_psi + e^{-i theta} Q_psi, expanded over all branches
    L = len(psis)
    C = np.zeros((2 * L + 1, 2, 2), dtype=complex)
    for choice in itertools.product((1, -1), repeat=L):
        M = I2.copy()
        for s, psi in zip(choice, psis):
            P = projector(psi)
            M = (P if s == 1 else I2 - P) @ M
        C[sum(choice) + L] += M
    return C


def test_idft_matches_branch_expansion():
    rng = np.random.default_rng(10)
    psis = rng.uniform(-np.pi, np.pi, 5)
    th = midpoint_grid(32)
    C = midpoint_idft(build_W(th, psis), 5)
    assert np.allclose(C, _brute_force_coeffs(psis), atol=1e-10)


def test_idft_parity_and_roundtrip():
    rng = np.random.default_rng(11)
    for L in (4, 7):
        psis = rng.uniform(-1, 1, L)
        th = midpoint_grid(4 * (L + 1))
        W = build_W(th, psis)
        C = midpoint_idft(W, L)
        wrong = [k + L for k in range(-L, L + 1) if (k - L) % 2]
        assert np.abs(C[wrong]).max() < 1e-12
        fresh = np.random.default_rng(L).uniform(0, 2 * np.pi, 9)
        assert np.allclose(fourier_eval(C, fresh), build_W(fresh, psis), atol=1e-10)
        assert np.allclose(fourier_eval(C, th), W, atol=1e-10)


def test_idft_fft_agrees_with_direct_sum():
    rng = np.random.default_rng(12)
    samples = rng.standard_normal((24, 2, 2)) + 1j * rng.standard_normal((24, 2, 2))
    assert np.allclose(midpoint_idft(samples, 5), midpoint_dft_direct(samples, 5), atol=1e-12)


def test_idft_aliasing_risk():
    with pytest.raises(AliasingRisk):
        midpoint_idft(np.zeros((16, 2, 2)), 4)


# tridiagonal solver and natural spline

def test_tridiagonal_against_banded_solver():
    rng = np.random.default_rng(13)
    n = 12
    lower, upper = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    diag = 4 + rng.uniform(0, 1, n)
    rhs = rng.standard_normal((n, 3))
    ab = np.zeros((3, n))
    ab[0, 1:], ab[1], ab[2, :-1] = upper, diag, lower
    assert np.allclose(solve_tridiagonal(lower, diag, upper, rhs), solve_banded((1, 1), ab, rhs), atol=1e-12)


def test_spline_matches_scipy_natural():
    rng = np.random.default_rng(14)
    x = np.sort(rng.uniform(0, 3, 11))
    y = rng.standard_normal(11)
    s, ref = NaturalCubicSpline(x, y), CubicSpline(x, y, bc_type="natural")
    t = np.linspace(x[0] - 0.2, x[-1] + 0.2, 301)
    assert np.allclose(s(t), ref(t), atol=1e-12)
    assert np.allclose(s.deriv(t), ref(t, 1), atol=1e-11)


def test_spline_interpolates_with_natural_ends():
    x = np.linspace(0, 1, 8)
    y = np.cos(3 * x)
    s = NaturalCubicSpline(x, y)
    assert np.allclose(s(x), y, atol=1e-14)
    ref = CubicSpline(x, y, bc_type="natural")
    assert abs(ref(x[0], 2)) < 1e-12 and abs(ref(x[-1], 2)) < 1e-12
    # our derivative is consistent with a finite difference of our values
    h = 1e-6
    t = np.linspace(0.05, 0.95, 7)
    assert np.allclose(s.deriv(t), (s(t + h) - s(t - h)) / (2 * h), atol=1e-7)


def test_spline_cubic_reproduced_in_interior():
    x = np.linspace(0, 1, 10)
    f = lambda t: 0.3 * t**3 - t**2 + 2 * t - 1  # noqa: E731
    s = NaturalCubicSpline(x, f(x))
    # natural end conditions disturb a cubic only near the ends; linear data is exact
    lin = NaturalCubicSpline(x, 2 * x - 1)
    t = np.linspace(0, 1, 201)
    assert np.abs(lin(t) - (2 * t - 1)).max() < 1e-12
    assert np.abs(s(x) - f(x)).max() < 1e-12


def test_spline_constant():
    s = NaturalCubicSpline(np.linspace(0, 2, 6), np.full(6, 1.7))
    t = np.linspace(0, 2, 50)
    assert np.allclose(s(t), 1.7, atol=1e-12)
    assert np.abs(s.deriv(t)).max() < 1e-12


def test_spline_fourth_order_convergence():
    f = lambda t: np.sin(3 * np.pi * t)  # noqa: E731
    ns = [16, 32, 64, 128]
    errs = []
    for n in ns:
        x = np.linspace(0, 1, n + 1)
        s = NaturalCubicSpline(x, f(x))
        t = np.linspace(0.25, 0.75, 2001)
        errs.append(np.abs(s(t) - f(t)).max())
    slope = loglog_slope(1.0 / np.array(ns), errs)
    assert 3.5 <= slope <= 4.5


def test_spline_errors():
    with pytest.raises(InsufficientPoints):
        NaturalCubicSpline([0, 1], [0, 1])
    with pytest.raises(NonMonotonicKnots):
        NaturalCubicSpline([0, 2, 1], [0, 1, 2])


def test_loglog_slope_exact_power():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert loglog_slope(x, 3 * x**-2.5) == pytest.approx(-2.5)
