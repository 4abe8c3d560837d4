import os
import subprocess
import sys

import numpy as np
import pytest

from qsp_pulse import kernels


def _phases(n, seed=0):
    t = np.linspace(0, 1, 2 * n + 1)
    return np.sin(3 * np.pi * t) + 0.1 * np.random.default_rng(seed).standard_normal(t.size)


@pytest.mark.skipif(kernels.compiled_rk4_su2 is None, reason="extension not built")
def test_compiled_matches_python():
    phi = _phases(200)
    omegas = np.array([0.0, 1.0, 7.5, 30.0])
    a = kernels.compiled_rk4_su2(phi, omegas, 1 / 200)
    b = kernels.python_rk4_su2(phi, omegas, 1 / 200)
    assert np.allclose(a, b, rtol=0, atol=1e-13)


def test_rk4_constant_phase_rotation():
    n, w = 400, 2.0
    out = kernels.rk4_su2(np.zeros(2 * n + 1), np.array([w]), 1 / n)
    u, v = out[0]
    assert u == pytest.approx(np.cos(w), abs=1e-9)
    assert v == pytest.approx(-1j * np.sin(w), abs=1e-9)


def test_rk4_preserves_norm():
    # RK4 is not exactly unitary; the drift is O(dt^4)
    t = np.linspace(0, 1, 801)
    out = kernels.rk4_su2(np.sin(3 * np.pi * t), np.array([3.0, 12.0]), 1 / 400)
    assert np.allclose(np.abs(out[:, 0]) ** 2 + np.abs(out[:, 1]) ** 2, 1, atol=1e-8)


def test_env_var_forces_python_backend():
    env = dict(os.environ, QSP_PULSE_PURE_PYTHON="1")
    code = "from qsp_pulse import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
