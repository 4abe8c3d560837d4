"""Backend selection for the hot RK4 loop.

The compiled extension is used when importable; setting the environment
variable ``QSP_PULSE_PURE_PYTHON=1`` forces the pure-Python kernel.
"""
import os

from . import _kernels_py

python_rk4_su2 = _kernels_py.rk4_su2

try:
    from ._rk4 import rk4_su2 as compiled_rk4_su2
except ImportError:  # extension not built
    compiled_rk4_su2 = None

if compiled_rk4_su2 is not None and not os.environ.get("QSP_PULSE_PURE_PYTHON"):
    rk4_su2 = compiled_rk4_su2
    BACKEND = "cython"
else:
    rk4_su2 = python_rk4_su2
    BACKEND = "python"
