"""Compare the compiled and pure-Python RK4 kernels on a propagator suite.

    python3 benchmarks/bench_kernels.py [--steps 2048] [--omegas 33] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from qsp_pulse import kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2048)
    ap.add_argument("--omegas", type=int, default=33)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    t = np.linspace(0.0, 1.0, 2 * args.steps + 1)
    phi = 0.5 * (np.sin(2 * np.pi * t) + np.sin(4 * np.pi * t))
    omegas = np.linspace(0.5, 50.0, args.omegas)
    dt = 1.0 / args.steps

    print(f"steps={args.steps} omegas={args.omegas} active backend={kernels.BACKEND}")
    ref = kernels.python_rk4_su2(phi, omegas, dt)
    py = min(timeit.repeat(lambda: kernels.python_rk4_su2(phi, omegas, dt), number=1, repeat=args.repeat))
    print(f"python   {py * 1e3:10.2f} ms")
    if kernels.compiled_rk4_su2 is None:
        print("cython   not built")
        return
    out = kernels.compiled_rk4_su2(phi, omegas, dt)
    cy = min(timeit.repeat(lambda: kernels.compiled_rk4_su2(phi, omegas, dt), number=1, repeat=args.repeat))
    print(f"cython   {cy * 1e3:10.2f} ms   speedup {py / cy:6.1f}x   max diff {np.abs(out - ref).max():.1e}")


if __name__ == "__main__":
    main()
