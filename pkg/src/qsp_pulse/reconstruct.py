"""Digital-to-analog conversion: de-averaging, spline reconstructions,
Richardson extrapolation and error evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MismatchedConfig, OutOfDomain, TooFewPoints
from .numkit import NaturalCubicSpline
from .pulse import Pulse

METHODS = ("direct-midpoint", "refined-midpoint", "differentiating")


def _one_sided_weights(n_cells: int) -> np.ndarray:
    """Weights on the first n_cells averages reproducing the value at the
    first midpoint exactly for polynomials of degree < n_cells."""
    p = np.arange(n_cells)
    k = np.arange(n_cells)
    # averages of t^p over the unit cells [k, k+1]
    A = ((k[None, :] + 1.0) ** (p[:, None] + 1) - k[None, :] ** (p[:, None] + 1)) / (p[:, None] + 1)
    return np.linalg.solve(A, 0.5 ** p)


_EDGE4 = _one_sided_weights(4)
_EDGE3 = _one_sided_weights(3)


@dataclass(eq=False)
class ReconstructedPulse:
    """A continuous estimate of phi on [0, T]. ``L`` is the coarse segment
    count of the experiment that produced it."""

    fn: object
    T: float
    L: int
    method: str
    re_applied: bool = False

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < -1e-12) or np.any(t_arr > self.T + 1e-12):
            raise OutOfDomain(f"t outside [0, {self.T}]")
        return self(t_arr)


def de_average(raw, order: str = "second") -> np.ndarray:
    """Cell averages to midpoint values: identity for ``second``; the
    stencil (-1/24, 13/12, -1/24) with one-sided edges for ``fourth``."""
    psi = np.asarray(raw, dtype=float)
    if order == "second":
        return psi.copy()
    if order != "fourth":
        raise ValueError(f"unknown order {order!r}")
    L = psi.size
    if L < 3:
        raise TooFewPoints("fourth-order de-averaging needs L >= 3")
    out = psi.copy()
    out[1:-1] = psi[1:-1] - (psi[:-2] - 2 * psi[1:-1] + psi[2:]) / 24.0
    w = _EDGE4 if L >= 4 else _EDGE3
    n = w.size
    out[0] = w @ psi[:n]
    out[-1] = w @ psi[::-1][:n]
    return out


def _unwrap(raw):
    return np.unwrap(np.asarray(raw, dtype=float))


def reconstruct_midpoint(raw, T: float, order: str = "second") -> ReconstructedPulse:
    """Natural cubic spline through de-averaged values at the cell midpoints;
    the end cubics are continued to cover [0, m_1] and [m_L, T]."""
    psi = _unwrap(raw)
    L = psi.size
    if L < 4:
        raise TooFewPoints("midpoint reconstruction needs L >= 4")
    h = T / L
    spline = NaturalCubicSpline((np.arange(L) + 0.5) * h, de_average(psi, order))
    method = "direct-midpoint" if order == "second" else "refined-midpoint"
    return ReconstructedPulse(spline, T, L, method)


def reconstruct_differentiating(raw, T: float) -> ReconstructedPulse:
    """Derivative of the natural spline through the running integral
    (t_j, h sum_{i<=j} psi_i), with (0, 0) prepended."""
    psi = _unwrap(raw)
    L = psi.size
    if L < 4:
        raise TooFewPoints("differentiating reconstruction needs L >= 4")
    h = T / L
    prefix = np.concatenate([[0.0], h * np.cumsum(psi)])
    spline = NaturalCubicSpline(np.linspace(0.0, T, L + 1), prefix)
    return ReconstructedPulse(spline.deriv, T, L, "differentiating")


def reconstruct(raw, T: float, method: str = "direct-midpoint") -> ReconstructedPulse:
    if method == "direct-midpoint":
        return reconstruct_midpoint(raw, T, "second")
    if method == "refined-midpoint":
        return reconstruct_midpoint(raw, T, "fourth")
    if method == "differentiating":
        return reconstruct_differentiating(raw, T)
    raise ValueError(f"unknown method {method!r}")


def richardson(f_h: ReconstructedPulse, f_h2: ReconstructedPulse) -> ReconstructedPulse:
    """2 f_{h/2} - f_h, where f_h2 was built from 2L segments."""
    if f_h2.L != 2 * f_h.L or f_h.T != f_h2.T or f_h.method != f_h2.method:
        raise MismatchedConfig("richardson needs the same method and T with L and 2L segments")
    return ReconstructedPulse(lambda t: 2.0 * f_h2(t) - f_h(t), f_h.T, f_h.L, f_h.method, True)


@dataclass(eq=False)
class ErrorReport:
    sup_interior: float
    sup_full: float
    sup_boundary: float
    mean_interior: float
    table: np.ndarray  # columns t, phi_true, phi_est, abs_err


def error_report(est: ReconstructedPulse, truth: Pulse, n_grid: int = 1001,
                 interior: tuple | None = None) -> ErrorReport:
    """Uniform-grid error metrics. The interior defaults to [T/L, T - T/L]."""
    if n_grid < 100:
        raise ValueError("n_grid must be at least 100")
    T = est.T
    t = np.linspace(0.0, T, n_grid)
    phi_true = truth(t)
    phi_est = est(t)
    diff = np.pi - np.mod(np.pi - (phi_est - phi_true), 2 * np.pi)
    err = np.abs(diff)
    lo, hi = interior if interior is not None else (T / est.L, T - T / est.L)
    inside = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    table = np.column_stack([t, phi_true, phi_est, err])
    return ErrorReport(
        float(err[inside].max()),
        float(err.max()),
        float(err[~inside].max()) if np.any(~inside) else 0.0,
        float(err[inside].mean()),
        table,
    )
