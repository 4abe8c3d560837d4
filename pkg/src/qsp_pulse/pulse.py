"""Analytic pulse families phi(t) on [0, T], segment averages and the
smoothed random perturbation used for robustness studies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ConfigError, OutOfDomain

_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class Pulse:
    T: float = 1.0
    beta_hint: float | None = None

    kind = "abstract"

    def __call__(self, t):
        """Vectorized evaluation without domain checks."""
        raise NotImplementedError

    def antiderivative(self, t):
        """int_0^t phi(s) ds."""
        raise NotImplementedError

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < -_DOMAIN_SLACK) or np.any(t_arr > self.T + _DOMAIN_SLACK):
            raise OutOfDomain(f"t outside [0, {self.T}]")
        out = self(np.clip(t_arr, 0.0, self.T))
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(Pulse):
    """phi(t) = offset + slope * t."""

    slope: float = 1.0
    offset: float = 0.0
    kind = "linear"

    def __call__(self, t):
        return self.offset + self.slope * np.asarray(t, dtype=float)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.offset * t + 0.5 * self.slope * t * t

    def to_dict(self):
        return {"kind": self.kind, "T": self.T, "slope": self.slope, "offset": self.offset}


@dataclass(frozen=True)
class Sinusoid(Pulse):
    """phi(t) = amplitude * sum_f sin(2 pi f t); f in cycles per time unit."""

    amplitude: float = 1.0
    frequencies: tuple = (1.0,)
    kind = "sinusoid"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * sum(np.sin(2 * np.pi * f * t) for f in self.frequencies)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        acc = 0.0
        for f in self.frequencies:
            w = 2 * np.pi * f
            acc = acc + ((1 - np.cos(w * t)) / w if f != 0 else 0.0 * t)
        return self.amplitude * acc

    def to_dict(self):
        return {
            "kind": self.kind,
            "T": self.T,
            "amplitude": self.amplitude,
            "frequencies": list(self.frequencies),
        }


@dataclass(frozen=True)
class Biharmonic(Sinusoid):
    """phi(t) = (sin(2 pi t) + sin(4 pi t)) / 2."""

    amplitude: float = 0.5
    frequencies: tuple = (1.0, 2.0)
    kind = "biharmonic"

    def to_dict(self):
        return {"kind": self.kind, "T": self.T}


@dataclass(frozen=True)
class PiecewiseConstant(Pulse):
    values: tuple = (0.0,)
    kind = "piecewise-constant"

    def _index(self, t):
        n = len(self.values)
        return np.clip((np.asarray(t, dtype=float) / self.T * n).astype(int), 0, n - 1)

    def __call__(self, t):
        return np.asarray(self.values, dtype=float)[self._index(t)]

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        h = self.T / v.size
        cum = np.concatenate([[0.0], np.cumsum(v) * h])
        i = self._index(t)
        return cum[i] + v[i] * (t - i * h)

    def to_dict(self):
        return {"kind": self.kind, "T": self.T, "values": list(self.values)}


@dataclass(frozen=True, eq=False)
class Perturbed(Pulse):
    """Base pulse plus a tabulated perturbation, linearly interpolated."""

    base: Pulse = field(default_factory=Linear)
    grid: np.ndarray = field(default_factory=lambda: np.zeros(2))
    table: np.ndarray = field(default_factory=lambda: np.zeros(2))
    seed: int = 0
    L_perturb: int = 1
    eta: float = 0.0
    w: float = 0.02
    kind = "perturbed"

    def __call__(self, t):
        return self.base(t) + np.interp(t, self.grid, self.table)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        x, p = self.grid, self.table
        dx = np.diff(x)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * dx)])
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, dx.size - 1)
        s = t - x[i]
        slope = (p[i + 1] - p[i]) / dx[i]
        return self.base.antiderivative(t) + cum[i] + s * (p[i] + 0.5 * slope * s)

    def to_dict(self):
        return {
            "kind": self.kind,
            "T": self.T,
            "base": self.base.to_dict(),
            "seed": self.seed,
            "L_perturb": self.L_perturb,
            "eta": self.eta,
            "w": self.w,
        }


@dataclass(frozen=True, eq=False)
class SegmentAverages:
    values: np.ndarray
    h: float

    @property
    def midpoints(self):
        return (np.arange(self.values.size) + 0.5) * self.h


def segment_averages(p: Pulse, L: int) -> SegmentAverages:
    """Exact cell averages (1/h) int phi over L uniform segments."""
    if L < 1:
        raise ValueError("L must be positive")
    h = p.T / L
    F = p.antiderivative(np.linspace(0.0, p.T, L + 1))
    return SegmentAverages(np.diff(F) / h, h)


def perturb(p: Pulse, seed: int, L_perturb: int, eta: float, w: float) -> Perturbed:
    """Add a Gaussian-smoothed piecewise-constant random perturbation.

    Amplitudes are drawn uniformly from [-eta, eta] on ``L_perturb`` coarse
    segments with numpy's PCG64 generator, then smoothed by a Gaussian of
    standard deviation ``w`` truncated at 4w on a uniform fine grid.
    """
    if L_perturb < 1 or eta < 0 or w <= 0:
        raise ValueError("need L_perturb >= 1, eta >= 0, w > 0")
    base = p.base if isinstance(p, Perturbed) else p
    n_fine = max(1000, 20 * L_perturb)
    grid = np.linspace(0.0, p.T, n_fine)
    amps = np.random.default_rng(seed).uniform(-eta, eta, L_perturb)
    idx = np.clip((grid / p.T * L_perturb).astype(int), 0, L_perturb - 1)
    dx = grid[1] - grid[0]
    table = gaussian_filter1d(amps[idx], sigma=w / dx, mode="nearest", truncate=4.0)
    return Perturbed(
        T=p.T, beta_hint=p.beta_hint, base=base, grid=grid, table=table,
        seed=seed, L_perturb=L_perturb, eta=eta, w=w,
    )


PRESETS = {
    "linear": lambda: Linear(slope=1.0),
    "sin2pi": lambda: Sinusoid(amplitude=1.0, frequencies=(1.0,)),
    "sin3pi": lambda: Sinusoid(amplitude=1.0, frequencies=(1.5,)),
    "biharmonic": lambda: Biharmonic(),
    "constant": lambda: Linear(slope=0.0, offset=0.5),
}


def pulse_from_dict(d: dict) -> Pulse:
    """Build a pulse from a config mapping (see ``Pulse.to_dict``)."""
    d = dict(d)
    if "preset" in d:
        name = d.pop("preset")
        if name not in PRESETS:
            raise ConfigError(f"unknown pulse preset {name!r}")
        p = PRESETS[name]()
        if "T" in d:
            p = type(p)(**{**_fields(p), "T": float(d["T"])})
        return _maybe_perturb(p, d)
    kind = d.get("kind")
    T = float(d.get("T", 1.0))
    try:
        if kind == "linear":
            p = Linear(T=T, slope=float(d.get("slope", 1.0)), offset=float(d.get("offset", 0.0)))
        elif kind == "sinusoid":
            p = Sinusoid(
                T=T,
                amplitude=float(d.get("amplitude", 1.0)),
                frequencies=tuple(float(f) for f in d.get("frequencies", [1.0])),
            )
        elif kind == "biharmonic":
            p = Biharmonic(T=T)
        elif kind == "piecewise-constant":
            p = PiecewiseConstant(T=T, values=tuple(float(v) for v in d["values"]))
        elif kind == "perturbed":
            base = pulse_from_dict(d["base"])
            return perturb(base, int(d["seed"]), int(d["L_perturb"]), float(d["eta"]), float(d["w"]))
        else:
            raise ConfigError(f"unknown pulse kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad pulse specification: {exc}") from exc
    return _maybe_perturb(p, d)


def _fields(p):
    return {k: getattr(p, k) for k in p.__dataclass_fields__}


def _maybe_perturb(p, d):
    pert = d.get("perturbation")
    if not pert:
        return p
    try:
        return perturb(p, int(pert["seed"]), int(pert["L_perturb"]),
                       float(pert.get("eta", 0.5)), float(pert.get("w", 0.02)))
    except KeyError as exc:
        raise ConfigError(f"perturbation missing key {exc}") from exc
