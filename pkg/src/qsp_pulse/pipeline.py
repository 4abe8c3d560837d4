"""End-to-end orchestration: tomography suites, phase learning, spline
reconstruction with optional Richardson extrapolation, and the bias and
variance experiments built on top of them."""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import propagate_many
from .errors import ConfigError
from .fisher import crlb_report, fim_numeric
from .numkit import loglog_slope
from .pulse import Pulse, pulse_from_dict, segment_averages
from .qsp import add_entry_noise, exact_samples, learn_phases
from .reconstruct import METHODS, error_report, reconstruct, richardson
from .tomography import NOISE_KINDS, NoiseModel, suite_grid, tomograph_suite

DIRECTIONS = ("right-to-left", "left-to-right", "stitched")


def _shots(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"M must be a number or 'inf', got {value!r}")
    M = float(value)
    if not M > 0:
        raise ConfigError("M must be positive")
    return M


@dataclass
class PipelineConfig:
    """Full parameter set of one end-to-end run.

    ``N`` is the number of first-quadrant samples per suite; ``None`` means
    2L, dense enough for the sign-alignment chain. ``interior`` is given as
    fractions of T; ``None`` means [T/L, T - T/L].
    """

    pulse: dict = field(default_factory=lambda: {"preset": "sin2pi"})
    T: float = 1.0
    L: int = 16
    M: float = math.inf
    alpha: float = 1.0
    delta: float = 0.0
    symmetric_spam: bool = False
    noise_kind: str = "bernoulli-counts"
    method: str = "direct-midpoint"
    apply_re: bool = True
    seed: int = 0
    repetitions: int = 1
    N: int | None = None
    direction: str = "stitched"
    interior: tuple | None = None
    n_grid: int = 1001
    rtol: float = 1e-10

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.T <= 0:
            raise ConfigError("T must be positive")
        if int(self.L) != self.L or self.L < 4:
            raise ConfigError("L must be an integer >= 4")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.noise_kind not in NOISE_KINDS:
            raise ConfigError(f"noise_kind must be one of {NOISE_KINDS}")
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {DIRECTIONS}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.N is not None and self.N < self.L + 1:
            raise ConfigError("N must be at least L + 1")
        if self.interior is not None:
            lo, hi = self.interior
            if not 0 <= lo < hi <= 1:
                raise ConfigError("interior must be fractions 0 <= lo < hi <= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            if "M" in d:
                d["M"] = _shots(d["M"])
            if d.get("interior") is not None:
                d["interior"] = tuple(float(x) for x in d["interior"])
            for k in ("T", "alpha", "delta", "rtol"):
                if k in d:
                    d[k] = float(d[k])
            for k in ("L", "seed", "repetitions", "n_grid"):
                if k in d:
                    d[k] = int(d[k])
            if d.get("N") is not None:
                d["N"] = int(d["N"])
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config value: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["M"] = "inf" if math.isinf(self.M) else self.M
        if self.interior is not None:
            d["interior"] = list(self.interior)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def build_pulse(self) -> Pulse:
        spec = dict(self.pulse)
        spec.setdefault("T", self.T)
        p = pulse_from_dict(spec)
        if abs(p.T - self.T) > 1e-12:
            raise ConfigError("pulse T differs from config T")
        return p

    def samples_for(self, L: int) -> int:
        return 2 * L if self.N is None else self.N * L // self.L


@dataclass(eq=False)
class RunResult:
    """Outcome of ``run``. ``table`` has columns t, phi_true, phi_est,
    abs_err for the first repetition; ``psis`` holds the coarse-L phase
    estimates of every repetition."""

    table: np.ndarray
    sup_interior: float
    sup_boundary: float
    sup_full: float
    mean_interior: float
    sup_interior_reps: np.ndarray
    psis: np.ndarray
    psi_std: np.ndarray | None
    config_hash: str
    seed: int


def _noise(config: PipelineConfig, spam_seed) -> NoiseModel:
    return NoiseModel.random(
        alpha=config.alpha, delta=config.delta, shots=config.M,
        symmetric=config.symmetric_spam, noise_kind=config.noise_kind,
        rng=np.random.default_rng(spam_seed),
    )


def _one_repetition(args):
    config, pulse, noise, suites, rep_seed = args
    seeds = rep_seed.spawn(len(suites))
    recons, psis = [], []
    for (L, thetas, omegas, exact), s in zip(suites, seeds):
        rec = tomograph_suite(thetas, omegas, exact, L, noise, s)
        psi = learn_phases(rec.samples, config.direction)
        psis.append(psi)
        recons.append(reconstruct(psi, config.T, config.method))
    est = richardson(recons[0], recons[1]) if config.apply_re else recons[0]
    T = config.T
    interior = None if config.interior is None else (config.interior[0] * T, config.interior[1] * T)
    rep = error_report(est, pulse, config.n_grid, interior)
    return rep, psis[0]


def run(config: PipelineConfig, jobs: int = 1) -> RunResult:
    """Tomography -> phase learning -> spline reconstruction (-> RE).

    Propagators are computed once per segment count; repetitions redraw
    only the shot noise. SPAM generators are a fixed property of the
    simulated device, drawn once from the seed.
    """
    pulse = config.build_pulse()
    Ls = [config.L, 2 * config.L] if config.apply_re else [config.L]
    suites = []
    for L in Ls:
        thetas, omegas = suite_grid(L, config.T, config.samples_for(L))
        suites.append((L, thetas, omegas, propagate_many(pulse, omegas, 0.0, config.T, config.rtol)))
    root = np.random.SeedSequence(config.seed)
    spam_seed, *rep_seeds = root.spawn(1 + config.repetitions)
    noise = _noise(config, spam_seed)
    tasks = [(config, pulse, noise, suites, s) for s in rep_seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(_one_repetition, tasks))
    else:
        outs = [_one_repetition(t) for t in tasks]
    reports = [o[0] for o in outs]
    psis = np.array([o[1] for o in outs])
    first = reports[0]
    return RunResult(
        table=first.table,
        sup_interior=first.sup_interior,
        sup_boundary=first.sup_boundary,
        sup_full=first.sup_full,
        mean_interior=first.mean_interior,
        sup_interior_reps=np.array([r.sup_interior for r in reports]),
        psis=psis,
        psi_std=psis.std(axis=0, ddof=1) if len(psis) > 1 else None,
        config_hash=config.config_hash(),
        seed=config.seed,
    )


@dataclass(eq=False)
class BiasScaling:
    Ls: np.ndarray
    errors: np.ndarray
    slope: float
    slope_valid: bool


def bias_scaling_experiment(pulse: Pulse, Ls, method: str = "direct-midpoint",
                            apply_re: bool = True, interior=(0.1, 0.9),
                            direction: str = "stitched", rtol: float = 1e-10,
                            floor: float = 1e-9) -> BiasScaling:
    """Interior sup error against L with exact expectations (M = inf).

    The tomography path is still exercised, only without noise. ``interior``
    is given as fractions of T. If every error is below ``floor`` the slope
    is not fitted and ``slope_valid`` is False.
    """
    T = pulse.T
    noise = NoiseModel()
    Ls = [int(L) for L in Ls]
    needed = sorted(set(Ls) | ({2 * L for L in Ls} if apply_re else set()))
    recons = {}
    for L in needed:
        thetas, omegas = suite_grid(L, T, 2 * L)
        exact = propagate_many(pulse, omegas, 0.0, T, rtol)
        rec = tomograph_suite(thetas, omegas, exact, L, noise, 0)
        recons[L] = reconstruct(learn_phases(rec.samples, direction), T, method)
    errs = []
    for L in Ls:
        est = richardson(recons[L], recons[2 * L]) if apply_re else recons[L]
        iv = (interior[0] * T, interior[1] * T) if interior is not None else None
        errs.append(error_report(est, pulse, interior=iv).sup_interior)
    errs = np.array(errs)
    valid = bool(np.all(errs > floor)) and len(Ls) >= 2
    slope = loglog_slope(Ls, errs) if valid else math.nan
    return BiasScaling(np.array(Ls), errs, slope, valid)


@dataclass(eq=False)
class VarianceResult:
    psi_true: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    crlb: np.ndarray | None
    M: float
    reps: int


def variance_experiment(pulse: Pulse, L: int, M: float, reps: int, seed=0,
                        N: int | None = None, direction: str = "stitched") -> VarianceResult:
    """Monte Carlo spread of the learned phases at the QSP level.

    The surrogate phases are the exact segment averages of ``pulse``; each
    repetition adds Gaussian noise of variance 1/M to the real coordinates
    of every first-quadrant sample. The CRLB diagonal comes from the FIM of
    the same noise model.
    """
    psi = segment_averages(pulse, L).values
    clean = exact_samples(psi, L + 1 if N is None else N)
    if math.isinf(M):
        est = np.array([learn_phases(clean, direction)] * max(reps, 1))
        return VarianceResult(psi, est.mean(0), np.zeros(L), None, M, reps)
    if reps < 2:
        raise ValueError("need at least two repetitions")
    sigma = 1.0 / math.sqrt(M)
    rng = np.random.default_rng(seed)
    est = np.array([learn_phases(add_entry_noise(clean, sigma, rng), direction) for _ in range(reps)])
    # keep estimates on the branch of the truth before taking moments
    est = psi + np.mod(est - psi + np.pi, 2 * np.pi) - np.pi
    crlb = crlb_report(fim_numeric(psi, clean.thetas, M)).variances
    return VarianceResult(psi, est.mean(0), est.std(0, ddof=1), crlb, M, reps)
