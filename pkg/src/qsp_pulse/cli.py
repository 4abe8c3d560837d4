"""Command-line entry point.

Every subcommand reads an optional TOML parameter file, computes in memory
and only then writes its CSV files plus ``manifest.json`` into the output
directory, so a failed run leaves nothing behind. Exit codes: 0 success,
1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dynamics import digitize, propagate_many
from .errors import ConfigError, QspPulseError
from .fisher import crlb_report, dfi_sweep, fim_numeric
from .pipeline import PipelineConfig, bias_scaling_experiment, run, variance_experiment
from .pulse import pulse_from_dict, segment_averages
from .qsp import add_entry_noise, exact_samples, learn_phases, midpoint_thetas, samples_from_rows, samples_to_rows
from .reconstruct import reconstruct
from .tomography import NoiseModel, ptm_rows, run_experiment_suite_detailed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("qsp_pulse")

COMMANDS = ("simulate", "digitize", "learn", "tomography", "reconstruct", "fisher",
            "end-to-end", "bias-sweep", "variance-sweep", "dfi-sweep")
OUT_ENV = "QSP_PULSE_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _csv(header, rows, footer=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if footer:
        w.writerow([_fmt(v) for v in footer])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def config_hash(cfg: dict) -> str:
    blob = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        with p.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc


def _get(cfg, key, default=None, cast=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default
    v = cfg[key]
    if cast is None:
        return v
    try:
        return cast(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {v!r}") from exc


def _shots(v):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    return float(v)


def _floats(v):
    if isinstance(v, str):
        return [float(x) for x in v.split(",") if x.strip()]
    return [float(x) for x in v]


def _ints(v):
    if isinstance(v, str):
        return [int(x) for x in v.split(",") if x.strip()]
    return [int(x) for x in v]


def _pulse(cfg):
    spec = _get(cfg, "pulse", {"preset": "sin2pi"})
    if isinstance(spec, str):
        spec = {"preset": spec}
    return pulse_from_dict(spec)


def _psis(cfg):
    if "psis" in cfg:
        return np.array(_floats(cfg["psis"]))
    path = _get(cfg, "phases_csv", required=True)
    rows = _read_csv(path)
    return np.array([float(r["psi"]) for r in rows])


def _read_csv(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file not found: {p}")
    with p.open(newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


# subcommands: each returns (files: {name: text}, results: dict)

def cmd_simulate(cfg, args):
    p = _pulse(cfg)
    t1 = _get(cfg, "t1", 0.0, float)
    t2 = _get(cfg, "t2", p.T, float)
    if "omegas" in cfg:
        omegas = np.array(_floats(cfg["omegas"]))
    else:
        L = _get(cfg, "L", 16, int)
        N = _get(cfg, "N", L + 1, int)
        omegas = midpoint_thetas(N) * L / (t2 - t1)
    U = propagate_many(p, omegas, t1, t2, _get(cfg, "rtol", 1e-10, float))
    header = ["omega", "re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11"]
    rows = [[w, *np.column_stack([u.ravel().real, u.ravel().imag]).ravel()] for w, u in zip(omegas, U)]
    return {"propagators.csv": _csv(header, rows)}, {"count": len(rows)}


def cmd_digitize(cfg, args):
    p = _pulse(cfg)
    L = _get(cfg, "L", 16, int)
    omega = _get(cfg, "omega", 1.0, float)
    psi = digitize(p, omega, L, _get(cfg, "rtol", 1e-12, float))
    avg = segment_averages(p, L)
    rows = [[j + 1, m, s, a] for j, (m, s, a) in enumerate(zip(avg.midpoints, psi, avg.values))]
    err = float(np.max(np.abs(psi - avg.values)))
    return {"phases.csv": _csv(["j", "t_mid", "psi", "phi_avg"], rows)}, {"max_abs_diff": err}


def cmd_learn(cfg, args):
    direction = _get(cfg, "direction", "stitched", str)
    if "samples_csv" in cfg:
        L = _get(cfg, "L", required=True, cast=int)
        rows = _read_csv(cfg["samples_csv"])
        cols = ["theta", "re00", "im00", "re01", "im01", "re10", "im10", "re11", "im11"]
        try:
            data = [[float(r[c]) for c in cols] for r in rows]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad samples file: {exc}") from exc
        samples = samples_from_rows(data, L)
        truth = None
    else:
        truth = _psis(cfg)
        samples = exact_samples(truth, _get(cfg, "N", truth.size + 1, int))
        M = _get(cfg, "M", math.inf, _shots)
        if not math.isinf(M):
            rng = np.random.default_rng(args.seed if args.seed is not None else _get(cfg, "seed", 0, int))
            samples = add_entry_noise(samples, 1 / math.sqrt(M), rng)
    psi = learn_phases(samples, direction)
    header = ["j", "psi"] + (["psi_true"] if truth is not None else [])
    rows = [[j + 1, v] + ([truth[j]] if truth is not None else []) for j, v in enumerate(psi)]
    res = {"L": int(psi.size)}
    if truth is not None:
        res["max_abs_err"] = float(np.max(np.abs(psi - truth)))
    return {"phases.csv": _csv(header, rows)}, res


def _noise(cfg, spam_seed):
    return NoiseModel.random(
        alpha=_get(cfg, "alpha", 1.0, float), delta=_get(cfg, "delta", 0.0, float),
        shots=_get(cfg, "M", math.inf, _shots), symmetric=_get(cfg, "symmetric_spam", False, bool),
        noise_kind=_get(cfg, "noise_kind", "bernoulli-counts", str),
        rng=np.random.default_rng(spam_seed),
    )


def cmd_tomography(cfg, args):
    p = _pulse(cfg)
    L = _get(cfg, "L", 16, int)
    seed = args.seed if args.seed is not None else _get(cfg, "seed", 0, int)
    spam_seed, shot_seed = np.random.SeedSequence(seed).spawn(2)
    rec = run_experiment_suite_detailed(p, L, p.T, _noise(cfg, spam_seed), shot_seed, _get(cfg, "N", 2 * L, int))
    h, rows = samples_to_rows(rec.samples)
    ph, prow = ptm_rows([rec.reference] + rec.ptms)
    err = [float(min(np.linalg.norm(u - e, 2), np.linalg.norm(u + e, 2)))
           for u, e in zip(rec.samples.unitaries, rec.exact)]
    return ({"samples.csv": _csv(h, rows), "ptm.csv": _csv(ph, prow)},
            {"max_unitary_error": max(err)})


def cmd_reconstruct(cfg, args):
    psi = _psis(cfg)
    T = _get(cfg, "T", 1.0, float)
    method = _get(cfg, "method", "direct-midpoint", str)
    n = _get(cfg, "n_grid", 1001, int)
    f = reconstruct(psi, T, method)
    t = np.linspace(0.0, T, n)
    return {"pulse_table.csv": _csv(["t", "phi_est"], zip(t, f(t)))}, {"method": method, "L": int(psi.size)}


def cmd_fisher(cfg, args):
    M = _get(cfg, "M", 1.0, float)
    if "psis" in cfg or "phases_csv" in cfg:
        psi = _psis(cfg)
    else:
        psi = np.full(_get(cfg, "L", 8, int), _get(cfg, "psi", 0.0, float))
    N = _get(cfg, "N", psi.size + 1, int)
    thetas = np.array(_floats(cfg["thetas"])) if "thetas" in cfg else midpoint_thetas(N)
    F = fim_numeric(psi, thetas, M)
    L = psi.size
    rows = [[i + 1, j + 1, F.m[i, j]] for i in range(L) for j in range(L)]
    files = {"fim.csv": _csv(["i", "j", "F"], rows)}
    res = {"min_eig": float(F.eigvalsh().min())}
    try:
        rep = crlb_report(F)
    except QspPulseError as exc:
        res["crlb"] = str(exc)
    else:
        files["crlb.csv"] = _csv(["j", "crlb_var"], [[j + 1, v] for j, v in enumerate(rep.variances)])
        res["rho_bar"] = rep.rho_bar if rep.rho_defined else None
    return files, res


def cmd_end_to_end(cfg, args):
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    config = PipelineConfig.from_dict(cfg)
    res = run(config, jobs=args.jobs)
    t, truth, est, err = res.table.T
    files = {
        "pulse_table.csv": _csv(["t", "phi_true", "phi_est"], zip(t, truth, est)),
        "error_table.csv": _csv(["t", "abs_err"], zip(t, err)),
    }
    prow = [[j + 1, v] + ([res.psi_std[j]] if res.psi_std is not None else [])
            for j, v in enumerate(res.psis[0])]
    files["phases.csv"] = _csv(["j", "psi"] + (["psi_std"] if res.psi_std is not None else []), prow)
    return files, {
        "sup_interior": res.sup_interior, "sup_boundary": res.sup_boundary,
        "sup_full": res.sup_full, "mean_interior": res.mean_interior,
        "sup_interior_reps": res.sup_interior_reps.tolist(),
    }


def cmd_bias_sweep(cfg, args):
    cfg = dict(cfg)
    if args.pulse:
        cfg["pulse"] = {"preset": args.pulse}
    if args.Ls:
        cfg["Ls"] = args.Ls
    p = _pulse(cfg)
    Ls = _get(cfg, "Ls", [8, 16, 32, 64], _ints)
    interior = _get(cfg, "interior", [0.1, 0.9], _floats)
    b = bias_scaling_experiment(p, Ls, _get(cfg, "method", "direct-midpoint", str),
                                _get(cfg, "apply_re", True, bool), tuple(interior))
    footer = ["slope", b.slope if b.slope_valid else "nan"]
    return ({"scaling.csv": _csv(["L", "sup_interior"], zip(b.Ls, b.errors), footer)},
            {"slope": b.slope if b.slope_valid else None, "slope_valid": b.slope_valid})


def cmd_variance_sweep(cfg, args):
    p = _pulse(cfg)
    L = _get(cfg, "L", 40, int)
    M = _get(cfg, "M", 1e4, _shots)
    reps = _get(cfg, "reps", 50, int)
    seed = args.seed if args.seed is not None else _get(cfg, "seed", 0, int)
    v = variance_experiment(p, L, M, reps, seed, _get(cfg, "N", None, int))
    crlb = v.crlb if v.crlb is not None else np.zeros(L)
    rows = [[j + 1, a, b, c, math.sqrt(d)] for j, (a, b, c, d) in enumerate(zip(v.psi_true, v.mean, v.std, crlb))]
    return ({"variance.csv": _csv(["j", "psi_true", "mean", "std", "crlb_std"], rows)},
            {"max_std": float(v.std.max()), "heuristic": math.sqrt(L / 4) / math.sqrt(M)})


def cmd_dfi_sweep(cfg, args):
    Ls = _get(cfg, "Ls", [8, 16, 32], _ints)
    M = _get(cfg, "M", 1.0, float)
    if "nus" in cfg:
        nus = _floats(cfg["nus"])
    else:
        nus = np.linspace(_get(cfg, "nu_min", 0.05, float), _get(cfg, "nu_max", math.pi, float),
                          _get(cfg, "n_nu", 64, int))
    factor = _get(cfg, "N_factor", None, float)
    rows = []
    for L in Ls:
        N = int(round(factor * L)) if factor else L + 1
        rows += [[pt.nu, pt.L, pt.dfi, pt.max_eig, pt.bound] for pt in dfi_sweep(L, M, N, nus)]
    return {"dfi.csv": _csv(["nu", "L", "dfi", "max_eig", "bound"], rows)}, {"points": len(rows)}


HANDLERS = {
    "simulate": cmd_simulate, "digitize": cmd_digitize, "learn": cmd_learn,
    "tomography": cmd_tomography, "reconstruct": cmd_reconstruct, "fisher": cmd_fisher,
    "end-to-end": cmd_end_to_end, "bias-sweep": cmd_bias_sweep,
    "variance-sweep": cmd_variance_sweep, "dfi-sweep": cmd_dfi_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsp-pulse", description="QSP-based analog pulse learning toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML parameter file")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--quiet", action="store_true", help="only report errors")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "bias-sweep":
            sp.add_argument("--pulse", help="pulse preset name")
            sp.add_argument("--Ls", type=_ints, help="comma separated segment counts")
    return parser


def _write_outputs(out: Path, files: dict):
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        tmp = out / (name + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, out / name)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 1
    out = Path(args.out or os.environ.get(OUT_ENV) or "out")
    try:
        cfg = load_config(args.config)
        files, results = HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (QspPulseError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    echo = dict(cfg)
    for k in ("pulse", "Ls"):
        if getattr(args, k, None):
            echo[k] = {"preset": args.pulse} if k == "pulse" else args.Ls
    if args.seed is not None:
        echo["seed"] = args.seed
    manifest = {
        "command": args.command,
        "config": _jsonable(echo),
        "config_hash": config_hash(echo),
        "versions": {
            "qsp_pulse": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "outputs": sorted(files),
        "results": _jsonable(results),
    }
    # provenance line at the top of every CSV
    files = {k: f"# config_hash={manifest['config_hash']}\n" + v for k, v in files.items()}
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    try:
        _write_outputs(out, files)
    except OSError as exc:
        print(f"runtime failure: cannot write outputs: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(f"{args.command}: wrote {', '.join(sorted(files))} to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
