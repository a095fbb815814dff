#!/usr/bin/env python3
"""
tudsim — tud_runner.py
Command-line driver for the decomposition toolkit.

  decompose MATRIX      two- or four-unitary decomposition of a matrix file
  qsp solve             solve and cache phase factors for a target polynomial
  qsp eval ANGLES       evaluate a phase list on a grid (CSV)
  channel simulate      GAD expectation sweep with a chosen estimator
  figures ID            reproduce a figure's curve data (fig2 fig4 fig5 fig6 fig8 custom)

Config: ~/.tudsim/config.toml (or --config FILE, TOML or JSON), flat keys:
    seed = 0
    shots = "inf"
    degree = 30
    alpha = 1.61
    gamma_grid = "0:1:50"
    workers = 4

Precedence: built-in defaults < config file < command-line flags.
Exit status: 0 success, 1 threshold or solver failure, 2 invalid input.
"""

import argparse
import json
import math
import os
import sys
import threading

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

_SCRIPT_DIR = Path(__file__).resolve().parent
for _candidate in [_SCRIPT_DIR.parent, _SCRIPT_DIR]:
    if (_candidate / "tudsim").is_dir():
        sys.path.insert(0, str(_candidate))
        break

from experiments import run_experiment
from experiments.common import (
    EXPERIMENTS, METHODS, ConfigError, ExperimentConfig, parse_gamma_grid, parse_shots,
    write_csv,
)
from phase_builder import ALL_TARGETS, solve_and_cache_phases
from phase_cache import get_cache
from tudsim.channels import GAD_THERMAL_P
from tudsim.encodings import sznagy_encode
from tudsim.numerics import matrix_from_json, op_norm
from tudsim.qsp import DEFAULT_MARGIN, R, WX, TargetFunction, load_angles, qsp_response
from tudsim.tud import run_fud, run_tud

# ═══════════════════════════════════════════════════════════════════════════════
#  CONFIG
# ═══════════════════════════════════════════════════════════════════════════════

DATA_DIR    = Path(os.environ.get("TUDSIM_DIR", str(Path.home() / ".tudsim")))
CONFIG_FILE = DATA_DIR / "config.toml"

# Defaults (overridden by the config file, then by flags)
EXPERIMENT  = ""
SEED        = 0
SHOTS       = math.inf
DEGREE      = 0          # 0 = the experiment's own default degree
DELTA       = 0.1
ALPHA       = 1.61
P_THERMAL   = GAD_THERMAL_P
GAMMA_GRID  = "0:1:50"
SAMPLES     = 1000
WORKERS     = 4
METHOD      = "fud"
STATES      = ["1", "+x", "+y"]
OBSERVABLES = ["X", "Y", "Z"]
TOLERANCE   = 1e-2
PHASES      = ""         # fixture stem, e.g. "angles_even30"; empty = automatic
OUT_DIR     = "results"

_config_lock = threading.Lock()
_config_stamp = None    # (path, mtime) of the last file applied


def _read_config_file(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".json":
        return json.loads(text)
    return tomllib.loads(text)


def _load_config(path=None):
    global EXPERIMENT, SEED, SHOTS, DEGREE, DELTA, ALPHA, P_THERMAL, GAMMA_GRID
    global SAMPLES, WORKERS, METHOD, STATES, OBSERVABLES, TOLERANCE, PHASES, OUT_DIR
    global _config_stamp

    explicit = path is not None
    path = Path(path) if path else CONFIG_FILE
    if not path.exists():
        if explicit:
            print(f"  warning: config {path} not found, using defaults", flush=True)
        return
    try:
        stamp = (path.resolve(), path.stat().st_mtime)
        if stamp == _config_stamp:
            return  # same file, unchanged since last load
        cfg = _read_config_file(path)
        _config_stamp = stamp
    except Exception as e:
        print(f"  warning: bad config {path.name} — {e}", flush=True)
        return
    if not isinstance(cfg, dict):
        print(f"  warning: config {path.name} is not a table of keys", flush=True)
        return

    with _config_lock:
        # Empty strings mean "not set"
        def _get(key, default):
            v = cfg.get(key)
            return v if v is not None and v != "" else default

        def _int(key, default, lo):
            v = cfg.get(key)
            if v is not None and v != "":
                try:
                    return max(lo, int(v))
                except (TypeError, ValueError):
                    print(f"  warning: {key}={v!r} is not an integer, keeping {default}", flush=True)
            return default

        def _float(key, default, lo):
            v = cfg.get(key)
            if v is not None and v != "":
                try:
                    return max(lo, float(v))
                except (TypeError, ValueError):
                    print(f"  warning: {key}={v!r} is not a number, keeping {default}", flush=True)
            return default

        EXPERIMENT  = str(_get("experiment", EXPERIMENT))
        SEED        = _int("seed",    SEED,    0)
        DEGREE      = _int("degree",  DEGREE,  0)
        SAMPLES     = _int("samples", SAMPLES, 1)
        WORKERS     = _int("workers", WORKERS, 1)
        DELTA       = _float("delta",     DELTA,     1e-6)
        ALPHA       = _float("alpha",     ALPHA,     1.0)
        P_THERMAL   = min(1.0, _float("p", P_THERMAL, 0.0))
        TOLERANCE   = _float("tolerance", TOLERANCE, 1e-15)
        GAMMA_GRID  = str(_get("gamma_grid", GAMMA_GRID))
        METHOD      = str(_get("method",     METHOD))
        PHASES      = str(_get("phases",     PHASES))
        OUT_DIR     = str(_get("out",        OUT_DIR))
        if "shots" in cfg:
            try:
                SHOTS = parse_shots(cfg["shots"])
            except (ConfigError, TypeError, ValueError) as e:
                print(f"  warning: shots={cfg['shots']!r} ignored — {e}", flush=True)
        if "states" in cfg:      STATES      = [str(s) for s in cfg["states"]]
        if "observables" in cfg: OBSERVABLES = [str(o) for o in cfg["observables"]]


def _experiment_config(experiment: str, args) -> ExperimentConfig:
    """Merged settings for one run; flags beat the config file."""
    def flag(name, current):
        v = getattr(args, name, None)
        return current if v is None else v

    degree = flag("degree", DEGREE)
    return ExperimentConfig(
        experiment=experiment,
        degree=degree or None,
        delta=flag("delta", DELTA),
        alpha=flag("alpha", ALPHA),
        p=flag("p", P_THERMAL),
        gamma_grid=parse_gamma_grid(flag("gamma_grid", GAMMA_GRID)),
        shots=parse_shots(flag("shots", SHOTS)),
        seed=flag("seed", SEED),
        samples=flag("samples", SAMPLES),
        method=flag("method", METHOD),
        states=tuple(flag("state", STATES)),
        observables=tuple(flag("observable", OBSERVABLES)),
        tolerance=flag("tolerance", TOLERANCE),
        phases=flag("phases", PHASES),
        out_dir=Path(flag("out", OUT_DIR)),
        workers=flag("workers", WORKERS),
    )


def _banner(command: str):
    shots = "inf" if math.isinf(SHOTS) else SHOTS
    print(f"tudsim runner: {command}", flush=True)
    print(f"  tunables: seed={SEED}  shots={shots}  degree={DEGREE or 'auto'}  alpha={ALPHA}"
          f"  delta={DELTA}  gamma_grid={GAMMA_GRID}  workers={WORKERS}", flush=True)
    cache = get_cache()
    if cache.loaded:
        print(f"  phase cache: {cache.stats}", flush=True)


# ═══════════════════════════════════════════════════════════════════════════════
#  COMMANDS
# ═══════════════════════════════════════════════════════════════════════════════

def _load_matrix(path: Path) -> np.ndarray:
    """[[re, im], ...] rows, plain real rows, or {"matrix": ...}."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("matrix")
    if data is None:
        raise ConfigError(f"{path} holds no matrix")
    try:
        return matrix_from_json(data)
    except ValueError:
        A = np.asarray(data, dtype=complex)
    if A.ndim != 2:
        raise ConfigError(f"{path} does not hold a 2-D matrix")
    return A


def cmd_decompose(args) -> int:
    A = _load_matrix(args.matrix)
    degree = args.degree if args.degree is not None else (DEGREE or None)
    phases = get_cache().fixture(args.phases) if args.phases else None
    if args.method == "tud":
        norm = op_norm(A)
        if norm > 1 + 1e-10:
            raise ConfigError(f"‖A‖ = {norm:.6f} exceeds 1; the two-unitary path needs a contraction")
        delta = args.delta if args.delta is not None else DELTA
        dec = run_tud(sznagy_encode(A), delta, degree_override=degree, phases=phases)
    else:
        alpha = args.alpha if args.alpha is not None else ALPHA
        method = "sznagy" if args.method == "sznagy" else "qsvt"
        dec = run_fud(A, alpha, degree_override=degree, phases=phases, method=method)

    out = dec.to_dict()
    out["reconstruction_error"] = op_norm(A - dec.reconstruct())
    text = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
        print(f"  decompose: {len(dec.parts)} parts, ε bound {dec.epsilon_bound:.3e}, "
              f"reconstruction {out['reconstruction_error']:.3e} → {args.out}", flush=True)
    else:
        print(text)
    return 0


def cmd_qsp_solve(args) -> int:
    degree = args.degree if args.degree is not None else (DEGREE or 51)
    path = solve_and_cache_phases(args.target, degree, args.out, args.margin)
    entry = json.loads(path.read_text())
    print(f"  qsp solve: {path} (converged={entry['converged']})", flush=True)
    return 0 if entry["converged"] else 1


def cmd_qsp_eval(args) -> int:
    ps = load_angles(args.angles, args.convention)
    xs = np.asarray(parse_gamma_grid(args.points))
    if np.any(np.abs(xs) > 1):
        raise ConfigError("evaluation points must lie in [-1, 1]")
    resp = qsp_response(ps, xs)
    target = None
    if args.target:
        target = TargetFunction.odd_sign_sqrt() if args.target == "odd" else TargetFunction.even_sqrt()
    rows = []
    for x, z in zip(xs, resp):
        row = {"x": x, "re": z.real, "im": z.imag}
        if target is not None:
            t = float(target(x))
            row.update(target=t, abs_error=abs(z.real - t))
        rows.append(row)
    fields = ["x", "re", "im"] + (["target", "abs_error"] if target is not None else [])
    out = Path(args.out) if args.out else Path(OUT_DIR) / "qsp_eval.csv"
    write_csv(out, fields, rows)
    msg = f"  qsp eval: degree {ps.degree}, {len(rows)} points → {out}"
    if target is not None:
        msg += f", max error {max(r['abs_error'] for r in rows):.3e}"
    print(msg, flush=True)
    return 0


def cmd_channel_simulate(args) -> int:
    from experiments import custom
    config = _experiment_config("custom", args).validate()
    result = custom.run(config, stem="channel")
    return result.exit_status


def cmd_figures(args) -> int:
    experiment = args.id or EXPERIMENT
    if not experiment:
        raise ConfigError(f"no experiment id given (choose from {', '.join(EXPERIMENTS)})")
    result = run_experiment(_experiment_config(experiment, args))
    print(f"  {experiment}: {'PASS' if result.passed else 'FAIL'} → {result.summary_path}",
          flush=True)
    return result.exit_status


# ═══════════════════════════════════════════════════════════════════════════════
#  CLI
# ═══════════════════════════════════════════════════════════════════════════════

def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config",     help="TOML or JSON config file")
    p.add_argument("--seed",       type=int)
    p.add_argument("--shots",      help="Shots per estimate, or 'inf' for exact evaluation")
    p.add_argument("--degree",     type=int)
    p.add_argument("--alpha",      type=float)
    p.add_argument("--delta",      type=float)
    p.add_argument("--gamma-grid", dest="gamma_grid", help="a:b:n")
    p.add_argument("--workers",    type=int)
    p.add_argument("--phases",     help="Phase fixture stem, e.g. angles_even30")
    p.add_argument("--out",        help="Output directory (figures) or file")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="tud_runner", description="tudsim command-line driver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="Decompose a matrix file")
    p.add_argument("matrix", type=Path)
    p.add_argument("--method", choices=["tud", "fud", "sznagy"], default="fud")
    p.set_defaults(func=cmd_decompose)

    q = sub.add_parser("qsp", help="Phase factor tools")
    qsub = q.add_subparsers(dest="qsp_command", required=True)
    p = qsub.add_parser("solve", parents=[common], help="Solve and cache phases")
    p.add_argument("--target", choices=ALL_TARGETS, default="odd")
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    p.set_defaults(func=cmd_qsp_solve)
    p = qsub.add_parser("eval", parents=[common], help="Evaluate a phase list")
    p.add_argument("angles", type=Path)
    p.add_argument("--convention", choices=[WX, R], default=WX)
    p.add_argument("--points", default="-1:1:201", help="a:b:n grid of signal values")
    p.add_argument("--target", choices=["odd", "even"])
    p.set_defaults(func=cmd_qsp_eval)

    c = sub.add_parser("channel", help="Channel simulation")
    csub = c.add_subparsers(dest="channel_command", required=True)
    p = csub.add_parser("simulate", parents=[common], help="GAD expectation sweep")
    p.add_argument("--p", type=float, help="Thermal population (default 0.982)")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--state", action="append", help="Initial state (repeatable)")
    p.add_argument("--observable", action="append", help="Pauli observable (repeatable)")
    p.add_argument("--tolerance", type=float)
    p.set_defaults(func=cmd_channel_simulate)

    p = sub.add_parser("figures", parents=[common], help="Reproduce figure data")
    p.add_argument("id", nargs="?", choices=EXPERIMENTS)
    p.add_argument("--samples", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--tolerance", type=float)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _load_config(args.config)
    command = " ".join(filter(None, [args.command, getattr(args, "qsp_command", None),
                                     getattr(args, "channel_command", None)]))
    _banner(command)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", flush=True)
        return 2
    except ValueError as e:
        print(f"error: invalid input — {e}", flush=True)
        return 2
    except RuntimeError as e:
        print(f"error: {e}", flush=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
