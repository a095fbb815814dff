#!/usr/bin/env python3
"""
tudsim — phase_builder.py
Solves QSP phase factors for the decomposition targets and writes one JSON file per
(target, degree, margin) into the phase cache.

Usage:
    python3 phase_builder.py                         # default jobs (odd 21..51, even 10..30)
    python3 phase_builder.py --target odd --degrees 51,61
    python3 phase_builder.py --target cheb --degrees 1 --out /tmp/t1.json
    python3 phase_builder.py --resume                # skip already-solved entries
    python3 phase_builder.py --validate-only         # audit the cache directory

Output: $TUDSIM_DIR/phases/<target>-n<degree>-d<margin>.json (default ~/.tudsim)
The runner picks the files up through phase_cache.get_cache().
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

_HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(_HERE))

try:
    from phase_cache import CACHE_DIR, TARGETS, cache_key, solve_entry
    from tudsim.qsp import DEFAULT_MARGIN, RESIDUAL_TOL, PhaseSequence, qsp_response
except ImportError as e:
    print(f"ERROR: {e}. Run from the tudsim repo root.")
    sys.exit(1)

# ── Jobs ──────────────────────────────────────────────────────────────────────
# (target, degree)
DEFAULT_JOBS = [
    ("odd",  21), ("odd",  31), ("odd",  41), ("odd",  51),
    ("even", 10), ("even", 20), ("even", 30),
]
ALL_TARGETS = (*TARGETS, "cheb")
REQUIRED = {"target", "degree", "margin", "angles", "residual", "converged"}


def _matches(entry: dict, target: str, degree: int, margin: float) -> bool:
    return (entry.get("target") == target and int(entry.get("degree", -1)) == degree
            and math.isclose(float(entry.get("margin", -1)), margin, abs_tol=1e-9))


# ── Solve one entry ───────────────────────────────────────────────────────────
def solve_and_cache_phases(target: str, degree: int, out_path=None,
                           margin: float = DEFAULT_MARGIN) -> Path:
    """
    Write the phase file for (target, degree, margin) and return its path.

    An existing converged file for the same key is a cache hit and is left untouched.
    A non-converged solve is written anyway (converged=false, best angles) so the
    failure is inspectable; the caller decides whether that is fatal.
    """
    if target not in ALL_TARGETS:
        raise ValueError(f"unknown target {target!r} (known: {', '.join(ALL_TARGETS)})")
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    key = cache_key(target, degree, margin)
    path = Path(out_path) if out_path else CACHE_DIR / f"{key}.json"

    if path.exists():
        try:
            entry = json.loads(path.read_text())
            if entry.get("converged") and _matches(entry, target, degree, margin):
                print(f"  [cached] {key}")
                return path
        except (json.JSONDecodeError, TypeError, ValueError) as e:
            print(f"  unreadable {path.name} ({e}), re-solving")

    print(f"  [solve]  {key} ...", end=" ", flush=True)
    t0 = time.perf_counter()
    entry = solve_entry(target, degree, margin)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(entry, indent=2))
    ms = (time.perf_counter() - t0) * 1000
    if entry["converged"]:
        print(f"residual {entry['residual']:.2e} ({ms:.0f}ms)")
    else:
        print(f"NOT converged: {entry['error']}")
    return path


# ── Validation ────────────────────────────────────────────────────────────────
def validate(path: Path) -> list:
    """Problems found in one phase file; empty when it is usable."""
    try:
        entry = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        return [f"unreadable: {e}"]
    if not isinstance(entry, dict):
        return ["not a JSON object"]
    missing = REQUIRED - entry.keys()
    if missing:
        return [f"missing keys: {', '.join(sorted(missing))}"]
    problems = []
    if not entry["converged"]:
        problems.append("not converged")
    try:
        ps = PhaseSequence(tuple(entry["angles"]))
    except ValueError as e:
        return problems + [f"bad angles: {e}"]
    if ps.degree != int(entry["degree"]):
        problems.append(f"{len(ps.angles)} angles for degree {entry['degree']}")
    res = entry["residual"]
    if res is None or not math.isfinite(res) or res > RESIDUAL_TOL:
        problems.append(f"residual {res}")
    # response must stay inside the unit disc everywhere
    peak = float(abs(qsp_response(ps, [-1.0, -0.5, 0.0, 0.5, 1.0])).max())
    if peak > 1 + 1e-9:
        problems.append(f"|response| reaches {peak:.6f}")
    return problems


def _validate_dir(directory: Path) -> int:
    files = sorted(directory.glob("*.json")) if directory.exists() else []
    print(f"Phase files in {directory}: {len(files)}")
    bad = 0
    for path in files:
        problems = validate(path)
        if problems:
            bad += 1
            print(f"  {path.name} → {'; '.join(problems)}")
    print(f"Bad files: {bad}")
    return bad


def _parse_degrees(text: str) -> list:
    try:
        degrees = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"degrees must be comma-separated integers: {text!r}")
    if not degrees or min(degrees) < 1:
        raise argparse.ArgumentTypeError("need at least one degree >= 1")
    return degrees


# ── Main ──────────────────────────────────────────────────────────────────────
def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="tudsim phase builder")
    parser.add_argument("--target",  choices=[*ALL_TARGETS, "all"], default="all",
                        help="Target polynomial family (default: the built-in job list)")
    parser.add_argument("--degrees", type=_parse_degrees, help="Comma-separated degrees, e.g. 31,51")
    parser.add_argument("--margin",  type=float, default=DEFAULT_MARGIN, help="Margin δ (default 0.1)")
    parser.add_argument("--out",     help="Output file (single target and degree only)")
    parser.add_argument("--resume",  action="store_true", help="Skip entries already solved")
    parser.add_argument("--validate-only", action="store_true", help="Audit the cache directory")
    args = parser.parse_args(argv)

    if args.validate_only:
        directory = Path(args.out).parent if args.out else CACHE_DIR
        return 1 if _validate_dir(directory) else 0

    if not 0 < args.margin < 0.5:
        print(f"ERROR: margin must lie in (0, 0.5), got {args.margin}")
        return 2

    if args.target == "all":
        jobs = DEFAULT_JOBS if not args.degrees else [
            (t, n) for n in args.degrees for t in TARGETS if (n % 2 == 1) == (t == "odd")]
    else:
        jobs = [(args.target, n) for n in (args.degrees or [51 if args.target == "odd" else 30])]
    if args.out and len(jobs) != 1:
        print("ERROR: --out needs exactly one target and degree")
        return 2

    print(f"Solving {len(jobs)} phase sequence(s), margin {args.margin}\n")
    failed = 0
    for target, degree in jobs:
        path = Path(args.out) if args.out else CACHE_DIR / f"{cache_key(target, degree, args.margin)}.json"
        if not args.resume and not args.out:
            path.unlink(missing_ok=True)
        try:
            solve_and_cache_phases(target, degree, path, args.margin)
        except (ValueError, RuntimeError) as e:
            print(f"error: {e}")
            failed += 1
            continue
        if validate(path):
            failed += 1

    print(f"\nDone. {len(jobs) - failed}/{len(jobs)} usable")
    print(f"Output: {Path(args.out) if args.out else CACHE_DIR}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
