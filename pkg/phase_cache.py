#!/usr/bin/env python3
"""
tudsim — phase_cache.py
On-disk cache of solved phase sequences. Loads every *.json under the cache
directory once, keys entries by (target, degree, margin), and solves-and-stores
on a miss so repeated sweeps never re-run the phase solver.

Also resolves the shipped fixture angle lists (angles_odd51.json, angles_even30.json).
"""

import json
import os
import time
from pathlib import Path

import numpy as np

from tudsim.qsp import (
    DEFAULT_MARGIN, ChebyshevPoly, PhaseSequence, PhaseSolveError, TargetFunction,
    approx_target, load_angles, solve_phases,
)

REPO_FIXTURES = Path(__file__).resolve().parent / "fixtures"
DATA_DIR      = Path(os.environ.get("TUDSIM_DIR", Path.home() / ".tudsim"))
CACHE_DIR     = DATA_DIR / "phases"

TARGETS = {
    "odd":  TargetFunction.odd_sign_sqrt,
    "even": TargetFunction.even_sqrt,
}


def target_poly(target: str, degree: int, margin: float = DEFAULT_MARGIN) -> ChebyshevPoly:
    """
    "odd" / "even" are the decomposition targets at scale 1; "cheb" is the bare
    Chebyshev polynomial T_n, realized by all-zero phases.
    """
    if target == "cheb":
        coeffs = np.zeros(degree + 1)
        coeffs[degree] = 1.0
        return ChebyshevPoly(coeffs, "odd" if degree % 2 else "even", margin=margin,
                             approx_error=0.0, bound=1.0)
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r} (known: {', '.join(TARGETS)}, cheb)")
    return approx_target(TARGETS[target](), degree, scale=1.0, margin=margin)


def solve_entry(target: str, degree: int, margin: float = DEFAULT_MARGIN) -> dict:
    """
    Approximate and solve one target. Never raises PhaseSolveError: a solver
    failure comes back as converged=False with the best angles and an "error" field.
    """
    poly = target_poly(target, degree, margin)
    entry = {"target": target, "degree": degree, "margin": margin,
             "approx_error": poly.approx_error}
    try:
        ps = solve_phases(poly)
    except PhaseSolveError as e:
        entry.update(angles=list(e.best.angles) if e.best else [],
                     residual=e.residual, converged=False, error=str(e))
        return entry
    entry.update(angles=list(ps.angles), residual=ps.residual, converged=True)
    return entry


def fixture_dir() -> Path:
    return Path(os.environ.get("TUDSIM_FIXTURES", REPO_FIXTURES))


def cache_key(target: str, degree: int, margin: float) -> str:
    return f"{target}-n{degree}-d{margin:.4f}"


class PhaseCache:
    """
    Keyed store of phase sequences.

        self._entries : dict[str, dict]
            cache_key -> {"target", "degree", "margin", "angles", "residual",
                          "approx_error", "converged"}

    Files that fail to parse are reported and skipped, never raised.
    """

    def __init__(self, cache_dir=None):
        self._dir = Path(cache_dir) if cache_dir else CACHE_DIR
        self._entries = {}
        self._load_time = 0.0
        self._bad = 0
        if self._dir.exists():
            self.load()

    def load(self):
        t0 = time.perf_counter()
        for path in sorted(self._dir.glob("*.json")):
            try:
                entry = json.loads(path.read_text())
                key = cache_key(entry["target"], int(entry["degree"]), float(entry["margin"]))
                PhaseSequence(tuple(entry["angles"]))
            except Exception as e:
                self._bad += 1
                print(f"  phase_cache: skipping {path.name}: {e}", flush=True)
                continue
            self._entries[key] = entry
        self._load_time = (time.perf_counter() - t0) * 1000
        print(f"  phase_cache: {len(self._entries)} sequences loaded in {self._load_time:.1f}ms",
              flush=True)

    def get(self, target: str, degree: int, margin: float = DEFAULT_MARGIN) -> PhaseSequence | None:
        entry = self._entries.get(cache_key(target, degree, margin))
        if entry is None or not entry.get("converged", False):
            return None
        return PhaseSequence(tuple(entry["angles"]), "Wx", residual=entry.get("residual"))

    def solve_and_cache(self, target: str, degree: int, margin: float = DEFAULT_MARGIN,
                        out_path=None) -> PhaseSequence:
        """
        Return the cached sequence or solve, write and return it. A solver failure is
        still written (converged=false, best angles) before PhaseSolveError propagates.
        """
        key = cache_key(target, degree, margin)
        hit = self.get(target, degree, margin)
        if hit is not None:
            print(f"  phase_cache: [cached] {key}", flush=True)
            return hit
        t0 = time.perf_counter()
        entry = solve_entry(target, degree, margin)
        self._write(key, entry, out_path)
        ps = PhaseSequence(tuple(entry["angles"]), "Wx", residual=entry["residual"]) \
            if entry["angles"] else None
        if not entry["converged"]:
            raise PhaseSolveError(entry["error"], best=ps, residual=entry["residual"])
        ms = (time.perf_counter() - t0) * 1000
        print(f"  phase_cache: solved {key} in {ms:.0f}ms (residual {ps.residual:.2e})", flush=True)
        return ps

    def _write(self, key: str, entry: dict, out_path=None):
        path = Path(out_path) if out_path else self._dir / f"{key}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(entry, indent=2))
        self._entries[key] = entry

    def fixture(self, name: str) -> PhaseSequence:
        """Fixture angles by file stem, e.g. "angles_odd51"; Wx convention."""
        path = fixture_dir() / f"{name}.json"
        if not path.exists():
            raise FileNotFoundError(f"fixture not found: {path}")
        return load_angles(path, "Wx")

    @property
    def loaded(self) -> bool:
        return bool(self._entries)

    @property
    def stats(self) -> dict:
        return {
            "total":     len(self._entries),
            "converged": sum(1 for e in self._entries.values() if e.get("converged")),
            "bad_files": self._bad,
            "load_ms":   round(self._load_time, 1),
        }


# ── Singleton for import into the runner ─────────────────────────────────────
_cache: PhaseCache | None = None

def get_cache(cache_dir=None) -> PhaseCache:
    global _cache
    if _cache is None:
        _cache = PhaseCache(cache_dir)
    return _cache


# ── CLI: smoke test ───────────────────────────────────────────────────────────
if __name__ == "__main__":
    import sys

    from tudsim.qsp import qsp_response

    cache = PhaseCache(sys.argv[1] if len(sys.argv) > 1 else None)
    print(f"\nStats: {cache.stats}\n")

    checks = [
        ("angles_odd51",  TargetFunction.odd_sign_sqrt(), np.linspace(0.1, 0.9, 9)),
        ("angles_even30", TargetFunction.even_sqrt(),     np.linspace(-0.9, 0.9, 9)),
    ]
    print("Fixture responses:")
    for name, target, xs in checks:
        try:
            ps = cache.fixture(name)
        except FileNotFoundError as e:
            print(f"  {name:<14} → {e}")
            continue
        t0 = time.perf_counter()
        err = np.max(np.abs(qsp_response(ps, xs).real - target(xs)))
        ms = (time.perf_counter() - t0) * 1000
        print(f"  {name:<14} degree {ps.degree:>3}  max error {err:.2e}  ({ms:.2f}ms)")
