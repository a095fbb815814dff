"""
tudsim — experiments/common.py
Shared plumbing for the figure experiments: the validated config, sweep pool, CSV and
JSON summary writers, threshold checks and phase lookup.
"""

import concurrent.futures
import csv
import json
import math
import operator
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from phase_cache import fixture_dir, get_cache
from tudsim.channels import GAD_THERMAL_P, named_state
from tudsim.numerics import PAULI
from tudsim.qsp import PhaseSequence

EXPERIMENTS = ("fig2", "fig4", "fig5", "fig6", "fig8", "custom")

DEFAULT_DEGREE = {"fig2": 51, "fig4": 30, "fig5": 30, "fig6": 30, "fig8": 30, "custom": 30}

# fixtures by (parity, degree); used whenever the requested degree matches
FIXTURES = {("odd", 51): "angles_odd51", ("even", 30): "angles_even30"}

METHODS = ("fud", "fud-pre", "sznagy", "block")

ESTIMATE_FIELDS = ["gamma", "method", "observable", "estimate", "exact", "abs_error",
                   "shots", "oracle_calls"]

FLOAT_FORMAT = "%.12e"


class ConfigError(ValueError):
    pass


def parse_gamma_grid(text: str) -> tuple:
    """"a:b:n" → n evenly spaced points from a to b inclusive; "a" → a single point."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return (float(parts[0]),)
        if len(parts) != 3:
            raise ValueError
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"gamma grid must look like a:b:n, got {text!r}")
    if n < 1:
        raise ConfigError(f"gamma grid needs at least one point, got n={n}")
    return tuple(float(g) for g in np.linspace(a, b, n))


def parse_shots(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinite", "exact"):
        return math.inf
    if isinstance(value, float) and math.isinf(value):
        return math.inf
    n = int(value)
    if n < 1:
        raise ConfigError(f"shots must be >= 1 or 'inf', got {value}")
    return n


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    degree: int | None = None
    delta: float = 0.1
    alpha: float = 1.61
    p: float = GAD_THERMAL_P
    gamma_grid: tuple = tuple(float(g) for g in np.linspace(0.0, 1.0, 50))
    shots: float = math.inf
    seed: int = 0
    samples: int = 1000
    method: str = "fud"
    states: tuple = ("1", "+x", "+y")
    observables: tuple = ("X", "Y", "Z")
    tolerance: float = 1e-2
    phases: str = ""
    out_dir: Path = Path("results")
    workers: int = 4

    @property
    def resolved_degree(self) -> int:
        return self.degree if self.degree is not None else DEFAULT_DEGREE[self.experiment]

    def validate(self) -> "ExperimentConfig":
        """Raises ConfigError on the first problem; returns self so calls can chain."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r} "
                              f"(known: {', '.join(EXPERIMENTS)})")
        if self.resolved_degree < 1:
            raise ConfigError(f"degree must be >= 1, got {self.resolved_degree}")
        if not 0 < self.delta < 0.5:
            raise ConfigError(f"delta must lie in (0, 0.5), got {self.delta}")
        if self.alpha < 1:
            raise ConfigError(f"alpha must be >= 1, got {self.alpha}")
        if not 0 <= self.p <= 1:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if not self.gamma_grid:
            raise ConfigError("gamma grid is empty")
        if min(self.gamma_grid) < 0 or max(self.gamma_grid) > 1:
            raise ConfigError("gamma values must lie in [0, 1]")
        if not (math.isinf(self.shots) or self.shots >= 1):
            raise ConfigError(f"shots must be >= 1 or inf, got {self.shots}")
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r} (known: {', '.join(METHODS)})")
        if not self.states or not self.observables:
            raise ConfigError("need at least one state and one observable")
        for name in self.states:
            try:
                named_state(name)
            except ValueError as e:
                raise ConfigError(str(e))
        for name in self.observables:
            if name not in PAULI:
                raise ConfigError(f"unknown observable {name!r} (known: {', '.join(PAULI)})")
        if self.tolerance <= 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.phases and not (fixture_dir() / f"{self.phases}.json").exists():
            raise ConfigError(f"phase fixture not found: {fixture_dir() / self.phases}.json")
        if self.experiment in ("fig2", "fig4"):
            name = FIXTURES[("odd", 51) if self.experiment == "fig2" else ("even", 30)]
            if not self.phases and not (fixture_dir() / f"{name}.json").exists():
                raise ConfigError(f"fixture not found: {fixture_dir() / name}.json")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["degree"] = self.resolved_degree
        d["shots"] = "inf" if math.isinf(self.shots) else int(self.shots)
        d["gamma_grid"] = list(self.gamma_grid)
        d["states"] = list(self.states)
        d["observables"] = list(self.observables)
        d["out_dir"] = str(self.out_dir)
        return d


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    op: str = "<="

    @property
    def passed(self) -> bool:
        cmp = {"<=": operator.le, ">=": operator.ge, "==": operator.eq}[self.op]
        return bool(cmp(self.value, self.threshold))

    def to_dict(self) -> dict:
        return {"value": _json_float(self.value), "threshold": self.threshold,
                "op": self.op, "passed": self.passed}


@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    csv_paths: tuple
    summary_path: Path
    checks: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1


# ── Phases ────────────────────────────────────────────────────────────────────
def load_phases(config: ExperimentConfig, parity: str, margin: float) -> PhaseSequence:
    """
    Explicit fixture if configured, else the shipped fixture for (parity, degree),
    else a solved sequence from the phase cache.
    """
    cache = get_cache()
    if config.phases:
        ps = cache.fixture(config.phases)
        if ps.parity != parity:
            raise ConfigError(f"fixture {config.phases} has {ps.parity} parity, need {parity}")
        return ps
    degree = config.resolved_degree
    name = FIXTURES.get((parity, degree))
    if name and (fixture_dir() / f"{name}.json").exists():
        return cache.fixture(name)
    return cache.solve_and_cache(parity, degree, round(margin, 4))


# ── Sweeps ────────────────────────────────────────────────────────────────────
def sweep(fn, items, workers: int = 4) -> list:
    """fn over items on a thread pool; results come back in item order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ── Output ────────────────────────────────────────────────────────────────────
def _cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return FLOAT_FORMAT % v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _json_float(v):
    v = float(v)
    if math.isinf(v) or math.isnan(v):
        return str(v)
    return v


def write_csv(path: Path, fieldnames: list, rows: list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row.get(k, "")) for k in fieldnames})
    return path


def finish(config: ExperimentConfig, tables: dict, checks: list, extra: dict | None = None,
           ) -> ExperimentResult:
    """
    Write every table (stem -> (fieldnames, rows)) and the JSON summary, print one line
    per check, and return the result.
    """
    out = Path(config.out_dir)
    csv_paths = tuple(write_csv(out / f"{stem}.csv", fields_, rows)
                      for stem, (fields_, rows) in tables.items())
    extra = extra or {}
    summary = {
        "experiment": config.experiment,
        "config":     config.to_dict(),
        "passed":     all(c.passed for c in checks),
        "checks":     {c.name: c.to_dict() for c in checks},
        "outputs":    [p.name for p in csv_paths],
        **extra,
    }
    summary_path = out / f"{config.experiment}_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    for c in checks:
        tag = "PASS" if c.passed else "FAIL"
        print(f"  {tag}  {c.name:<28} {c.value:.3e} {c.op} {c.threshold:g}", flush=True)
    return ExperimentResult(config.experiment, csv_paths, summary_path, tuple(checks), extra)
