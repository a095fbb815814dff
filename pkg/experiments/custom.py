"""
tudsim — experiments/custom.py
GAD expectation sweep with every knob exposed: method, states, observables, shots.
Backs `channel simulate` as well as the custom experiment.
"""

import math

from experiments import gad
from experiments.common import ESTIMATE_FIELDS, Check, ExperimentConfig, finish, load_phases, sweep
from tudsim.estimation import BETA
from tudsim.tud import default_margin


def run(config: ExperimentConfig, stem: str = "custom"):
    ps = None
    if config.method in ("fud", "fud-pre"):
        ps = load_phases(config, "even", default_margin(config.alpha))
    print(f"  {stem}: method {config.method}, {len(config.gamma_grid)} γ points, "
          f"shots {config.shots}", flush=True)

    def one(item):
        index, gamma = item
        return gad.sweep_point(config.p, gamma, index, config.method, config.alpha, ps,
                               config.states, config.observables, config.shots, config.seed)

    points = [pt for chunk in sweep(one, enumerate(config.gamma_grid), config.workers)
              for pt in chunk]
    checks = [Check("max_bias", max(pt.bias for pt in points), config.tolerance)]
    failures = sum(pt.confidence_failures for pt in points)
    if not math.isinf(config.shots):
        # each point sums 10 Hadamard-type terms per Kraus operator; β bounds each
        terms = sum(10 if pt.method != "block" else 1 for pt in points) * 4
        checks.append(Check("confidence_failure_rate", failures / terms, 3 * BETA))
    extra = {
        "max_abs_error": max(pt.abs_error for pt in points),
        "confidence_failures": failures,
    }
    return finish(config, {stem: (ESTIMATE_FIELDS, [pt.row() for pt in points])}, checks, extra)
