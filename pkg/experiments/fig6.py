"""
tudsim — experiments/fig6.py
⟨X⟩, ⟨Y⟩, ⟨Z⟩ after the GAD channel from |1⟩, |+x⟩, |+y⟩ with the four-unitary
decomposition of every Kraus operator, across the γ grid.
"""

from experiments import gad
from experiments.common import ESTIMATE_FIELDS, Check, ExperimentConfig, finish, load_phases, sweep
from tudsim.tud import default_margin

BIAS_THRESHOLD = 1e-2


def run(config: ExperimentConfig):
    ps = load_phases(config, "even", default_margin(config.alpha))
    print(f"  fig6: {len(config.gamma_grid)} γ points, alpha {config.alpha}, "
          f"degree {ps.degree}, shots {config.shots}", flush=True)

    def one(item):
        index, gamma = item
        return gad.sweep_point(config.p, gamma, index, "fud", config.alpha, ps,
                               config.states, config.observables, config.shots, config.seed)

    points = [pt for chunk in sweep(one, enumerate(config.gamma_grid), config.workers)
              for pt in chunk]
    checks = [Check("max_bias", max(pt.bias for pt in points), BIAS_THRESHOLD)]
    extra = {
        "max_abs_error": max(pt.abs_error for pt in points),
        "confidence_failures": sum(pt.confidence_failures for pt in points),
    }
    return finish(config, {"fig6": (ESTIMATE_FIELDS, [pt.row() for pt in points])}, checks, extra)
