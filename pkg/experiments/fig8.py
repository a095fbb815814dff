"""
tudsim — experiments/fig8.py
Error cancellation before amplitude amplification: the GAD sweep of fig6 with the
pre-OAA parts. Each of the ten terms per Kraus operator is off by the polynomial
error, the assembled estimate is exact to rounding.
"""

from experiments import gad
from experiments.common import ESTIMATE_FIELDS, Check, ExperimentConfig, finish, load_phases, sweep
from tudsim.tud import default_margin

SUMMED_THRESHOLD = 1e-8
CANCELLATION_RATIO = 1e3


def run(config: ExperimentConfig):
    ps = load_phases(config, "even", default_margin(config.alpha))
    print(f"  fig8: {len(config.gamma_grid)} γ points, pre-OAA, degree {ps.degree}", flush=True)

    def one(gamma):
        return gad.cancellation_point(config.p, gamma, config.alpha, ps,
                                      config.states, config.observables)

    rows = [r for chunk in sweep(one, config.gamma_grid, config.workers) for r in chunk]
    summed = max(r["abs_error"] for r in rows)
    mean_term = sum(r["mean_term_error"] for r in rows) / len(rows)
    ratio = mean_term / max(summed, 1e-300)
    checks = [
        Check("max_summed_error", summed, SUMMED_THRESHOLD),
        Check("term_to_summed_ratio", ratio, CANCELLATION_RATIO, ">="),
    ]
    fields = ESTIMATE_FIELDS + ["mean_term_error"]
    return finish(config, {"fig8": (fields, rows)}, checks, {"mean_term_error": mean_term})
