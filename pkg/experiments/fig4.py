"""
tudsim — experiments/fig4.py
Hermitian path with the even √(1−x²) polynomial: scalar error on the
scaled domain |x| ≤ 1/α, then ‖U′ − Ũ′‖ for random 2x2 Hermitian matrices rescaled by α.
"""

import numpy as np

from experiments.common import Check, ExperimentConfig, finish, load_phases, sweep
from tudsim.estimation import RngStream
from tudsim.numerics import random_unitary
from tudsim.qsp import TargetFunction, qsp_response
from tudsim.tud import default_margin, encode_hermitian, run_fud_hermitian

ERROR_THRESHOLD = 2e-2
HALF_THRESHOLD  = 1e-2
REGION = 0.9
HALF_REGION = 0.5


def run(config: ExperimentConfig):
    alpha = config.alpha
    ps = load_phases(config, "even", default_margin(alpha))
    target = TargetFunction.even_sqrt()

    xs = np.linspace(-1.0, 1.0, 1001)
    resp = qsp_response(ps, xs).real
    ref = target(xs)
    poly_rows = [{"x": x, "target": t, "response": r, "abs_error": abs(r - t)}
                 for x, t, r in zip(xs, ref, resp)]
    # H/α only reaches |x| <= 1/α
    region = min(REGION, 1.0 / alpha)
    abs_err = np.abs(resp - ref)
    poly_error = float(np.max(abs_err[np.abs(xs) <= region]))
    half_error = float(np.max(abs_err[np.abs(xs) <= HALF_REGION]))

    print(f"  fig4: {config.samples} Hermitian matrices, alpha {alpha}, degree {ps.degree}",
          flush=True)

    def one(i):
        gen = RngStream(config.seed, i).generator()
        lam = gen.uniform(-1.0, 1.0, size=2)
        V = random_unitary(2, gen)
        H = (V * lam) @ V.conj().T
        H = (H + H.conj().T) / 2
        dec = run_fud_hermitian(encode_hermitian(H, alpha), alpha, phases=ps)
        return {"sample": i, "lambda_min": float(lam.min()), "lambda_max": float(lam.max()),
                "scaled_max": float(np.abs(lam).max() / alpha),
                "error_plus": dec.errors[0], "error_minus": dec.errors[1],
                "success": min(dec.success_probabilities)}

    rows = sweep(one, range(config.samples), config.workers)
    rows.sort(key=lambda r: (r["scaled_max"], r["sample"]))

    in_region = [max(r["error_plus"], r["error_minus"]) for r in rows if r["scaled_max"] <= region]
    checks = [
        Check("poly_max_error", poly_error, ERROR_THRESHOLD),
        Check("poly_max_error_half", half_error, HALF_THRESHOLD),
        Check("max_error_in_region", max(in_region, default=0.0), ERROR_THRESHOLD),
    ]
    return finish(config, {
        "fig4_poly": (["x", "target", "response", "abs_error"], poly_rows),
        "fig4":      (["sample", "lambda_min", "lambda_max", "scaled_max",
                       "error_plus", "error_minus", "success"], rows),
    }, checks, {"phase_degree": ps.degree, "region": region})
