"""
tudsim — estimation.py
Shot-based estimators of ⟨ψ|A†OA|ψ⟩ and the accounting around them.

Every measurement is drawn from exactly computed outcome probabilities: a ±1 outcome
with P(+1) = (1 + μ)/2 for a Hadamard-type term of mean μ, Bernoulli(p) for a
post-selection. Passing shots=math.inf evaluates the estimator exactly.

For a decomposition A = Σ c_j P_j the estimate is assembled from
    direct terms  |c_j|² Re⟨P_jψ|O|P_jψ⟩
    cross terms   2|c_j c_k| Re(e^{iθ} ⟨P_jψ|O|P_kψ⟩),  θ = arg(c̄_j c_k)
with shots split in proportion to the term weights.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from tudsim.encodings import BlockEncoding
from tudsim.numerics import (
    as_square, as_state, hermitian_residual, op_norm, rng_from, svd, unitarity_residual,
)
from tudsim.tud import QueryLedger, UnitaryDecomposition, oracle_hermitian

BETA = 0.05


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class RngStream:
    """Independent, reproducible generator per (seed, stream)."""
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class EstimatorReport:
    estimate: float
    predicted_variance: float
    empirical_variance: float
    shots: float
    allocations: tuple = ()
    oracle_calls: QueryLedger = QueryLedger()
    confidence_failures: int = 0
    observable_scale: float = 1.0
    exact: float = math.nan

    def to_dict(self) -> dict:
        return {
            "estimate":            self.estimate,
            "exact":               self.exact,
            "predicted_variance":  self.predicted_variance,
            "empirical_variance":  self.empirical_variance,
            "shots":               "inf" if math.isinf(self.shots) else int(self.shots),
            "allocations":         list(self.allocations),
            "oracle_calls":        self.oracle_calls.to_dict(),
            "confidence_failures": self.confidence_failures,
            "observable_scale":    self.observable_scale,
        }


@dataclass(frozen=True)
class Term:
    weight: float
    mean: float
    label: str
    uses: tuple   # indices of the decomposition parts the circuit calls


@dataclass(frozen=True)
class RunBudget:
    per_operator: tuple
    total: float
    confidence_runs: tuple
    beta: float


@dataclass(frozen=True)
class TermErrors:
    summed_error: float
    mean_term_error: float
    term_errors: tuple


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng_from(rng)


def _shot_count(shots):
    if isinstance(shots, float) and math.isinf(shots):
        return math.inf
    n = int(shots)
    if n < 1:
        raise EstimatorError(f"shots must be >= 1, got {shots}")
    return n


def hoeffding_radius(shots: int, beta: float = BETA) -> float:
    """Half-width of the (1−β) interval for the mean of ±1 outcomes."""
    return math.sqrt(2.0 * math.log(2.0 / beta) / shots)


def allocate_shots(weights, shots: int) -> tuple:
    """Largest-remainder split of shots proportional to |weights|."""
    w = np.abs(np.asarray(weights, dtype=float))
    if w.sum() <= 0:
        raise EstimatorError("all term weights are zero")
    raw = shots * w / w.sum()
    base = np.floor(raw).astype(int)
    order = np.argsort(-(raw - base), kind="stable")
    base[order[: shots - int(base.sum())]] += 1
    return tuple(int(b) for b in base)


def _pm1_sample(mean: float, shots: int, rng) -> tuple[float, float]:
    """Sample mean and per-shot variance of ±1 outcomes with E = mean."""
    p_plus = min(1.0, max(0.0, (1.0 + mean) / 2.0))
    k = rng.binomial(shots, p_plus)
    m = (2.0 * k - shots) / shots
    return m, 1.0 - m * m


def _observable(O) -> tuple[np.ndarray, float]:
    O = as_square(O)
    res = hermitian_residual(O)
    if res > 1e-10:
        raise EstimatorError(f"observable is not Hermitian (residual {res:.2e})")
    scale = max(1.0, op_norm(O))
    return O / scale, scale


def split_observable(O) -> tuple[np.ndarray, float]:
    """O = scale·(U_O + U_O†)/2 with U_O = Σ(λ + i√(1−λ²))|λ⟩⟨λ| on O/scale."""
    Os, scale = _observable(O)
    return oracle_hermitian(Os), scale


# ── Single circuits ───────────────────────────────────────────────────────────

def hadamard_test(U, psi, shots, rng=None, imaginary_part: bool = False,
                  beta: float = BETA) -> EstimatorReport:
    U = as_square(U)
    res = unitarity_residual(U)
    if res > 1e-8:
        raise EstimatorError(f"Hadamard test needs a unitary (residual {res:.2e})")
    v = as_state(psi)
    z = np.vdot(v, U @ v)
    mu = float(z.imag if imaginary_part else z.real)
    n = _shot_count(shots)
    if math.isinf(n):
        return EstimatorReport(mu, 0.0, 0.0, n, exact=mu)
    m, var = _pm1_sample(mu, n, _generator(rng))
    failures = int(abs(m - mu) > hoeffding_radius(n, beta))
    return EstimatorReport(m, (1.0 - mu * mu) / n, var / n, n, (n,),
                           QueryLedger(calls_U_A=n, calls_state_prep=n), failures, 1.0, mu)


def block_postselect_estimator(encA: BlockEncoding, encO: BlockEncoding, psi, shots,
                               rng=None, beta: float = BETA) -> EstimatorReport:
    """
    X = Y·Z: Y ~ Bernoulli(p) flags post-selection success on the encoding of A,
    Z = ±1 the Hadamard test of U_O on the conditioned state. E[X] = ⟨A†OA⟩ up to the
    normalizations α_A² α_O, which are multiplied back in.
    """
    if encA.system_dim != encO.system_dim:
        raise EstimatorError("encodings act on different system dimensions")
    Ob = encO.block
    if hermitian_residual(Ob) > 1e-10:
        raise EstimatorError("encoded observable is not Hermitian")
    v = as_state(psi)
    phi = encA.block @ v
    p = float(np.vdot(phi, phi).real)
    exact_x = float(np.vdot(phi, Ob @ phi).real)       # E[X] in encoded units
    scale = encA.alpha ** 2 * encO.alpha
    n = _shot_count(shots)
    if math.isinf(n):
        return EstimatorReport(scale * exact_x, 0.0, 0.0, n, observable_scale=encO.alpha,
                               exact=scale * exact_x)

    gen = _generator(rng)
    n_succ = int(gen.binomial(n, min(1.0, p)))
    mu_c = exact_x / p if p > 0 else 0.0
    n_plus = int(gen.binomial(n_succ, min(1.0, max(0.0, (1.0 + mu_c) / 2.0)))) if n_succ else 0
    mean = (2.0 * n_plus - n_succ) / n
    second = n_succ / n
    predicted = (p - exact_x ** 2) / n
    empirical = max(0.0, second - mean * mean) / n
    failures = int(abs(mean - exact_x) > hoeffding_radius(n, beta))
    ledger = QueryLedger(calls_U_A=n, calls_state_prep=n)
    return EstimatorReport(scale * mean, scale ** 2 * predicted, scale ** 2 * empirical, n,
                           (n_succ, n - n_succ), ledger, failures, encO.alpha, scale * exact_x)


# ── Decomposition estimators ──────────────────────────────────────────────────

def decomposition_terms(parts, O, psi, split: bool = False) -> tuple[list, float]:
    """Weighted ±1 terms of ⟨ψ|A†OA|ψ⟩ for A = Σ c_j P_j, and the observable scale."""
    v = as_state(psi)
    Os, scale = _observable(O)
    if split:
        UO = oracle_hermitian(Os)
        mats = ((UO, "U_O", 0.5), (UO.conj().T, "U_O†", 0.5))
    else:
        mats = ((Os, "O", 1.0),)
    coeffs = [complex(c) for c, _ in parts]
    phis = [np.asarray(P) @ v for _, P in parts]

    terms = []
    for j in range(len(parts)):
        for k in range(j, len(parts)):
            if j == k:
                w, phase = abs(coeffs[j]) ** 2, 1.0
            else:
                w = 2.0 * abs(coeffs[j] * coeffs[k])
                phase = np.exp(1j * np.angle(np.conj(coeffs[j]) * coeffs[k]))
            if w == 0:
                continue
            uses = (j,) if j == k else (j, k)
            for M, name, share in mats:
                mean = float((phase * np.vdot(phis[j], M @ phis[k])).real)
                terms.append(Term(share * w, mean, f"{name}[{j},{k}]", uses))
    return terms, scale


def exact_value(parts, O, psi) -> float:
    terms, scale = decomposition_terms(parts, O, psi)
    return scale * sum(t.weight * t.mean for t in terms)


def _run_terms(terms, scale, shots, rng, ledgers, beta) -> EstimatorReport:
    exact = scale * sum(t.weight * t.mean for t in terms)
    n = _shot_count(shots)
    if math.isinf(n):
        return EstimatorReport(exact, 0.0, 0.0, n, observable_scale=scale, exact=exact)

    alloc = allocate_shots([t.weight for t in terms], n)
    if any(a == 0 for a in alloc):
        raise EstimatorError(f"{n} shots leave some of the {len(terms)} terms unsampled")
    gen = _generator(rng)
    est = pred = emp = 0.0
    failures = 0
    ledger = QueryLedger()
    for t, nt in zip(terms, alloc):
        m, var = _pm1_sample(t.mean, nt, gen)
        mu = min(1.0, abs(t.mean))
        est += t.weight * m
        pred += t.weight ** 2 * (1.0 - mu * mu) / nt
        emp += t.weight ** 2 * var / nt
        failures += int(abs(m - t.mean) > hoeffding_radius(nt, beta))
        for j in t.uses:
            if j < len(ledgers):
                ledger = ledger + ledgers[j].scaled(nt)
    ledger = dataclasses.replace(ledger, calls_state_prep=n)
    return EstimatorReport(scale * est, scale ** 2 * pred, scale ** 2 * emp, n, alloc,
                           ledger, failures, scale, exact)


def tud_estimator(dec: UnitaryDecomposition, O, psi, shots, rng=None,
                  split_observable: bool = False, beta: float = BETA) -> EstimatorReport:
    """Two-unitary estimator: weights ¼, ¼, ½ for (½, Ũ1), (½, Ũ2)."""
    if len(dec.parts) != 2:
        raise EstimatorError(f"tud_estimator needs 2 parts, got {len(dec.parts)}")
    terms, scale = decomposition_terms(dec.parts, O, psi, split_observable)
    return _run_terms(terms, scale, shots, rng, dec.ledgers, beta)


def fud_estimator(dec: UnitaryDecomposition, O, psi, shots, rng=None,
                  split_observable: bool = False, beta: float = BETA) -> EstimatorReport:
    """Four-unitary estimator over the ten direct and cross terms."""
    if len(dec.parts) != 4:
        raise EstimatorError(f"fud_estimator needs 4 parts, got {len(dec.parts)}")
    terms, scale = decomposition_terms(dec.parts, O, psi, split_observable)
    return _run_terms(terms, scale, shots, rng, dec.ledgers, beta)


# ── Accounting ────────────────────────────────────────────────────────────────

def expected_runs(probabilities, amplitude_amplified: bool = False,
                  beta: float = BETA) -> RunBudget:
    """
    Expected repetitions until success per operator, 1/p_k (1/√p_k with amplitude
    amplification), and the runs needed to succeed with probability 1 − β.
    """
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    if np.any(p <= 0):
        raise EstimatorError("success probabilities must be positive")
    if np.any(p > 1) or p.sum() > 1 + 1e-10:
        raise EstimatorError("success probabilities must lie in (0, 1] and sum to at most 1")
    cost = np.sqrt(p) if amplitude_amplified else p
    per = 1.0 / cost
    confidence = tuple(int(math.ceil(math.log(1.0 / beta) / c)) for c in cost)
    return RunBudget(tuple(float(x) for x in per), float(per.sum()), confidence, beta)


def retry_simulate(p: float, trials: int, rng=None) -> float:
    """Mean number of attempts until the first success (geometric model)."""
    if not 0 < p <= 1:
        raise EstimatorError(f"success probability must lie in (0, 1], got {p}")
    return float(_generator(rng).geometric(p, size=trials).mean())


def term_errors(approx: UnitaryDecomposition, ideal: UnitaryDecomposition, O, psi,
                target: float | None = None) -> TermErrors:
    """
    Per-term |w·μ − w′·μ′| between two decompositions of the same shape, and the
    error of the assembled approximate estimate against target (default: the ideal sum).
    """
    if len(approx.parts) != len(ideal.parts):
        raise EstimatorError("decompositions have different part counts")
    ta, scale = decomposition_terms(approx.parts, O, psi)
    ti, _ = decomposition_terms(ideal.parts, O, psi)
    if len(ta) != len(ti):
        raise EstimatorError("decompositions produce different term sets")
    per = tuple(scale * abs(a.weight * a.mean - b.weight * b.mean) for a, b in zip(ta, ti))
    total = scale * sum(t.weight * t.mean for t in ta)
    if target is None:
        target = scale * sum(t.weight * t.mean for t in ti)
    return TermErrors(abs(total - target), float(np.mean(per)), per)


def error_budget_check(A, O, psi=None, eps: float = 0.0, h: float = 0.0, seed=0,
                       decomposition: UnitaryDecomposition | None = None) -> tuple[float, float]:
    """
    |⟨A†OA⟩ − estimate| against the bound 2(ε + h)·max(1, ‖O‖).

    Without a decomposition the perturbed pipeline is built directly: Ã shifts every
    singular value down by h (clamped at 0) and the parts are Ã ± i√(I−Ã†Ã) − εÃ.
    """
    if eps < 0 or h < 0:
        raise EstimatorError("eps and h must be non-negative")
    A = as_square(A)
    if psi is None:
        gen = _generator(seed)
        g = gen.standard_normal(A.shape[0]) + 1j * gen.standard_normal(A.shape[0])
        psi = g / np.linalg.norm(g)
    v = as_state(psi)
    Av = A @ v
    exact = float(np.vdot(Av, as_square(O) @ Av).real)

    if decomposition is None:
        res = svd(A)
        s = np.clip(res.sigma - h, 0.0, 1.0)
        Vh = res.V.conj().T
        At = (res.W * s) @ Vh
        F = (res.W * np.sqrt(1.0 - s * s)) @ Vh
        parts = ((0.5, At + 1j * F - eps * At), (0.5, At - 1j * F - eps * At))
    else:
        parts = decomposition.parts
    lhs = abs(exact - exact_value(parts, O, v))
    bound = 2.0 * (eps + h) * max(1.0, op_norm(O))
    return lhs, bound
