"""
tests/test_estimation.py
Unit tests for tudsim.estimation: shot allocation, Hadamard and post-selection
estimators, decomposition estimators, run accounting, term errors and the
variance calibration of every estimator against its closed-form prediction.
Runs with: python3 -m pytest tests/ -v
        or: python3 -m unittest discover tests/
"""
import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from tudsim.channels import exact_expectation, gad_channel, named_state
from tudsim.encodings import sznagy_encode
from tudsim.estimation import (
    BETA, EstimatorError, RngStream, allocate_shots, block_postselect_estimator,
    decomposition_terms, error_budget_check, exact_value, expected_runs, fud_estimator,
    hadamard_test, hoeffding_radius, retry_simulate, split_observable, term_errors,
    tud_estimator,
)
from tudsim.numerics import PAULI, random_contraction_with_spectrum, random_unitary
from tudsim.tud import oracle_tud_svd, run_fud

P_THERMAL = 0.982


def _gad_ops(gamma=0.4):
    return gad_channel(P_THERMAL, gamma).operators


def _sznagy_fud(A):
    return run_fud(A, 1.61, method="sznagy")


# ── Helpers ───────────────────────────────────────────────────────────────────

class TestShotHelpers(unittest.TestCase):

    def test_allocation_sums_and_proportions(self):
        alloc = allocate_shots([0.25, 0.25, 0.5], 10)
        self.assertEqual(sum(alloc), 10)
        self.assertEqual(alloc[2], 5)

    def test_allocation_largest_remainder(self):
        self.assertEqual(allocate_shots([1, 1, 1], 10), (4, 3, 3))

    def test_allocation_zero_weights(self):
        with self.assertRaises(EstimatorError):
            allocate_shots([0.0, 0.0], 10)

    def test_hoeffding_radius(self):
        self.assertAlmostEqual(hoeffding_radius(100, 0.05),
                               math.sqrt(2 * math.log(40) / 100), places=14)

    def test_rng_streams_independent_and_reproducible(self):
        a = RngStream(3, 0).generator().random(4)
        b = RngStream(3, 1).generator().random(4)
        self.assertFalse(np.allclose(a, b))
        np.testing.assert_array_equal(a, RngStream(3, 0).generator().random(4))

    def test_split_observable(self):
        UO, scale = split_observable(2.0 * PAULI["Z"])
        self.assertAlmostEqual(scale, 2.0, places=12)
        np.testing.assert_allclose((UO + UO.conj().T) / 2 * scale, 2.0 * PAULI["Z"], atol=1e-12)


# ── Single circuits ───────────────────────────────────────────────────────────

class TestHadamardTest(unittest.TestCase):

    def test_infinite_shots_exact(self):
        U = random_unitary(2, seed=1)
        psi = named_state("+y")
        rep = hadamard_test(U, psi, math.inf)
        self.assertAlmostEqual(rep.estimate, np.vdot(psi, U @ psi).real, places=14)
        rep = hadamard_test(U, psi, math.inf, imaginary_part=True)
        self.assertAlmostEqual(rep.estimate, np.vdot(psi, U @ psi).imag, places=14)

    def test_finite_shots_within_five_sigma(self):
        U = random_unitary(2, seed=2)
        psi = named_state("+x")
        rep = hadamard_test(U, psi, 40_000, RngStream(0))
        self.assertLessEqual(abs(rep.estimate - rep.exact), 5 * math.sqrt(rep.predicted_variance))
        self.assertEqual(rep.oracle_calls.calls_U_A, 40_000)

    def test_needs_unitary(self):
        with self.assertRaises(EstimatorError):
            hadamard_test(0.5 * np.eye(2), named_state("0"), 10)

    def test_shots_positive(self):
        with self.assertRaises(EstimatorError):
            hadamard_test(np.eye(2), named_state("0"), 0)


class TestBlockPostselect(unittest.TestCase):

    def test_infinite_shots_exact(self):
        A = math.sqrt(P_THERMAL * 0.4) * np.array([[0, 1], [0, 0]])
        rep = block_postselect_estimator(sznagy_encode(A), sznagy_encode(PAULI["Z"]),
                                         named_state("1"), math.inf)
        self.assertAlmostEqual(rep.estimate, P_THERMAL * 0.4, places=12)

    def test_matches_channel_expectation(self):
        ch = gad_channel(P_THERMAL, 0.3)
        for name in ("X", "Y", "Z"):
            with self.subTest(observable=name):
                total = sum(block_postselect_estimator(sznagy_encode(A), sznagy_encode(PAULI[name]),
                                                       named_state("+x"), math.inf).estimate
                            for A in ch.operators)
                self.assertAlmostEqual(total, exact_expectation(ch, named_state("+x"), PAULI[name]),
                                       places=12)

    def test_finite_shots_within_five_sigma(self):
        A = _gad_ops()[0]
        rep = block_postselect_estimator(sznagy_encode(A), sznagy_encode(PAULI["X"]),
                                         named_state("+x"), 400_000, RngStream(4))
        self.assertLessEqual(abs(rep.estimate - rep.exact), 5 * math.sqrt(rep.predicted_variance))
        self.assertEqual(sum(rep.allocations), 400_000)


# ── Decomposition estimators ──────────────────────────────────────────────────

class TestDecompositionEstimators(unittest.TestCase):

    def test_fud_sums_to_channel_expectation(self):
        ch = gad_channel(P_THERMAL, 0.6)
        for state in ("1", "+x", "+y"):
            for name in ("X", "Y", "Z"):
                with self.subTest(state=state, observable=name):
                    psi = named_state(state)
                    total = sum(fud_estimator(_sznagy_fud(A), PAULI[name], psi, math.inf).estimate
                                for A in ch.operators)
                    self.assertAlmostEqual(total, exact_expectation(ch, psi, PAULI[name]),
                                           places=12)

    def test_split_observable_same_value(self):
        dec = _sznagy_fud(_gad_ops()[1])
        psi = named_state("1")
        plain = fud_estimator(dec, PAULI["Z"], psi, math.inf).estimate
        split = fud_estimator(dec, PAULI["Z"], psi, math.inf, split_observable=True).estimate
        self.assertAlmostEqual(plain, split, places=12)

    def test_tud_estimator_on_oracle(self):
        A = random_contraction_with_spectrum([0.7, 0.2], seed=5)
        psi = named_state("+x")
        rep = tud_estimator(oracle_tud_svd(A), PAULI["Z"], psi, math.inf)
        v = A @ psi
        self.assertAlmostEqual(rep.estimate, np.vdot(v, PAULI["Z"] @ v).real, places=12)

    def test_part_count_checked(self):
        dec = oracle_tud_svd(np.eye(2) / 2)
        with self.assertRaises(EstimatorError):
            fud_estimator(dec, PAULI["Z"], named_state("0"), math.inf)
        with self.assertRaises(EstimatorError):
            tud_estimator(_sznagy_fud(np.eye(2) / 2), PAULI["Z"], named_state("0"), math.inf)

    def test_finite_shots_ledger_and_allocation(self):
        dec = _sznagy_fud(_gad_ops()[0])
        rep = fud_estimator(dec, PAULI["Z"], named_state("+x"), 10_000, RngStream(6))
        self.assertEqual(len(rep.allocations), 10)
        self.assertEqual(sum(rep.allocations), 10_000)
        self.assertEqual(rep.oracle_calls.calls_state_prep, 10_000)
        self.assertGreater(rep.oracle_calls.encoding_calls, 0)
        self.assertLessEqual(abs(rep.estimate - rep.exact), 5 * math.sqrt(rep.predicted_variance))

    def test_too_few_shots(self):
        dec = _sznagy_fud(_gad_ops()[0])
        with self.assertRaises(EstimatorError):
            fud_estimator(dec, PAULI["Z"], named_state("+x"), 5, RngStream(0))

    def test_non_hermitian_observable(self):
        dec = _sznagy_fud(_gad_ops()[0])
        with self.assertRaises(EstimatorError):
            fud_estimator(dec, np.array([[0, 1], [0, 0]]), named_state("0"), math.inf)

    def test_report_json_fields(self):
        dec = _sznagy_fud(_gad_ops()[0])
        d = fud_estimator(dec, PAULI["X"], named_state("+x"), 1000, RngStream(7)).to_dict()
        self.assertEqual(d["shots"], 1000)
        self.assertIn("encoding_calls", d["oracle_calls"])
        self.assertEqual(fud_estimator(dec, PAULI["X"], named_state("+x"), math.inf)
                         .to_dict()["shots"], "inf")


# ── Accounting ────────────────────────────────────────────────────────────────

class TestRunAccounting(unittest.TestCase):

    def test_uniform_probabilities(self):
        for m in (2, 4, 8):
            with self.subTest(m=m):
                plain = expected_runs([1.0 / m] * m)
                amplified = expected_runs([1.0 / m] * m, amplitude_amplified=True)
                self.assertAlmostEqual(plain.total, m ** 2, places=9)
                self.assertAlmostEqual(amplified.total, m ** 1.5, places=9)

    def test_confidence_runs(self):
        budget = expected_runs([0.5])
        self.assertEqual(budget.confidence_runs, (math.ceil(math.log(1 / BETA) / 0.5),))

    def test_probabilities_validated(self):
        with self.assertRaises(EstimatorError):
            expected_runs([0.0, 0.5])
        with self.assertRaises(EstimatorError):
            expected_runs([0.7, 0.6])

    def test_retry_simulation(self):
        mean = retry_simulate(0.018, 10_000, RngStream(8))
        self.assertGreaterEqual(mean, 52.8)
        self.assertLessEqual(mean, 58.3)

    def test_retry_probability_range(self):
        with self.assertRaises(EstimatorError):
            retry_simulate(0.0, 10)


class TestTermErrors(unittest.TestCase):

    def test_identical_decompositions(self):
        dec = _sznagy_fud(_gad_ops()[1])
        te = term_errors(dec, dec, PAULI["Z"], named_state("1"))
        self.assertEqual(te.summed_error, 0.0)
        self.assertEqual(len(te.term_errors), 10)

    def test_shape_mismatch(self):
        with self.assertRaises(EstimatorError):
            term_errors(oracle_tud_svd(np.eye(2) / 2), _sznagy_fud(np.eye(2) / 2),
                        PAULI["Z"], named_state("0"))

    def test_error_budget_bound(self):
        A = random_contraction_with_spectrum([0.8, 0.3], seed=9)
        for eps, h in ((0.0, 0.0), (1e-2, 0.0), (0.0, 5e-2), (1e-2, 1e-2)):
            with self.subTest(eps=eps, h=h):
                lhs, bound = error_budget_check(A, PAULI["X"], eps=eps, h=h, seed=1)
                self.assertLessEqual(lhs, bound + 1e-12)

    def test_error_budget_exact_decomposition(self):
        A = _gad_ops()[2]
        lhs, bound = error_budget_check(A, PAULI["Z"], named_state("+y"),
                                        decomposition=_sznagy_fud(A))
        self.assertEqual(bound, 0.0)
        self.assertLessEqual(lhs, 1e-12)

    def test_exact_value_of_oracle(self):
        A = _gad_ops()[3]
        psi = named_state("+x")
        v = A @ psi
        self.assertAlmostEqual(exact_value(oracle_tud_svd(A).parts, PAULI["X"], psi),
                               np.vdot(v, PAULI["X"] @ v).real, places=12)


# ── Variance calibration ──────────────────────────────────────────────────────

class TestVarianceCalibration(unittest.TestCase):
    """Spread over repeated runs against the predicted variance, 2000 x 10^4 shots."""

    REPS = 2000
    SHOTS = 10_000

    def _ratio(self, run):
        reports = [run(RngStream(11, i)) for i in range(self.REPS)]
        estimates = np.array([r.estimate for r in reports])
        return float(np.var(estimates, ddof=1) / reports[0].predicted_variance)

    def test_hadamard(self):
        U = random_unitary(2, seed=12)
        ratio = self._ratio(lambda rng: hadamard_test(U, named_state("+x"), self.SHOTS, rng))
        self.assertGreaterEqual(ratio, 0.8)
        self.assertLessEqual(ratio, 1.25)

    def test_block_postselect(self):
        encA = sznagy_encode(_gad_ops()[0])
        encO = sznagy_encode(PAULI["X"])
        ratio = self._ratio(lambda rng: block_postselect_estimator(
            encA, encO, named_state("+x"), self.SHOTS, rng))
        self.assertGreaterEqual(ratio, 0.8)
        self.assertLessEqual(ratio, 1.25)

    def test_four_unitary(self):
        dec = _sznagy_fud(_gad_ops()[1])
        ratio = self._ratio(lambda rng: fud_estimator(dec, PAULI["Z"], named_state("+x"),
                                                      self.SHOTS, rng))
        self.assertGreaterEqual(ratio, 0.8)
        self.assertLessEqual(ratio, 1.25)

    def test_two_unitary(self):
        dec = oracle_tud_svd(_gad_ops()[2])
        ratio = self._ratio(lambda rng: tud_estimator(dec, PAULI["X"], named_state("+y"),
                                                      self.SHOTS, rng))
        self.assertGreaterEqual(ratio, 0.8)
        self.assertLessEqual(ratio, 1.25)

    def test_doubling_shots_halves_empirical_variance(self):
        dec = oracle_tud_svd(random_contraction_with_spectrum([0.8, 0.35], seed=13))
        psi = named_state("+x")

        def spread(shots):
            return np.var([tud_estimator(dec, PAULI["Z"], psi, shots, RngStream(21, i)).estimate
                           for i in range(self.REPS)], ddof=1)

        ratio = float(spread(self.SHOTS // 2) / spread(self.SHOTS))
        self.assertGreaterEqual(ratio, 1.6)
        self.assertLessEqual(ratio, 2.5)

    def test_finite_shot_estimate_inside_hoeffding_radius(self):
        beta = 1e-3
        ch = gad_channel(P_THERMAL, 0.45)
        psi = named_state("+x")
        exact = exact_expectation(ch, psi, PAULI["Y"])
        for seed in range(20):
            with self.subTest(seed=seed):
                total = radius = 0.0
                for k, A in enumerate(ch.operators):
                    dec = oracle_tud_svd(A)
                    rep = tud_estimator(dec, PAULI["Y"], psi, self.SHOTS,
                                        RngStream(seed, k), beta=beta)
                    terms, scale = decomposition_terms(dec.parts, PAULI["Y"], psi)
                    total += rep.estimate
                    radius += scale * sum(abs(t.weight) * hoeffding_radius(n, beta)
                                          for t, n in zip(terms, rep.allocations))
                self.assertLessEqual(abs(total - exact), radius)


if __name__ == "__main__":
    unittest.main(verbosity=2)
