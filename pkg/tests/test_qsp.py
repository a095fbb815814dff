"""
tests/test_qsp.py
Unit tests for tudsim.qsp: targets, Chebyshev approximation, scalar responses,
the Wx -> R conversion, the phase solver, degree selection and matrix QSVT.
Fixture tests read fixtures/angles_odd51.json and fixtures/angles_even30.json.
Runs with: python3 -m pytest tests/ -v
        or: python3 -m unittest discover tests/
"""
import json
import math
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev as C

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO))
from tudsim.encodings import BlockEncoding, EncodingError, sznagy_encode
from tudsim.numerics import op_norm, random_unitary, svd
from tudsim.qsp import (
    BOUND, ChebyshevPoly, ConventionError, ParityError, PhaseSequence, PhaseSolveError,
    TargetFunction, approx_target, convert_wx_to_r, degree_scaling_fit, load_angles,
    design_phases, minimal_degree, qsp_response, qsp_response_scalar, qsvt_apply, solve_phases,
)

FIXTURES = REPO / "fixtures"


def _odd51() -> PhaseSequence:
    return load_angles(FIXTURES / "angles_odd51.json")


def _even30() -> PhaseSequence:
    return load_angles(FIXTURES / "angles_even30.json")


# ── Targets and approximation ─────────────────────────────────────────────────

class TestTargetFunction(unittest.TestCase):

    def test_odd_sign_sqrt(self):
        f = TargetFunction.odd_sign_sqrt()
        self.assertEqual(f.parity, "odd")
        self.assertAlmostEqual(float(f(0.6)), 0.8, places=14)
        self.assertAlmostEqual(float(f(-0.6)), -0.8, places=14)

    def test_even_sqrt(self):
        f = TargetFunction.even_sqrt()
        self.assertEqual(f.parity, "even")
        self.assertAlmostEqual(float(f(-0.6)), 0.8, places=14)

    def test_custom_extends_by_parity(self):
        f = TargetFunction.custom([0.0, 1.0], [0.0, 0.5], "odd")
        self.assertAlmostEqual(float(f(-0.5)), -0.25, places=14)

    def test_custom_needs_parity(self):
        with self.assertRaises(ParityError):
            TargetFunction.custom([0.5], [0.1], "none")

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            TargetFunction("sine")


class TestApproxTarget(unittest.TestCase):

    def test_parity_mismatch(self):
        with self.assertRaises(ParityError):
            approx_target(TargetFunction.odd_sign_sqrt(), 20)
        with self.assertRaises(ParityError):
            approx_target(TargetFunction.even_sqrt(), 21)

    def test_wrong_parity_coefficients_zero(self):
        poly = approx_target(TargetFunction.odd_sign_sqrt(), 21)
        np.testing.assert_array_equal(poly.coeffs[0::2], 0.0)
        self.assertEqual(poly.parity, "odd")
        self.assertEqual(poly.degree, 21)

    def test_bound_respected(self):
        for method in ("minimax", "projection"):
            with self.subTest(method=method):
                poly = approx_target(TargetFunction.even_sqrt(), 20, scale=1.0, method=method)
                self.assertLessEqual(poly.max_abs(), BOUND + 1e-12)

    def test_error_non_increasing_in_degree(self):
        f = TargetFunction.odd_sign_sqrt()
        e11 = approx_target(f, 11, scale=1.0).approx_error
        e41 = approx_target(f, 41, scale=1.0).approx_error
        self.assertLessEqual(e41, e11 + 1e-9)

    def test_scale_recorded(self):
        poly = approx_target(TargetFunction.even_sqrt(), 10, scale=0.9)
        self.assertEqual(poly.scale, 0.9)
        self.assertTrue(math.isfinite(poly.approx_error))

    def test_argument_ranges(self):
        f = TargetFunction.even_sqrt()
        with self.assertRaises(ValueError):
            approx_target(f, 10, scale=1.5)
        with self.assertRaises(ValueError):
            approx_target(f, 10, margin=0.5)
        with self.assertRaises(ValueError):
            approx_target(f, 10, method="remez")


# ── Scalar responses ──────────────────────────────────────────────────────────

class TestResponse(unittest.TestCase):

    def test_zero_phases_give_chebyshev(self):
        xs = np.linspace(-1, 1, 41)
        for n in (1, 2, 5, 8):
            with self.subTest(degree=n):
                ps = PhaseSequence((0.0,) * (n + 1))
                T = np.zeros(n + 1)
                T[n] = 1.0
                np.testing.assert_allclose(qsp_response(ps, xs), C.chebval(xs, T), atol=1e-12)

    def test_signal_out_of_range(self):
        with self.assertRaises(ValueError):
            qsp_response(PhaseSequence((0.0, 0.0)), [1.5])

    def test_response_bounded(self):
        rng = np.random.default_rng(2)
        ps = PhaseSequence(tuple(rng.uniform(-math.pi, math.pi, 12)))
        self.assertLessEqual(np.max(np.abs(qsp_response(ps, np.linspace(-1, 1, 101)))),
                             1 + 1e-12)

    def test_conversion_preserves_response(self):
        rng = np.random.default_rng(3)
        xs = np.linspace(-1, 1, 57)
        for n in (1, 4, 7):
            with self.subTest(degree=n):
                wx = PhaseSequence(tuple(rng.uniform(-math.pi, math.pi, n + 1)))
                r = convert_wx_to_r(wx)
                self.assertEqual(r.convention, "R")
                np.testing.assert_allclose(qsp_response(r, xs), qsp_response(wx, xs),
                                           atol=1e-12)

    def test_conversion_degree_zero_is_identity(self):
        wx = PhaseSequence((0.3,))
        r = convert_wx_to_r(wx)
        self.assertEqual(r.angles, (0.3,))
        xs = np.linspace(-1, 1, 11)
        np.testing.assert_allclose(qsp_response(r, xs), qsp_response(wx, xs), atol=1e-15)

    def test_conversion_needs_wx(self):
        r = convert_wx_to_r(PhaseSequence((0.1, 0.2)))
        with self.assertRaises(ConventionError):
            convert_wx_to_r(r)


class TestPhaseSequence(unittest.TestCase):

    def test_parity_from_length(self):
        self.assertEqual(PhaseSequence((0.0,) * 4).parity, "odd")
        self.assertEqual(PhaseSequence((0.0,) * 5).parity, "even")

    def test_declared_parity_checked(self):
        with self.assertRaises(ParityError):
            PhaseSequence((0.0,) * 4, parity="even")

    def test_non_finite_rejected(self):
        with self.assertRaises(ValueError):
            PhaseSequence((0.0, math.inf))

    def test_load_bare_list_and_dict(self):
        with tempfile.TemporaryDirectory() as tmp:
            bare = Path(tmp) / "bare.json"
            bare.write_text(json.dumps([0.1, 0.2, 0.3]))
            self.assertEqual(load_angles(bare).degree, 2)
            saved = Path(tmp) / "saved.json"
            saved.write_text(json.dumps(PhaseSequence((0.1, 0.2), "R").to_dict()))
            self.assertEqual(load_angles(saved).convention, "R")


# ── Fixtures ──────────────────────────────────────────────────────────────────

class TestFixtures(unittest.TestCase):

    def test_odd51_shape(self):
        ps = _odd51()
        self.assertEqual(len(ps.angles), 52)
        self.assertEqual(ps.parity, "odd")

    def test_odd51_fidelity(self):
        ps = convert_wx_to_r(_odd51())
        xs = np.linspace(-1, 1, 1000)
        band = (np.abs(xs) >= 0.12) & (np.abs(xs) <= 0.88)
        err = np.abs(qsp_response(ps, xs).real - TargetFunction.odd_sign_sqrt()(xs))[band]
        self.assertLessEqual(err.max(), 2e-2)

    def test_odd51_edge_ringing_is_damped_by_sigma(self):
        # 2.7e-2 at |x| = 0.1, but the singular-value error σ·|P − f| stays small
        ps = _odd51()
        xs = np.linspace(0.1, 0.9, 801)
        err = np.abs(qsp_response(ps, xs).real - TargetFunction.odd_sign_sqrt()(xs))
        self.assertGreater(err.max(), 2e-2)
        self.assertLessEqual((xs * err).max(), 1.5e-2)

    def test_even30_fidelity(self):
        ps = convert_wx_to_r(_even30())
        self.assertEqual(ps.degree, 30)
        xs = np.linspace(-1 / 1.61, 1 / 1.61, 1000)
        err = np.abs(qsp_response(ps, xs).real - TargetFunction.even_sqrt()(xs))
        self.assertLessEqual(err.max(), 2e-2)
        half = np.abs(xs) <= 0.5
        self.assertLessEqual(err[half].max(), 1e-2)

    def test_odd51_at_half(self):
        ps = _odd51()
        self.assertAlmostEqual(qsp_response_scalar(ps, 0.5).real, math.sqrt(0.75), delta=1e-2)
        self.assertAlmostEqual(qsp_response_scalar(ps, -0.5).real, -math.sqrt(0.75), delta=1e-2)


# ── Solver ────────────────────────────────────────────────────────────────────

class TestSolvePhases(unittest.TestCase):

    def test_matches_polynomial(self):
        poly = approx_target(TargetFunction.odd_sign_sqrt(), 9, scale=0.5, margin=0.2)
        ps = solve_phases(poly)
        self.assertLessEqual(ps.residual, 1e-6)
        self.assertEqual(ps.degree, 9)
        xs = np.linspace(-1, 1, 201)
        np.testing.assert_allclose(qsp_response(ps, xs).real, poly(xs), atol=1e-4)

    def test_phases_symmetric(self):
        poly = approx_target(TargetFunction.even_sqrt(), 8, scale=0.5, margin=0.2)
        angles = np.array(solve_phases(poly).angles)
        np.testing.assert_allclose(angles, angles[::-1])

    def test_chebyshev_gets_zero_phases(self):
        ps = solve_phases(ChebyshevPoly([0, 0, 0, 1.0], "odd", bound=1.0))
        self.assertEqual(ps.angles, (0.0, 0.0, 0.0, 0.0))

    def test_design_is_memoized(self):
        first = design_phases(TargetFunction.even_sqrt(), 8, 0.2, 0.5)
        again = design_phases(TargetFunction.even_sqrt(), 8, 0.2, 0.5)
        self.assertIs(first, again)
        ps, poly = first
        self.assertEqual(ps.degree, poly.degree)

    def test_peak_too_close_to_one(self):
        poly = ChebyshevPoly([0, 0.5, 0, 0.5], "odd", bound=1.0)
        with self.assertRaises(ValueError):
            solve_phases(poly)

    def test_failure_carries_best(self):
        poly = approx_target(TargetFunction.odd_sign_sqrt(), 5, scale=0.5, margin=0.2)
        with self.assertRaises(PhaseSolveError) as ctx:
            solve_phases(poly, tol=-1.0, max_restarts=0)
        self.assertIsNotNone(ctx.exception.best)
        self.assertEqual(ctx.exception.best.degree, 5)
        self.assertTrue(math.isfinite(ctx.exception.residual))


class TestDegreeSelection(unittest.TestCase):

    def test_minimal_degree_parity_and_accuracy(self):
        f = TargetFunction.odd_sign_sqrt()
        n = minimal_degree(f, 0.2, 1e-2)
        self.assertEqual(n % 2, 1)
        self.assertLessEqual(approx_target(f, n, scale=1.0, margin=0.2).approx_error, 1e-2)
        if n > 2:
            self.assertGreater(approx_target(f, n - 2, scale=1.0, margin=0.2).approx_error, 1e-2)

    def test_scaling_fit_exact_data(self):
        margins = [0.1, 0.2, 0.25]
        fit = degree_scaling_fit(margins, [3 / d + 1 for d in margins])
        self.assertAlmostEqual(fit.slope, 3.0, places=9)
        self.assertAlmostEqual(fit.intercept, 1.0, places=9)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=12)


# ── Matrix QSVT ───────────────────────────────────────────────────────────────

class TestQSVT(unittest.TestCase):

    def test_chebyshev_on_singular_values(self):
        ps = convert_wx_to_r(PhaseSequence((0.0,) * 4))
        A = np.diag([0.3, 0.7])
        enc = qsvt_apply(ps, sznagy_encode(A))
        T3 = lambda x: 4 * x ** 3 - 3 * x
        np.testing.assert_allclose(enc.block, np.diag([T3(0.3), T3(0.7)]), atol=1e-10)
        self.assertEqual(enc.num_ancilla, 2)

    def test_odd_fixture_at_half(self):
        ps = convert_wx_to_r(_odd51())
        for x in (0.5, -0.5):
            with self.subTest(x=x):
                enc = qsvt_apply(ps, sznagy_encode(np.array([[x]])))
                self.assertAlmostEqual(enc.block[0, 0].real, math.copysign(math.sqrt(0.75), x),
                                       delta=1e-2)

    def test_odd_fixture_on_matrix(self):
        A = 0.5 * random_unitary(2, seed=12)
        res = svd(A)
        expected = (res.W * math.sqrt(0.75)) @ res.V.conj().T
        enc = qsvt_apply(convert_wx_to_r(_odd51()), sznagy_encode(A))
        self.assertLessEqual(op_norm(enc.block - expected), 2e-2)

    def test_even_fixture_on_hermitian(self):
        H = 0.5 * np.diag([1.0, -1.0])
        enc = qsvt_apply(convert_wx_to_r(_even30()), sznagy_encode(H))
        expected = np.sqrt(np.eye(2) - H @ H)
        self.assertLessEqual(op_norm(enc.block - expected), 2e-2)

    def test_needs_r_convention(self):
        with self.assertRaises(ConventionError):
            qsvt_apply(PhaseSequence((0.0, 0.0)), sznagy_encode(np.eye(2) / 2))

    def test_needs_unit_alpha(self):
        enc = BlockEncoding(sznagy_encode(np.eye(2) / 2).unitary, 2.0, 1)
        with self.assertRaises(EncodingError):
            qsvt_apply(convert_wx_to_r(PhaseSequence((0.0, 0.0))), enc)


if __name__ == "__main__":
    unittest.main(verbosity=2)
