"""
tests/test_encodings.py
Unit tests for tudsim.encodings: Sz.-Nagy dilation, Pauli LCU, Stinespring,
normalization rescaling and ancilla post-selection.
Runs with: python3 -m pytest tests/ -v
        or: python3 -m unittest discover tests/
"""
import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from tudsim.channels import apply_channel, gad_channel, partial_trace_ancilla
from tudsim.encodings import (
    BlockEncoding, EncodingError, apply_and_postselect, lcu_encode, pad_ancilla,
    pauli_decompose, rescale_encoding, stinespring_encode, sznagy_encode,
    verify_block_encoding,
)
from tudsim.numerics import (
    PAULI, op_norm, random_contraction_with_spectrum, random_density_matrix, random_hermitian,
    unitarity_residual,
)


def _contraction(dim=2, seed=0):
    rng = np.random.default_rng(seed)
    return random_contraction_with_spectrum(rng.uniform(0, 1, dim), rng)


class TestBlockEncoding(unittest.TestCase):

    def test_non_unitary_rejected(self):
        with self.assertRaises(EncodingError):
            BlockEncoding(0.5 * np.eye(2), 1.0, 0)

    def test_alpha_positive(self):
        with self.assertRaises(EncodingError):
            BlockEncoding(np.eye(2), 0.0, 0)

    def test_ancilla_divides_dimension(self):
        with self.assertRaises(EncodingError):
            BlockEncoding(np.eye(6), 1.0, 2)

    def test_dict_round_trip(self):
        enc = sznagy_encode(_contraction())
        back = BlockEncoding.from_dict(enc.to_dict())
        np.testing.assert_array_equal(back.unitary, enc.unitary)
        self.assertEqual(back.num_ancilla, 1)


class TestSzNagy(unittest.TestCase):

    def test_encodes_random_contractions(self):
        for dim, seed in ((2, 1), (3, 2), (4, 3)):
            with self.subTest(dim=dim):
                A = _contraction(dim, seed)
                enc = sznagy_encode(A)
                self.assertEqual(enc.unitary.shape, (2 * dim, 2 * dim))
                self.assertLessEqual(unitarity_residual(enc.unitary), 1e-12)
                self.assertLessEqual(verify_block_encoding(enc, A), 1e-12)

    def test_lower_right_block(self):
        A = _contraction(2, 5)
        U = sznagy_encode(A).unitary
        np.testing.assert_allclose(U[2:, 2:], -A.conj().T, atol=1e-15)

    def test_unitary_input(self):
        enc = sznagy_encode(PAULI["Z"])
        self.assertLessEqual(verify_block_encoding(enc, PAULI["Z"]), 1e-12)

    def test_norm_above_one_rejected(self):
        with self.assertRaises(EncodingError):
            sznagy_encode(1.01 * np.eye(2))

    def test_verify_dimension_mismatch(self):
        with self.assertRaises(EncodingError):
            verify_block_encoding(sznagy_encode(np.eye(2) / 2), np.eye(3))


class TestPauliLCU(unittest.TestCase):

    def test_decompose_labels_and_weights(self):
        dec = pauli_decompose(0.3 * PAULI["X"] - 0.4 * PAULI["Z"])
        self.assertEqual(dec.labels, ("X", "Z"))
        np.testing.assert_allclose(dec.coefficients, [0.3, 0.4], atol=1e-15)
        self.assertAlmostEqual(dec.alpha_total, 0.7, places=14)
        np.testing.assert_allclose(dec.reconstruct(), 0.3 * PAULI["X"] - 0.4 * PAULI["Z"],
                                   atol=1e-15)

    def test_two_qubit_reconstruction(self):
        H = random_hermitian(4, seed=6)
        dec = pauli_decompose(H)
        self.assertTrue(all(c >= 0 for c in dec.coefficients))
        self.assertLessEqual(op_norm(dec.reconstruct() - H), 1e-12)

    def test_non_power_of_two(self):
        with self.assertRaises(EncodingError):
            pauli_decompose(np.eye(3))

    def test_lcu_two_terms(self):
        H = 0.3 * PAULI["X"] + 0.4 * PAULI["Z"]
        enc = lcu_encode(pauli_decompose(H))
        self.assertEqual(enc.num_ancilla, 1)
        self.assertAlmostEqual(enc.alpha, 0.7, places=14)
        self.assertLessEqual(verify_block_encoding(enc, H), 1e-12)

    def test_lcu_pads_to_power_of_two(self):
        H = 0.2 * PAULI["X"] + 0.3 * PAULI["Y"] + 0.1 * PAULI["Z"]
        enc = lcu_encode(pauli_decompose(H))
        self.assertEqual(enc.num_ancilla, 2)
        self.assertLessEqual(verify_block_encoding(enc, H), 1e-12)

    def test_lcu_single_term(self):
        enc = lcu_encode(pauli_decompose(0.5 * PAULI["Y"]))
        self.assertEqual(enc.num_ancilla, 0)
        self.assertLessEqual(verify_block_encoding(enc, 0.5 * PAULI["Y"]), 1e-12)


class TestStinespring(unittest.TestCase):

    def test_first_block_column_is_kraus_stack(self):
        ch = gad_channel(0.982, 0.4)
        U = stinespring_encode(ch)
        self.assertEqual(U.shape, (8, 8))
        self.assertLessEqual(unitarity_residual(U), 1e-12)
        for k, A in enumerate(ch.operators):
            np.testing.assert_allclose(U[2 * k:2 * k + 2, :2], A, atol=1e-15)

    def test_dilation_reproduces_channel(self):
        ch = gad_channel(0.982, 0.4)
        U = stinespring_encode(ch)
        m = len(ch)
        anc0 = np.zeros((m, m))
        anc0[0, 0] = 1.0
        for seed in range(5):
            with self.subTest(seed=seed):
                rho = random_density_matrix(2, seed=seed)
                joint = U @ np.kron(anc0, rho) @ U.conj().T
                reduced = partial_trace_ancilla(joint, m).matrix
                np.testing.assert_allclose(reduced, apply_channel(ch, rho).matrix, atol=1e-12)


class TestRescaleAndPad(unittest.TestCase):

    def test_rescale_keeps_operator(self):
        A = _contraction(2, 8)
        enc = rescale_encoding(sznagy_encode(A), 1.61)
        self.assertEqual(enc.num_ancilla, 2)
        self.assertAlmostEqual(enc.alpha, 1.61)
        self.assertLessEqual(verify_block_encoding(enc, A), 1e-12)
        np.testing.assert_allclose(enc.block, A / 1.61, atol=1e-12)

    def test_rescale_cannot_lower(self):
        enc = BlockEncoding(sznagy_encode(np.eye(2) / 2).unitary, 2.0, 1)
        with self.assertRaises(EncodingError):
            rescale_encoding(enc, 1.5)

    def test_pad_ancilla(self):
        A = _contraction(2, 9)
        enc = pad_ancilla(sznagy_encode(A), 2)
        self.assertEqual(enc.num_ancilla, 3)
        self.assertLessEqual(verify_block_encoding(enc, A), 1e-12)
        self.assertIs(pad_ancilla(enc, 0), enc)


class TestPostSelect(unittest.TestCase):

    def test_success_probability_is_squared_scale(self):
        p = 0.982 * 0.4
        A = math.sqrt(p) * np.array([[0, 1], [0, 0]])
        out = apply_and_postselect(sznagy_encode(A), np.array([0, 1]))
        self.assertAlmostEqual(out.success_probability, p, places=12)
        np.testing.assert_allclose(np.abs(out.conditioned_state), [1.0, 0.0], atol=1e-12)
        self.assertAlmostEqual(out.residual_norm ** 2, 1 - p, places=12)

    def test_zero_probability(self):
        A = np.array([[0, 1], [0, 0]]) * 0.5
        enc = sznagy_encode(A)
        with self.assertRaises(EncodingError):
            apply_and_postselect(enc, np.array([1, 0]))
        out = apply_and_postselect(enc, np.array([1, 0]), require_state=False)
        self.assertEqual(out.success_probability, 0.0)
        self.assertIsNone(out.conditioned_state)

    def test_dimension_mismatch(self):
        with self.assertRaises(EncodingError):
            apply_and_postselect(sznagy_encode(np.eye(2) / 2), np.array([1, 0, 0]))


if __name__ == "__main__":
    unittest.main(verbosity=2)
