"""
tudsim — tud.py
Two- and four-unitary decompositions of contractions.

    oracle_tud_svd      exact U1,2 = W(Σ ± i√(I−Σ²))V† from the SVD
    run_tud             A = (Ũ1 + Ũ2)/2 from QSVT + LCU addition + one OAA round
    run_fud_hermitian   H = (α/2)(Ũ + Ũ†) with an even polynomial on H/α
    run_fud             A = H1 + iH2, each Hermitian part split as above
    sznagy_shortcut     H = (U + U†)/2 read directly off a Sz.-Nagy encoding

Query accounting: one Ũ/2 build of degree n spends ⌈n/2⌉ calls to U_A and ⌊n/2⌋ to
U_A† inside QSVT plus one U_A call for the addition branch; OAA applies Ũ, Ũ†, Ũ.
"""

import math
from dataclasses import dataclass, fields

import numpy as np

from tudsim.encodings import (
    BlockEncoding, EncodingError, lcu_encode, pad_ancilla, pauli_decompose,
    rescale_encoding, sznagy_encode,
)
from tudsim.numerics import (
    NotHermitianError, as_square, eig_hermitian, hermitian_residual, matrix_to_json,
    op_norm, sqrt_psd, svd,
)
from tudsim.qsp import (
    WX, ParityError, PhaseSequence, TargetFunction, convert_wx_to_r,
    design_phases, minimal_degree, qsvt_apply,
)

OAA_TOLERANCE = 0.1


class DecompositionError(ValueError):
    pass


class ScalingError(ValueError):
    pass


@dataclass(frozen=True)
class QueryLedger:
    calls_U_A: int = 0
    calls_U_A_dagger: int = 0
    calls_state_prep: int = 0
    oaa_rounds: int = 0
    qsvt_calls: int = 0
    addition_calls: int = 0

    @property
    def encoding_calls(self) -> int:
        return self.calls_U_A + self.calls_U_A_dagger

    def __add__(self, other: "QueryLedger") -> "QueryLedger":
        return QueryLedger(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                              for f in fields(self)})

    def scaled(self, k: int) -> "QueryLedger":
        return QueryLedger(**{f.name: k * getattr(self, f.name) for f in fields(self)})

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["encoding_calls"] = self.encoding_calls
        return d


def build_ledger(degree: int, amplify: bool = True) -> QueryLedger:
    """Ledger of one implementation of Ũ (or Ũ/2 when amplify=False)."""
    a = (degree + 1) // 2 + 1
    b = degree // 2
    if amplify:
        return QueryLedger(2 * a + b, 2 * b + a, 1, 1, 3 * degree, 3)
    return QueryLedger(a, b, 1, 0, degree, 1)


@dataclass(frozen=True)
class UnitaryDecomposition:
    """
    Σ c_j·op_j ≈ target. errors[j] is ‖op_j − exact_j‖ against the same-branch oracle
    and success_probabilities[j] the OAA success (1 for exact parts).
    """
    parts: tuple
    epsilon_bound: float = 0.0
    alpha_scale: float = 1.0
    ledgers: tuple = ()
    errors: tuple = ()
    success_probabilities: tuple = ()

    @property
    def coefficients(self) -> tuple:
        return tuple(c for c, _ in self.parts)

    @property
    def operators(self) -> tuple:
        return tuple(U for _, U in self.parts)

    @property
    def query_ledger(self) -> QueryLedger:
        total = QueryLedger()
        for ledger in self.ledgers:
            total = total + ledger
        return total

    def reconstruct(self) -> np.ndarray:
        return sum(c * U for c, U in self.parts)

    def to_dict(self) -> dict:
        return {
            "coefficients":  [[complex(c).real, complex(c).imag] for c in self.coefficients],
            "operators":     [matrix_to_json(U) for U in self.operators],
            "epsilon_bound": self.epsilon_bound,
            "alpha_scale":   self.alpha_scale,
            "errors":        list(self.errors),
            "success_probabilities": list(self.success_probabilities),
            "ledger":        self.query_ledger.to_dict(),
        }


# ── Exact oracles ─────────────────────────────────────────────────────────────

def oracle_tud_svd(A) -> UnitaryDecomposition:
    A = as_square(A)
    res = svd(A)
    if res.sigma.size and res.sigma[0] > 1 + 1e-10:
        raise ScalingError(f"‖A‖ = {res.sigma[0]:.12f} exceeds 1")
    s = np.clip(res.sigma, 0.0, 1.0)
    root = np.sqrt(1.0 - s * s)
    Vh = res.V.conj().T
    U1 = (res.W * (s + 1j * root)) @ Vh
    U2 = (res.W * (s - 1j * root)) @ Vh
    exact = QueryLedger()
    return UnitaryDecomposition(((0.5, U1), (0.5, U2)), 0.0, 1.0,
                                (exact, exact), (0.0, 0.0), (1.0, 1.0))


def oracle_hermitian(H, alpha: float = 1.0) -> np.ndarray:
    """U = Σ (λ/α + i√(1−(λ/α)²))|λ⟩⟨λ|, so that H = (α/2)(U + U†)."""
    eig = eig_hermitian(as_square(H))
    lam = np.clip(eig.eigenvalues / alpha, -1.0, 1.0)
    V = eig.eigenvectors
    return (V * (lam + 1j * np.sqrt(1.0 - lam * lam))) @ V.conj().T


def hermitian_split(A) -> tuple[np.ndarray, np.ndarray]:
    A = as_square(A)
    Ad = A.conj().T
    return (A + Ad) / 2, -0.5j * (A - Ad)


# ── Circuit pieces ────────────────────────────────────────────────────────────

def lcu_add(encA: BlockEncoding, encF: BlockEncoding, sign: int) -> BlockEncoding:
    """
    Encoding of (A + sign·i·F)/2 with α = 2: Hadamard on a new ancilla, controlled
    U_A / sign·i·U_F, Hadamard.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    for enc in (encA, encF):
        if abs(enc.alpha - 1.0) > 1e-12:
            raise EncodingError(f"lcu_add needs alpha = 1 encodings, got {enc.alpha}")
    if encA.system_dim != encF.system_dim:
        raise EncodingError(
            f"system dimensions differ: {encA.system_dim} vs {encF.system_dim}")
    ell = max(encA.num_ancilla, encF.num_ancilla)
    UA = pad_ancilla(encA, ell - encA.num_ancilla).unitary
    UF = pad_ancilla(encF, ell - encF.num_ancilla).unitary
    D = UA.shape[0]
    H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    HI = np.kron(H, np.eye(D))
    zero = np.zeros((D, D), dtype=complex)
    ctrl = np.block([[UA, zero], [zero, (sign * 1j) * UF]])
    return BlockEncoding(HI @ ctrl @ HI, 2.0, ell + 1, encA.error + encF.error)


def oaa(block, tolerance: float = OAA_TOLERANCE) -> tuple[np.ndarray, float]:
    """
    One round of oblivious amplitude amplification on Ũ/2: returns (3Ũ − ŨŨ†Ũ)/2
    and the success probability ‖amplified†·amplified‖.
    """
    Ut = 2.0 * as_square(block)
    sigma = svd(Ut).sigma
    deviation = float(np.max(np.abs(sigma - 1.0)))
    if deviation > tolerance:
        raise DecompositionError(
            f"2·block is {deviation:.3e} away from unitary (tolerance {tolerance:g})")
    amplified = (3 * Ut - Ut @ Ut.conj().T @ Ut) / 2
    success = op_norm(amplified.conj().T @ amplified)
    return amplified, success


def _resolve_phases(phases, target: TargetFunction, degree: int, margin: float) -> PhaseSequence:
    if phases is None:
        phases, _ = design_phases(target, degree, margin, 1.0)
    if phases.degree != degree:
        raise ParityError(f"phase sequence has degree {phases.degree}, expected {degree}")
    if phases.parity != target.parity:
        raise ParityError(f"{target.kind} needs {target.parity} phases, got {phases.parity}")
    return convert_wx_to_r(phases) if phases.convention == WX else phases


def _two_branches(enc: BlockEncoding, encF: BlockEncoding, amplify: bool):
    """(+i, −i) branches: Ũ = 2·block before OAA, amplified after."""
    parts, probs = [], []
    for sign in (1, -1):
        block = lcu_add(enc, encF, sign).block
        if amplify:
            Ut, p = oaa(block, tolerance=math.inf)
        else:
            Ut = 2.0 * block
            p = op_norm(block.conj().T @ block)
        parts.append(Ut)
        probs.append(p)
    return parts, probs


# ── Decompositions ────────────────────────────────────────────────────────────

def run_tud(enc: BlockEncoding, delta: float, eps_target: float = 1e-2,
            degree_override: int | None = None, phases: PhaseSequence | None = None,
            amplify: bool = True) -> UnitaryDecomposition:
    """
    Two-unitary decomposition of the encoded contraction. The singular values are
    promised to lie in [δ, 1−δ]; outside that the polynomial is not accurate and the
    reported errors grow, nothing raises.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if abs(enc.alpha - 1.0) > 1e-12:
        raise EncodingError(f"run_tud needs an alpha = 1 encoding, got {enc.alpha}")
    target = TargetFunction.odd_sign_sqrt()
    if degree_override is not None:
        degree = degree_override
    elif phases is not None:
        degree = phases.degree
    else:
        degree = minimal_degree(target, delta, eps_target)
    if degree % 2 == 0:
        raise ParityError(f"run_tud needs an odd degree, got {degree}")

    ps = _resolve_phases(phases, target, degree, delta)
    encF = qsvt_apply(ps, enc)
    (U1, U2), probs = _two_branches(enc, encF, amplify)

    oracle = oracle_tud_svd(enc.operator)
    O1, O2 = oracle.operators
    errors = (op_norm(U1 - O1), op_norm(U2 - O2))
    ledger = build_ledger(degree, amplify)
    return UnitaryDecomposition(((0.5, U1), (0.5, U2)), max(errors), 1.0,
                                (ledger, ledger), errors, tuple(probs))


def default_margin(alpha: float) -> float:
    """Eigenvalues of H/α sit in [−1/α, 1/α]; margin 1 − 1/α, kept in [0.05, 0.45]."""
    if alpha <= 1.0:
        return 0.1
    return min(0.45, max(0.05, 1.0 - 1.0 / alpha))


def run_fud_hermitian(enc: BlockEncoding, alpha_scale: float, eps_target: float = 1e-2,
                      degree_override: int | None = None,
                      phases: PhaseSequence | None = None, margin: float | None = None,
                      amplify: bool = True) -> UnitaryDecomposition:
    """H = (α/2)(Ũ + Ũ†) where Ũ ≈ H/α + i√(I − (H/α)²)."""
    H = enc.operator
    res = hermitian_residual(H)
    if res > 1e-8:
        raise NotHermitianError(f"encoded block is not Hermitian (residual {res:.2e})")
    if alpha_scale < 1:
        raise ScalingError(f"alpha_scale must be >= 1, got {alpha_scale}")
    if enc.alpha > alpha_scale * (1 + 1e-12):
        raise ScalingError(f"encoding normalization {enc.alpha} exceeds alpha_scale {alpha_scale}")

    if enc.alpha < alpha_scale * (1 - 1e-12):
        enc = rescale_encoding(enc, alpha_scale)
    # treat the encoding as an α = 1 encoding of H/α
    scaled = BlockEncoding(enc.unitary, 1.0, enc.num_ancilla, enc.error)

    target = TargetFunction.even_sqrt()
    if margin is None:
        margin = default_margin(alpha_scale)
    if degree_override is not None:
        degree = degree_override
    elif phases is not None:
        degree = phases.degree
    else:
        degree = minimal_degree(target, margin, eps_target)
    if degree % 2:
        raise ParityError(f"the Hermitian path needs an even degree, got {degree}")

    ps = _resolve_phases(phases, target, degree, margin)
    encF = qsvt_apply(ps, scaled)
    (Up, Um), probs = _two_branches(scaled, encF, amplify)

    exact = oracle_hermitian(H, alpha_scale)
    errors = (op_norm(Up - exact), op_norm(Um - exact.conj().T))
    ledger = build_ledger(degree, amplify)
    half = alpha_scale / 2
    return UnitaryDecomposition(((half, Up), (half, Um)), max(errors), alpha_scale,
                                (ledger, ledger), errors, tuple(probs))


def sznagy_shortcut(encH: BlockEncoding) -> UnitaryDecomposition:
    """
    H = (α/2)(U + U†) with U = B + i√(I − B²), read off a Sz.-Nagy encoding of B = H/α
    by preparing the ancilla in S·H|0⟩ (S = diag(1, i)) and projecting on ⟨+|S.
    The |1⟩ input gives U†. One encoding call per unitary, exact.
    """
    if encH.num_ancilla != 1:
        raise DecompositionError("the shortcut needs a one-ancilla Sz.-Nagy encoding")
    d = encH.system_dim
    U = encH.unitary
    B = U[:d, :d]
    res = hermitian_residual(B)
    if res > 1e-10:
        raise NotHermitianError(f"encoded block is not Hermitian (residual {res:.2e})")
    S = sqrt_psd(np.eye(d) - B @ B)
    if max(op_norm(U[:d, d:] - S), op_norm(U[d:, :d] - S), op_norm(U[d:, d:] + B)) > 1e-8:
        raise DecompositionError("encoding does not have the Sz.-Nagy block structure")

    def contract(vec):
        blocks = [[U[j * d:(j + 1) * d, k * d:(k + 1) * d] for k in range(2)] for j in range(2)]
        return sum(vec[j] * vec[k] * blocks[j][k] for j in range(2) for k in range(2))

    r = 1 / math.sqrt(2)
    Up = contract(np.array([r, 1j * r]))
    Um = contract(np.array([r, -1j * r]))

    exact = oracle_hermitian(B)
    errors = (op_norm(Up - exact), op_norm(Um - exact.conj().T))
    ledger = QueryLedger(calls_U_A=1, calls_state_prep=1)
    half = encH.alpha / 2
    return UnitaryDecomposition(((half, Up), (half, Um)), max(errors), encH.alpha,
                                (ledger, ledger), errors, (1.0, 1.0))


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def encode_hermitian(H, alpha: float, encoder: str = "auto") -> BlockEncoding:
    """
    Encoding of H with normalization ≤ alpha. "auto" prefers LCU over Pauli strings
    when its α fits, else Sz.-Nagy on H/α; a zero H always takes Sz.-Nagy.
    """
    H = as_square(H)
    norm = op_norm(H)
    if norm > alpha * (1 + 1e-10):
        raise ScalingError(f"‖H‖ = {norm:.6f} exceeds alpha_scale {alpha}")
    if encoder not in ("auto", "lcu", "sznagy"):
        raise ValueError(f"unknown encoder {encoder!r}")
    if norm > 1e-14 and encoder in ("auto", "lcu") and _is_power_of_two(H.shape[0]):
        decomp = pauli_decompose(H)
        if decomp.alpha_total <= alpha:
            return lcu_encode(decomp)
        if encoder == "lcu":
            raise ScalingError(
                f"LCU normalization {decomp.alpha_total:.6f} exceeds alpha_scale {alpha}")
    elif encoder == "lcu" and norm > 1e-14:
        raise EncodingError(f"LCU needs a power-of-two dimension, got {H.shape[0]}")
    sz = sznagy_encode(H / alpha)
    return BlockEncoding(sz.unitary, alpha, 1)


def run_fud(A, alpha_scale: float = 1.61, eps_target: float = 1e-2,
            degree_override: int | None = None, phases: PhaseSequence | None = None,
            encoder: str = "auto", method: str = "qsvt",
            amplify: bool = True) -> UnitaryDecomposition:
    """
    A = (α/2)(U1 + U1†) + i(α/2)(U2 + U2†) via A = H1 + iH2.

    method="qsvt"    run_fud_hermitian on each part
    method="sznagy"  sznagy_shortcut on a Sz.-Nagy encoding of each H_j/α
    """
    A = as_square(A)
    if op_norm(A) > 1 + 1e-10:
        raise ScalingError(f"‖A‖ = {op_norm(A):.6f} exceeds 1")
    if method not in ("qsvt", "sznagy"):
        raise ValueError(f"unknown method {method!r}")

    halves = []
    for Hj in hermitian_split(A):
        if op_norm(Hj) > alpha_scale * (1 + 1e-10):
            raise ScalingError(f"‖H‖/α = {op_norm(Hj) / alpha_scale:.6f} exceeds 1")
        if method == "sznagy":
            sz = sznagy_encode(Hj / alpha_scale)
            halves.append(sznagy_shortcut(BlockEncoding(sz.unitary, alpha_scale, 1)))
        else:
            enc = encode_hermitian(Hj, alpha_scale, encoder)
            halves.append(run_fud_hermitian(enc, alpha_scale, eps_target, degree_override,
                                            phases, amplify=amplify))

    first, second = halves
    parts = first.parts + tuple((1j * c, U) for c, U in second.parts)
    return UnitaryDecomposition(
        parts,
        max(first.epsilon_bound, second.epsilon_bound),
        alpha_scale,
        first.ledgers + second.ledgers,
        first.errors + second.errors,
        first.success_probabilities + second.success_probabilities,
    )
