"""
tudsim — encodings.py
Block encodings of operators into unitaries, and post-selection on the ancillas.

Layout: every unitary acts on ancilla ⊗ system with the ancilla register as the most
significant factor, so the encoded block is the leading d x d block and a freshly
added ancilla is prepended with np.kron(ancilla_op, U).

Constructions:
    sznagy_encode        one-ancilla dilation [[A, √(I−AA†)], [√(I−A†A), −A†]]
    lcu_encode           prepare / select / unprepare over a Pauli decomposition
    stinespring_encode   stacked Kraus column completed to a unitary
    rescale_encoding     raise the normalization α by one rotation ancilla
    pad_ancilla          add idle ancillas
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from tudsim.channels import KrausChannel, validate_cptp
from tudsim.numerics import (
    as_square, as_state, complete_to_unitary, matrix_from_json, matrix_to_json,
    op_norm, pauli_string, sqrt_psd, unitarity_residual,
)

UNITARY_TOL  = 1e-10
PAULI_CUTOFF = 1e-14   # coefficients at or below this are dropped
ZERO_PROB    = 1e-14   # post-selection probability treated as zero


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class BlockEncoding:
    """
    (α, ℓ, Δ) block encoding: ‖A − α·(⟨0|^ℓ ⊗ I) U (|0⟩^ℓ ⊗ I)‖ ≤ Δ.
    """
    unitary: np.ndarray
    alpha: float
    num_ancilla: int
    error: float = 0.0

    def __post_init__(self):
        U = np.array(as_square(self.unitary), dtype=complex, copy=True)
        if self.alpha <= 0 or not math.isfinite(self.alpha):
            raise EncodingError(f"alpha must be positive, got {self.alpha}")
        if self.num_ancilla < 0:
            raise EncodingError("num_ancilla must be >= 0")
        if U.shape[0] % (1 << self.num_ancilla):
            raise EncodingError(
                f"dimension {U.shape[0]} is not divisible by 2^{self.num_ancilla}")
        res = unitarity_residual(U)
        if res > UNITARY_TOL:
            raise EncodingError(f"encoding matrix is not unitary (residual {res:.2e})")
        U.setflags(write=False)
        object.__setattr__(self, "unitary", U)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "num_ancilla", int(self.num_ancilla))
        object.__setattr__(self, "error", float(self.error))

    @property
    def system_dim(self) -> int:
        return self.unitary.shape[0] >> self.num_ancilla

    @property
    def block(self) -> np.ndarray:
        d = self.system_dim
        return self.unitary[:d, :d]

    @property
    def operator(self) -> np.ndarray:
        return self.alpha * self.block

    def to_dict(self) -> dict:
        return {
            "unitary":     matrix_to_json(self.unitary),
            "alpha":       self.alpha,
            "num_ancilla": self.num_ancilla,
            "error":       self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BlockEncoding":
        return cls(matrix_from_json(data["unitary"]), data["alpha"],
                   data["num_ancilla"], data.get("error", 0.0))


@dataclass(frozen=True)
class PauliDecomposition:
    """A = Σ α_i U_i with α_i ≥ 0; complex phases live in the operators."""
    coefficients: tuple
    operators: tuple
    labels: tuple = ()

    @property
    def alpha_total(self) -> float:
        return float(sum(self.coefficients))

    def __len__(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        if not self.operators:
            raise EncodingError("empty decomposition has no dimension")
        return sum(a * U for a, U in zip(self.coefficients, self.operators))


@dataclass(frozen=True)
class PostSelectOutcome:
    success_probability: float
    conditioned_state: np.ndarray | None
    residual_norm: float


# ── Verification ──────────────────────────────────────────────────────────────

def verify_block_encoding(enc: BlockEncoding, A) -> float:
    A = as_square(A)
    if A.shape[0] != enc.system_dim:
        raise EncodingError(
            f"operator dimension {A.shape[0]} != encoded dimension {enc.system_dim}")
    return op_norm(A - enc.operator)


# ── Constructions ─────────────────────────────────────────────────────────────

def sznagy_encode(A) -> BlockEncoding:
    A = as_square(A)
    norm = op_norm(A)
    if norm > 1 + 1e-10:
        raise EncodingError(f"‖A‖ = {norm:.12f} exceeds 1; pre-scale the operator")
    if norm > 1:
        A = A / norm
    d = A.shape[0]
    I = np.eye(d)
    Ad = A.conj().T
    U = np.block([
        [A,                   sqrt_psd(I - A @ Ad)],
        [sqrt_psd(I - Ad @ A), -Ad],
    ])
    return BlockEncoding(U, 1.0, 1)


def pauli_decompose(A) -> PauliDecomposition:
    A = as_square(A)
    d = A.shape[0]
    n = d.bit_length() - 1
    if d != 1 << n:
        raise EncodingError(f"dimension {d} is not a power of 2")

    coeffs, ops, labels = [], [], []
    for chars in itertools.product("IXYZ", repeat=n):
        label = "".join(chars)
        P = pauli_string(label)
        c = np.trace(P.conj().T @ A) / d
        if abs(c) <= PAULI_CUTOFF:
            continue
        coeffs.append(float(abs(c)))
        ops.append((c / abs(c)) * P)
        labels.append(label or "I")
    return PauliDecomposition(tuple(coeffs), tuple(ops), tuple(labels))


def lcu_encode(decomp: PauliDecomposition) -> BlockEncoding:
    """
    (B†⊗I)·SELECT·(B⊗I) with B|0⟩ = Σ√(α_i/α)|i⟩. The term count is padded to a
    power of two with zero-weight identity slots.
    """
    if len(decomp) < 1:
        raise EncodingError("LCU needs at least one term")
    alphas = np.asarray(decomp.coefficients, dtype=float)
    if np.any(alphas < 0):
        raise EncodingError("LCU coefficients must be non-negative")
    total = alphas.sum()
    if total <= 0:
        raise EncodingError("LCU coefficients sum to zero")

    L = len(alphas)
    k = max(0, math.ceil(math.log2(L)))
    slots = 1 << k
    d = decomp.operators[0].shape[0]
    ops = list(decomp.operators) + [np.eye(d, dtype=complex)] * (slots - L)
    weights = np.concatenate([alphas, np.zeros(slots - L)])

    b = np.sqrt(weights / total).astype(complex)
    B = complete_to_unitary(b[:, None])
    select = sla.block_diag(*ops)
    I = np.eye(d)
    U = np.kron(B.conj().T, I) @ select @ np.kron(B, I)
    return BlockEncoding(U, total, k)


def stinespring_encode(channel: KrausChannel) -> np.ndarray:
    """
    md x md unitary whose first block column stacks A_0..A_{m-1}; the remaining
    columns come from Gram-Schmidt over the canonical basis.
    """
    res = validate_cptp(channel)
    if res > 1e-10:
        raise EncodingError(f"channel is not CPTP (residual {res:.2e})")
    column = np.vstack(channel.operators)
    return complete_to_unitary(column)


def rescale_encoding(enc: BlockEncoding, alpha: float) -> BlockEncoding:
    """
    Same operator, normalization raised from enc.alpha to alpha, at the cost of one
    ancilla carrying a rotation with top-left entry enc.alpha/alpha.
    """
    if alpha < enc.alpha * (1 - 1e-12):
        raise EncodingError(f"cannot lower alpha from {enc.alpha} to {alpha}")
    c = min(1.0, enc.alpha / alpha)
    s = math.sqrt(max(0.0, 1.0 - c * c))
    G = np.array([[c, -s], [s, c]], dtype=complex)
    return BlockEncoding(np.kron(G, enc.unitary), alpha, enc.num_ancilla + 1, enc.error)


def pad_ancilla(enc: BlockEncoding, extra: int) -> BlockEncoding:
    if extra < 0:
        raise EncodingError("cannot remove ancillas")
    if extra == 0:
        return enc
    U = np.kron(np.eye(1 << extra), enc.unitary)
    return BlockEncoding(U, enc.alpha, enc.num_ancilla + extra, enc.error)


# ── Application ───────────────────────────────────────────────────────────────

def apply_and_postselect(enc: BlockEncoding, psi, require_state: bool = True) -> PostSelectOutcome:
    """
    Apply U to |0⟩^ℓ|ψ⟩ and condition on the all-zero ancilla outcome.

    With require_state=False a zero-probability outcome returns conditioned_state=None
    instead of raising.
    """
    v = as_state(psi)
    if v.size != enc.system_dim:
        raise EncodingError(f"state dimension {v.size} != encoded dimension {enc.system_dim}")
    out = enc.unitary[:, :enc.system_dim] @ v
    kept = out[:enc.system_dim]
    p = float(np.vdot(kept, kept).real)
    residual = float(np.linalg.norm(out[enc.system_dim:]))
    if p <= ZERO_PROB:
        if require_state:
            raise EncodingError("post-selection succeeds with probability 0")
        return PostSelectOutcome(0.0, None, residual)
    return PostSelectOutcome(min(p, 1.0), kept / math.sqrt(p), residual)
