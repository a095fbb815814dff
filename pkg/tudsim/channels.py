"""
tudsim — channels.py
Kraus channels: construction, CPTP validation, application to density matrices,
partial traces and exact expectation values Σ_k ⟨ψ|A_k† O A_k|ψ⟩.

Worked channels: generalized amplitude damping (GAD), amplitude damping with its
θ-rotation dilation, and convex unitary ensembles.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.constants as sc

from tudsim.numerics import (
    as_square, as_state, hermitian_residual, matrix_from_json, matrix_to_json,
    op_norm, unitarity_residual,
)

CPTP_TOL      = 1e-10   # construction-time trace-preservation check
APPLY_TOL     = 1e-8    # apply_channel refuses channels worse than this
GAD_THERMAL_P = 0.982   # thermal population used by the GAD experiments

# E0 = 0, E1 = 5 GHz, T = 50 mK
GAD_E0_GHZ = 0.0
GAD_E1_GHZ = 5.0
GAD_T_MK   = 50.0


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class KrausChannel:
    """
    Ordered Kraus operators A_0..A_{m-1} on a d-dimensional system.

    Validated on construction (Σ A_k†A_k = I to CPTP_TOL, m <= d²) unless
    checked=False, which exists for building deliberately broken channels.
    """
    operators: tuple
    labels: tuple = ()
    checked: bool = True

    def __post_init__(self):
        ops = []
        for A in self.operators:
            M = np.array(as_square(A), dtype=complex, copy=True)
            M.setflags(write=False)
            ops.append(M)
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(M.shape != (d, d) for M in ops):
            raise ChannelError("Kraus operators have mismatched dimensions")
        labels = tuple(self.labels) or tuple(f"A{k}" for k in range(len(ops)))
        if len(labels) != len(ops):
            raise ChannelError(f"{len(labels)} labels for {len(ops)} operators")
        object.__setattr__(self, "operators", tuple(ops))
        object.__setattr__(self, "labels", labels)

        if self.checked:
            if len(ops) > d * d:
                raise ChannelError(f"{len(ops)} Kraus operators exceed d² = {d * d}")
            res = validate_cptp(self)
            if res > CPTP_TOL:
                raise ChannelError(f"channel is not trace preserving (residual {res:.2e})")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def to_dict(self) -> dict:
        return {
            "labels":    list(self.labels),
            "operators": [matrix_to_json(A) for A in self.operators],
        }

    @classmethod
    def from_dict(cls, data: dict, checked: bool = True) -> "KrausChannel":
        ops = tuple(matrix_from_json(m) for m in data["operators"])
        return cls(ops, tuple(data.get("labels", ())), checked=checked)


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(as_square(self.matrix), dtype=complex, copy=True)
        res = hermitian_residual(rho)
        if res > 1e-12:
            raise ChannelError(f"density matrix not Hermitian (residual {res:.2e})")
        tr = np.trace(rho)
        if abs(tr - 1) > 1e-12:
            raise ChannelError(f"density matrix trace is {tr.real:.12f}, expected 1")
        lam_min = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
        if lam_min < -1e-10:
            raise ChannelError(f"density matrix has eigenvalue {lam_min:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def from_state(cls, psi) -> "DensityMatrix":
        v = as_state(psi)
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _operators(ch):
    return ch.operators if isinstance(ch, KrausChannel) else tuple(as_square(A) for A in ch)


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else as_square(rho)


# ── Operations ────────────────────────────────────────────────────────────────

def validate_cptp(ch) -> float:
    """‖Σ A_k†A_k − I‖ for a KrausChannel or a plain sequence of matrices."""
    ops = _operators(ch)
    d = ops[0].shape[0]
    if any(A.shape != (d, d) for A in ops):
        raise ChannelError("Kraus operators have mismatched dimensions")
    total = sum(A.conj().T @ A for A in ops)
    return op_norm(total - np.eye(d))


def apply_channel(ch: KrausChannel, rho) -> DensityMatrix:
    res = validate_cptp(ch)
    if res > APPLY_TOL:
        raise ChannelError(f"refusing to apply a non-CPTP channel (residual {res:.2e})")
    R = _matrix(rho)
    if R.shape[0] != ch.dim:
        raise ChannelError(f"state dimension {R.shape[0]} != channel dimension {ch.dim}")
    out = sum(A @ R @ A.conj().T for A in ch.operators)
    out = (out + out.conj().T) / 2
    # a residual up to APPLY_TOL leaks into the trace; DensityMatrix checks it to 1e-12
    return DensityMatrix(out / np.trace(out).real)


def gad_channel(p: float, gamma: float) -> KrausChannel:
    """Generalized amplitude damping with thermal population p and damping γ."""
    if not (0.0 <= p <= 1.0 and 0.0 <= gamma <= 1.0):
        raise ChannelError(f"GAD parameters out of range: p={p}, gamma={gamma}")
    sp, sq = math.sqrt(p), math.sqrt(1.0 - p)
    sg, sr = math.sqrt(gamma), math.sqrt(1.0 - gamma)
    ops = (
        sp * np.array([[1, 0], [0, sr]], dtype=complex),
        sp * np.array([[0, sg], [0, 0]], dtype=complex),
        sq * np.array([[sr, 0], [0, 1]], dtype=complex),
        sq * np.array([[0, 0], [sg, 0]], dtype=complex),
    )
    return KrausChannel(ops, ("A0", "A1", "A2", "A3"))


def amplitude_damping(p_decay: float) -> tuple[KrausChannel, float]:
    """Returns the channel and its dilation angle θ = 2·asin(√p)."""
    if not 0.0 <= p_decay <= 1.0:
        raise ChannelError(f"decay probability out of range: {p_decay}")
    ops = (
        np.array([[1, 0], [0, math.sqrt(1.0 - p_decay)]], dtype=complex),
        np.array([[0, math.sqrt(p_decay)], [0, 0]], dtype=complex),
    )
    theta = 2.0 * math.asin(math.sqrt(p_decay))
    return KrausChannel(ops, ("A0", "A1")), theta


def amplitude_damping_dilation(theta: float) -> np.ndarray:
    """
    Stinespring unitary of amplitude damping on ancilla ⊗ system: a rotation by θ/2
    in span{|01⟩, |10⟩}, identity on |00⟩ and |11⟩.
    """
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    U = np.eye(4, dtype=complex)
    U[1, 1], U[1, 2] = c, -s
    U[2, 1], U[2, 2] = s, c
    return U


def unitary_ensemble(q, unitaries) -> KrausChannel:
    """Channel ρ -> Σ q_i U_i ρ U_i† with Kraus operators √q_i·U_i."""
    q = np.asarray(q, dtype=float).reshape(-1)
    if len(q) != len(unitaries):
        raise ChannelError(f"{len(q)} probabilities for {len(unitaries)} unitaries")
    if np.any(q <= 0) or abs(q.sum() - 1.0) > 1e-12:
        raise ChannelError("ensemble probabilities must be positive and sum to 1")
    for U in unitaries:
        if unitarity_residual(U) > 1e-10:
            raise ChannelError("ensemble member is not unitary")
    return KrausChannel(tuple(math.sqrt(qi) * as_square(U) for qi, U in zip(q, unitaries)))


def ensemble_joint_state(q, unitaries, rho) -> DensityMatrix:
    """
    Joint ancilla ⊗ system state after preparing Σ√q_i|i⟩ on the ancilla and applying
    the select Σ|i⟩⟨i| ⊗ U_i; leaving the ancilla unmeasured gives the ensemble channel.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    R = _matrix(rho)
    amps = np.sqrt(q)
    blocks = [[amps[i] * amps[j] * (as_square(Ui) @ R @ as_square(Uj).conj().T)
               for j, Uj in enumerate(unitaries)]
              for i, Ui in enumerate(unitaries)]
    joint = np.block(blocks)
    return DensityMatrix((joint + joint.conj().T) / 2)


def partial_trace_ancilla(joint, ancilla_dim: int) -> DensityMatrix:
    """Trace out the leading (ancilla) factor of an ancilla ⊗ system state."""
    J = _matrix(joint)
    n = J.shape[0]
    if ancilla_dim < 1 or n % ancilla_dim:
        raise ChannelError(f"dimension {n} does not factor as {ancilla_dim} x system")
    d = n // ancilla_dim
    reduced = np.einsum("iaib->ab", J.reshape(ancilla_dim, d, ancilla_dim, d))
    return DensityMatrix((reduced + reduced.conj().T) / 2)


def exact_expectation(ch: KrausChannel, psi, O) -> float:
    """Σ_k ⟨ψ|A_k† O A_k|ψ⟩ = Tr(O·Λ(|ψ⟩⟨ψ|))."""
    O = as_square(O)
    res = hermitian_residual(O)
    if res > 1e-10:
        raise ChannelError(f"observable is not Hermitian (residual {res:.2e})")
    v = as_state(psi)
    total = 0.0 + 0.0j
    for A in _operators(ch):
        w = A @ v
        total += np.vdot(w, O @ w)
    return float(total.real)


def named_state(name: str) -> np.ndarray:
    s = 1 / math.sqrt(2)
    states = {
        "0":  [1, 0],
        "1":  [0, 1],
        "+x": [s, s],
        "-x": [s, -s],
        "+y": [s, 1j * s],
        "-y": [s, -1j * s],
    }
    if name not in states:
        raise ChannelError(f"unknown state {name!r} (known: {', '.join(states)})")
    return np.array(states[name], dtype=complex)


def thermal_population(e0_ghz: float = GAD_E0_GHZ, e1_ghz: float = GAD_E1_GHZ,
                       temperature_mk: float = GAD_T_MK) -> float:
    """
    Ground-state population p = e^{-E0/kT} / Z of a two-level system with level
    energies given as frequencies.

    The GAD parameters above evaluate to p ≈ 0.992, not the 0.982 the experiments
    use (GAD_THERMAL_P); the experiments keep 0.982.
    """
    kT = sc.k * temperature_mk * 1e-3
    e0 = sc.h * e0_ghz * 1e9
    e1 = sc.h * e1_ghz * 1e9
    w0 = math.exp(-e0 / kT)
    w1 = math.exp(-e1 / kT)
    return w0 / (w0 + w1)
