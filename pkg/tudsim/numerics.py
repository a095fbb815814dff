"""
tudsim — numerics.py
Exact dense complex linear algebra: SVD, Hermitian eigendecomposition, PSD square
roots, unitary completion, random ensembles and the JSON matrix format.

Everything else in the package builds matrices; this module is also the independent
ground truth those matrices are checked against, so it stays small and direct.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg as sla

# ── Tolerances ────────────────────────────────────────────────────────────────
HERMITIAN_TOL  = 1e-12   # eig_hermitian precondition
PSD_CLAMP      = 1e-10   # sqrt_psd clamps eigenvalues in [-PSD_CLAMP, 0)
COMPLETION_TOL = 1e-10   # Gram-Schmidt: residual below this means "dependent"

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class NotSquareError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SVDResult:
    """A = W · diag(sigma) · V†, sigma non-increasing."""
    W: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.W * self.sigma) @ self.V.conj().T


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray   # real, ascending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


# ── Small helpers ─────────────────────────────────────────────────────────────

def as_matrix(A) -> np.ndarray:
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def as_square(A) -> np.ndarray:
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise NotSquareError(f"expected a square matrix, got {M.shape[0]}x{M.shape[1]}")
    return M


def as_state(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state must have unit norm (got {norm:.3e})")
    return v


def dagger(A) -> np.ndarray:
    return np.asarray(A).conj().T


def op_norm(A) -> float:
    """Operator (spectral) norm."""
    M = np.asarray(A, dtype=complex)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def unitarity_residual(U) -> float:
    U = as_square(U)
    return op_norm(U.conj().T @ U - np.eye(U.shape[0]))


def hermitian_residual(H) -> float:
    H = as_square(H)
    return op_norm(H - H.conj().T)


def kron_all(*mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def pauli_string(label: str) -> np.ndarray:
    return kron_all(*(PAULI[c] for c in label))


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ── Decompositions ────────────────────────────────────────────────────────────

def svd(A) -> SVDResult:
    A = as_square(A)
    try:
        W, s, Vh = np.linalg.svd(A)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"SVD did not converge: {e}") from e
    return SVDResult(_frozen(W), np.asarray(s, dtype=float), _frozen(Vh.conj().T))


def eig_hermitian(H) -> EigResult:
    H = as_square(H)
    res = hermitian_residual(H)
    if res > HERMITIAN_TOL:
        raise NotHermitianError(f"matrix is not Hermitian (residual {res:.2e})")
    try:
        lam, V = np.linalg.eigh((H + H.conj().T) / 2)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigendecomposition did not converge: {e}") from e
    return EigResult(np.asarray(lam, dtype=float), _frozen(V))


def sqrt_psd(P) -> np.ndarray:
    P = as_square(P)
    res = hermitian_residual(P)
    if res > 1e-10:
        raise NotHermitianError(f"sqrt_psd needs a Hermitian input (residual {res:.2e})")
    lam, V = np.linalg.eigh((P + P.conj().T) / 2)
    if lam.size and lam.min() < -PSD_CLAMP:
        raise NotPSDError(f"eigenvalue {lam.min():.3e} below -{PSD_CLAMP:g}")
    root = np.sqrt(np.clip(lam, 0.0, None))
    R = (V * root) @ V.conj().T
    return (R + R.conj().T) / 2


def complete_to_unitary(columns) -> np.ndarray:
    """
    Extend an orthonormal column set to a full unitary by Gram-Schmidt over the
    canonical basis. Candidates whose residual drops below COMPLETION_TOL are skipped.
    """
    C = as_matrix(columns)
    n, k = C.shape
    if k > n:
        raise ValueError(f"{k} columns cannot be orthonormal in dimension {n}")
    gram = C.conj().T @ C - np.eye(k)
    if op_norm(gram) > 1e-10:
        raise ValueError(f"columns are not orthonormal (residual {op_norm(gram):.2e})")

    basis = [C[:, j] for j in range(k)]
    for idx in range(n):
        if len(basis) == n:
            break
        v = np.zeros(n, dtype=complex)
        v[idx] = 1.0
        # two passes of classical Gram-Schmidt
        for _ in range(2):
            for q in basis:
                v = v - q * np.vdot(q, v)
        norm = np.linalg.norm(v)
        if norm < COMPLETION_TOL:
            continue
        basis.append(v / norm)
    return np.column_stack(basis)


# ── Random ensembles ──────────────────────────────────────────────────────────

def random_hermitian(dim: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    G = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    return (G + G.conj().T) / 2


def random_unitary(dim: int, seed=None, recipe: str = "hermitian") -> np.ndarray:
    """
    Random dim x dim unitary.

    recipe="hermitian"  exp(-iH) for a random Hermitian H with standard complex normal
                        entries (symmetrized); the recipe the experiments use.
    recipe="haar"       QR of a complex Ginibre matrix with the phase of diag(R) divided
                        out, which is exactly Haar distributed.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = rng_from(seed)
    if recipe == "hermitian":
        return sla.expm(-1j * random_hermitian(dim, rng))
    if recipe == "haar":
        Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
        Q, R = sla.qr(Z)
        d = np.diag(R)
        return Q * (d / np.abs(d))
    raise ValueError(f"unknown recipe {recipe!r}")


def random_contraction_with_spectrum(sigma, seed=None) -> np.ndarray:
    """A = U · diag(sigma) · V with independent random unitaries U, V."""
    s = np.sort(np.asarray(sigma, dtype=float).reshape(-1))[::-1]
    if s.size == 0:
        raise ValueError("need at least one singular value")
    if s.min() < 0 or s.max() > 1:
        raise ValueError("singular values must lie in [0, 1]")
    rng = rng_from(seed)
    U = random_unitary(s.size, rng)
    V = random_unitary(s.size, rng)
    return (U * s) @ V


def random_density_matrix(dim: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


# ── JSON format: nested [re, im] pairs ───────────────────────────────────────

def matrix_to_json(A) -> list:
    M = np.asarray(A, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(M)]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("matrix JSON must be rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
