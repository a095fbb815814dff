"""
tudsim — qsp.py
Polynomial targets, phase-factor solving and QSVT sequences.

Conventions
    Wx   iterate W(x) = [[x, i√(1−x²)], [i√(1−x²), x]], response
         ⟨0| e^{iφ0 Z} Π_k W(x) e^{iφk Z} |0⟩; the solver and the shipped fixtures use it
    R    iterate R(x) = [[x, √(1−x²)], [√(1−x²), −x]]; qsvt_apply needs it

The map Wx -> R (convert_wx_to_r) leaves ⟨0|·|0⟩ unchanged, so a polynomial fitted as
Re⟨0|U|0⟩ in Wx survives conversion intact.
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import least_squares, linprog, minimize

from tudsim.encodings import BlockEncoding, EncodingError
from tudsim.numerics import ConvergenceError

BOUND          = 0.999   # |p| ceiling imposed by approx_target
DEFAULT_SCALE  = 0.9
DEFAULT_MARGIN = 0.1
RESIDUAL_TOL   = 1e-6    # RMS residual the phase solver must reach
MAX_RESTARTS   = 10
CHECK_GRID     = 10_000

ODD, EVEN = "odd", "even"
WX, R     = "Wx", "R"


class ParityError(ValueError):
    pass


class ConventionError(ValueError):
    pass


class PhaseSolveError(RuntimeError):
    """Solver gave up; .best holds the best sequence found and .residual its RMS residual."""

    def __init__(self, message, best=None, residual=math.inf):
        super().__init__(message)
        self.best = best
        self.residual = residual


def _degree_parity(n: int) -> str:
    return ODD if n % 2 else EVEN


# ── Types ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TargetFunction:
    """
    kind: "odd_sign_sqrt"  sign(x)·√(1−x²)
          "even_sqrt"      √(1−x²)
          "custom"         samples (points, values) on [0, 1], extended by `parity`
    """
    kind: str
    points: tuple = ()
    values: tuple = ()
    custom_parity: str = ""

    def __post_init__(self):
        if self.kind not in ("odd_sign_sqrt", "even_sqrt", "custom"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind == "custom":
            if self.custom_parity not in (ODD, EVEN):
                raise ParityError("custom targets need parity 'odd' or 'even'")
            if len(self.points) != len(self.values) or not self.points:
                raise ValueError("custom target needs matching, non-empty points and values")
            if min(self.points) < 0 or max(self.points) > 1:
                raise ValueError("custom sample points must lie in [0, 1]")

    @classmethod
    def odd_sign_sqrt(cls) -> "TargetFunction":
        return cls("odd_sign_sqrt")

    @classmethod
    def even_sqrt(cls) -> "TargetFunction":
        return cls("even_sqrt")

    @classmethod
    def custom(cls, points, values, parity: str) -> "TargetFunction":
        return cls("custom", tuple(float(p) for p in points),
                   tuple(float(v) for v in values), parity)

    @property
    def parity(self) -> str:
        if self.kind == "odd_sign_sqrt":
            return ODD
        if self.kind == "even_sqrt":
            return EVEN
        return self.custom_parity

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "odd_sign_sqrt":
            return np.sign(x) * np.sqrt(np.clip(1 - x * x, 0, None))
        if self.kind == "even_sqrt":
            return np.sqrt(np.clip(1 - x * x, 0, None))
        order = np.argsort(self.points)
        xs = np.asarray(self.points)[order]
        ys = np.asarray(self.values)[order]
        y = np.interp(np.abs(x), xs, ys)
        return np.sign(x) * y if self.custom_parity == ODD else y


@dataclass(frozen=True)
class ChebyshevPoly:
    coeffs: np.ndarray
    parity: str
    scale: float = 1.0
    margin: float = DEFAULT_MARGIN
    approx_error: float = math.nan
    bound: float = BOUND

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True)
        wrong = 0 if self.parity == ODD else 1
        c[wrong::2] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return C.chebval(np.asarray(x, dtype=float), self.coeffs)

    def max_abs(self, points: int = CHECK_GRID) -> float:
        return float(np.max(np.abs(self(np.linspace(-1, 1, points)))))


@dataclass(frozen=True)
class PhaseSequence:
    angles: tuple
    convention: str = WX
    parity: str = ""
    residual: float | None = field(default=None, compare=False)

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if len(angles) < 1:
            raise ValueError("a phase sequence needs at least one angle")
        if not all(math.isfinite(a) for a in angles):
            raise ValueError("phase angles must be finite")
        if self.convention not in (WX, R):
            raise ConventionError(f"unknown convention {self.convention!r}")
        parity = _degree_parity(len(angles) - 1)
        if self.parity and self.parity != parity:
            raise ParityError(
                f"{len(angles)} angles give degree {len(angles) - 1}, not {self.parity} parity")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "parity", parity)

    @property
    def degree(self) -> int:
        return len(self.angles) - 1

    def negated(self) -> "PhaseSequence":
        return PhaseSequence(tuple(-a for a in self.angles), self.convention, self.parity)

    def to_dict(self) -> dict:
        return {"angles": list(self.angles), "convention": self.convention,
                "parity": self.parity, "residual": self.residual}

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseSequence":
        return cls(tuple(data["angles"]), data.get("convention", WX),
                   data.get("parity", ""), data.get("residual"))


def load_angles(path, convention: str = WX) -> PhaseSequence:
    """Reads a bare JSON array of radians (or a saved PhaseSequence dict)."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        return PhaseSequence.from_dict(data)
    return PhaseSequence(tuple(data), convention)


# ── Target approximation ──────────────────────────────────────────────────────

def _region(target: TargetFunction, margin: float) -> tuple[float, float]:
    """Non-negative half of the approximation region; parity supplies the rest."""
    lo = margin if target.parity == ODD else 0.0
    return lo, 1.0 - margin


def _theta_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return np.cos(np.linspace(np.arccos(hi), np.arccos(lo), count))


def _basis(x, degree: int, parity: str) -> tuple[np.ndarray, np.ndarray]:
    ks = np.arange(1 if parity == ODD else 0, degree + 1, 2)
    return C.chebvander(x, degree)[:, ks], ks


def _minimax_coeffs(target, degree, scale, margin, bound) -> np.ndarray:
    if target.kind == "custom":
        x_fit = np.asarray(target.points, dtype=float)
        y_fit = scale * np.asarray(target.values, dtype=float)
    else:
        lo, hi = _region(target, margin)
        x_fit = _theta_grid(lo, hi, max(200, 8 * degree))
        y_fit = scale * target(x_fit)
    x_bnd = _theta_grid(0.0, 1.0, max(400, 16 * degree))

    A_fit, ks = _basis(x_fit, degree, target.parity)
    A_bnd, _ = _basis(x_bnd, degree, target.parity)
    K = len(ks)
    ones = np.ones((len(x_fit), 1))
    zeros = np.zeros((len(x_bnd), 1))

    # variables: K coefficients, then t; minimize t
    A_ub = np.vstack([
        np.hstack([A_fit, -ones]),
        np.hstack([-A_fit, -ones]),
        np.hstack([A_bnd, zeros]),
        np.hstack([-A_bnd, zeros]),
    ])
    b_ub = np.concatenate([y_fit, -y_fit, np.full(len(x_bnd), bound), np.full(len(x_bnd), bound)])
    cost = np.zeros(K + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub,
                  bounds=[(None, None)] * K + [(0, None)], method="highs")
    if res.status != 0:
        raise ConvergenceError(f"minimax LP failed: {res.message}")
    coeffs = np.zeros(degree + 1)
    coeffs[ks] = res.x[:K]
    return coeffs


def _projection_coeffs(target, degree, scale) -> np.ndarray:
    N = 4 * degree
    j = np.arange(N)
    x = np.cos(np.pi * (j + 0.5) / N)
    fx = scale * target(x)
    T = C.chebvander(x, degree)
    coeffs = (2.0 / N) * (T.T @ fx)
    coeffs[0] /= 2
    return coeffs


def _region_error(target, poly_coeffs, scale, margin) -> float:
    if target.kind == "custom":
        x = np.asarray(target.points, dtype=float)
        return float(np.max(np.abs(scale * np.asarray(target.values) - C.chebval(x, poly_coeffs))))
    lo, hi = _region(target, margin)
    x = np.linspace(lo, hi, 2001)
    x = np.concatenate([-x[::-1], x])
    return float(np.max(np.abs(scale * target(x) - C.chebval(x, poly_coeffs))))


def approx_target(target: TargetFunction, degree: int, scale: float = DEFAULT_SCALE,
                  margin: float = DEFAULT_MARGIN, method: str = "minimax",
                  bound: float = BOUND) -> ChebyshevPoly:
    """
    Parity-matched Chebyshev approximation of scale·f on the region [margin, 1−margin]
    (odd, mirrored) or [−1+margin, 1−margin] (even), with |p| ≤ bound on [−1, 1].

    method="minimax"     linear program over the Chebyshev coefficients (HiGHS)
    method="projection"  Chebyshev-Gauss projection on 4n nodes, rescaled into the bound
    Custom targets are always fitted with the linear program.
    """
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if _degree_parity(degree) != target.parity:
        raise ParityError(f"{target.kind} needs {target.parity} degree, got {degree}")
    if not 0 < scale <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    if not 0 < margin < 0.5:
        raise ValueError(f"margin must lie in (0, 0.5), got {margin}")

    if method == "minimax" or target.kind == "custom":
        coeffs = _minimax_coeffs(target, degree, scale, margin, bound)
    elif method == "projection":
        coeffs = _projection_coeffs(target, degree, scale)
    else:
        raise ValueError(f"unknown approximation method {method!r}")

    wrong = 0 if target.parity == ODD else 1
    coeffs[wrong::2] = 0.0
    peak = float(np.max(np.abs(C.chebval(np.linspace(-1, 1, CHECK_GRID), coeffs))))
    if peak > bound:
        coeffs *= bound / peak
    err = _region_error(target, coeffs, scale, margin)
    return ChebyshevPoly(coeffs, target.parity, scale, margin, err, bound)


# ── Scalar QSP ────────────────────────────────────────────────────────────────

def _iterates(x: np.ndarray, convention: str) -> np.ndarray:
    s = np.sqrt(np.clip(1 - x * x, 0, None))
    M = np.empty((x.size, 2, 2), dtype=complex)
    if convention == WX:
        M[:, 0, 0] = x
        M[:, 0, 1] = 1j * s
        M[:, 1, 0] = 1j * s
        M[:, 1, 1] = x
    else:
        M[:, 0, 0] = x
        M[:, 0, 1] = s
        M[:, 1, 0] = s
        M[:, 1, 1] = -x
    return M


_Z = np.array([1.0, -1.0])


def _response(angles, convention: str, x: np.ndarray) -> np.ndarray:
    """⟨0|·|0⟩ of the QSP product at every x (row-vector sweep)."""
    M = _iterates(x, convention)
    phases = np.exp(1j * np.outer(angles, _Z))     # (n+1, 2)
    row = np.zeros((x.size, 2), dtype=complex)
    row[:, 0] = 1.0
    row = row * phases[0]
    for k in range(1, len(angles)):
        row = np.einsum("na,nab->nb", row, M) * phases[k]
    return row[:, 0]


def qsp_response(ps: PhaseSequence, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1):
        raise ValueError("QSP signal must lie in [-1, 1]")
    return _response(ps.angles, ps.convention, x)


def qsp_response_scalar(ps: PhaseSequence, x: float) -> complex:
    return complex(qsp_response(ps, [x])[0])


def convert_wx_to_r(ps: PhaseSequence) -> PhaseSequence:
    if ps.convention != WX:
        raise ConventionError(f"expected Wx phases, got {ps.convention}")
    L = ps.degree
    phi = np.array(ps.angles)
    if L == 0:
        # no W(x) factors to absorb; both end shifts would land on phi[0]
        return PhaseSequence(tuple(phi), R, ps.parity, ps.residual)
    phi[0] += (2 * L - 1) * math.pi / 4
    phi[1:L] -= math.pi / 2
    phi[L] -= math.pi / 4
    return PhaseSequence(tuple(phi), R, ps.parity, ps.residual)


# ── Phase solver ──────────────────────────────────────────────────────────────

def _expand(r: np.ndarray, degree: int) -> np.ndarray:
    if degree % 2:
        return np.concatenate([r, r[::-1]])
    return np.concatenate([r, r[-2::-1]])


def _fold(g: np.ndarray, degree: int) -> np.ndarray:
    half = len(g) // 2 if degree % 2 else degree // 2 + 1
    out = g[:half].copy()
    mirror = g[::-1][:half]
    if degree % 2:
        return out + mirror
    out[:-1] += mirror[:-1]
    return out


def _residual_jacobian(phi: np.ndarray, W: np.ndarray, target: np.ndarray):
    """Residuals Re⟨0|U|0⟩ − p at the nodes and their Jacobian in the full phases."""
    n1 = len(phi)
    N = W.shape[0]
    e = np.exp(1j * np.outer(phi, _Z))             # (n+1, 2)

    left = np.empty((n1, N, 2), dtype=complex)
    row = np.zeros((N, 2), dtype=complex)
    row[:, 0] = 1.0
    left[0] = row
    for k in range(1, n1):
        row = np.einsum("na,nab->nb", row * e[k - 1], W)
        left[k] = row

    right = np.empty((n1, N, 2), dtype=complex)
    col = np.zeros((N, 2), dtype=complex)
    col[:, 0] = 1.0
    right[-1] = col
    for k in range(n1 - 2, -1, -1):
        col = np.einsum("nab,nb->na", W, e[k + 1] * col)
        right[k] = col

    value = np.sum(left[0] * e[0] * right[0], axis=1)
    jac = np.real(np.sum(left * (1j * _Z * e)[:, None, :] * right, axis=2)).T   # (N, n+1)
    return value.real - target, jac


def _nodes(count: int) -> np.ndarray:
    j = np.arange(1, count + 1)
    return np.cos((2 * j - 1) * np.pi / (4 * count))


def solve_phases(poly: ChebyshevPoly, seed: int = 0, tol: float = RESIDUAL_TOL,
                 max_restarts: int = MAX_RESTARTS) -> PhaseSequence:
    """
    Symmetric Wx phases whose Re⟨0|U|0⟩ matches poly at the positive Chebyshev nodes.

    BFGS from (π/4, 0, …, 0, π/4), then a Levenberg-Marquardt polish, restarting from
    jittered copies of the best point. Raises PhaseSolveError with the best sequence
    when no attempt reaches tol.
    """
    n = poly.degree
    count = math.ceil((n + 1) / 2)
    x = _nodes(count)
    W = _iterates(x, WX)
    target = poly(x)

    def rms(r):
        res, _ = _residual_jacobian(_expand(r, n), W, target)
        return float(np.sqrt(np.mean(res ** 2)))

    def loss(r):
        res, jac = _residual_jacobian(_expand(r, n), W, target)
        return 0.5 * float(res @ res), _fold(jac.T @ res, n)

    def residuals(r):
        return _residual_jacobian(_expand(r, n), W, target)[0]

    def jacobian(r):
        _, jac = _residual_jacobian(_expand(r, n), W, target)
        return np.stack([_fold(g, n) for g in jac])

    def finish(r, err):
        return PhaseSequence(tuple(_expand(r, n)), WX, poly.parity, err)

    # bare iterate: zero phases already realize T_n
    zero = np.zeros(count)
    err = rms(zero)
    if err <= tol:
        return finish(zero, err)

    peak = poly.max_abs()
    if peak > 1 - 1e-6:
        raise ValueError(f"|p| reaches {peak:.9f}; phase solving needs |p| < 1 - 1e-6")

    rng = np.random.default_rng(seed)
    start = np.zeros(count)
    start[0] = math.pi / 4
    best, best_err = start, rms(start)
    for attempt in range(max_restarts + 1):
        r0 = start if attempt == 0 else best + rng.normal(scale=0.1, size=count)
        res = minimize(loss, r0, jac=True, method="BFGS",
                       options={"gtol": 1e-14, "maxiter": 5000})
        polished = least_squares(residuals, res.x, jac=jacobian, method="lm",
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        r = polished.x
        err = rms(r)
        if err < best_err:
            best, best_err = r, err
        if best_err <= tol:
            return finish(best, best_err)

    raise PhaseSolveError(
        f"phase solver stopped at RMS residual {best_err:.3e} (needs {tol:g})",
        best=finish(best, best_err), residual=best_err)


@lru_cache(maxsize=64)
def design_phases(target: TargetFunction, degree: int, margin: float = DEFAULT_MARGIN,
                  scale: float = 1.0, method: str = "minimax") -> tuple[PhaseSequence, ChebyshevPoly]:
    poly = approx_target(target, degree, scale=scale, margin=margin, method=method)
    return solve_phases(poly), poly


# ── Degree selection ──────────────────────────────────────────────────────────

def minimal_degree(target: TargetFunction, margin: float, eps: float,
                   scale: float = 1.0, max_degree: int = 401) -> int:
    """Smallest degree of the target's parity whose approximation error is ≤ eps."""
    step0 = 1 if target.parity == ODD else 2

    def ok(n):
        return approx_target(target, n, scale=scale, margin=margin).approx_error <= eps

    lo, hi = None, step0
    while not ok(hi):
        lo = hi
        hi = 2 * hi + (1 if target.parity == ODD else 0)
        if hi > max_degree:
            raise ConvergenceError(f"no degree <= {max_degree} reaches error {eps:g}")
    if lo is None:
        return hi
    # invariant: lo fails, hi passes, both of the right parity
    while hi - lo > 2:
        mid = (lo + hi) // 2
        if _degree_parity(mid) != target.parity:
            mid += 1
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class DegreeScalingFit:
    slope: float
    intercept: float
    r_squared: float


def degree_scaling_fit(margins, degrees) -> DegreeScalingFit:
    """Least-squares fit degree ≈ slope/δ + intercept."""
    inv = 1.0 / np.asarray(margins, dtype=float)
    y = np.asarray(degrees, dtype=float)
    X = np.column_stack([inv, np.ones_like(inv)])
    (slope, intercept), *_ = np.linalg.lstsq(X, y, rcond=None)
    pred = X @ np.array([slope, intercept])
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DegreeScalingFit(float(slope), float(intercept), r2)


# ── Matrix-level QSVT ─────────────────────────────────────────────────────────

def _qsvt_unitary(angles, U: np.ndarray, d: int) -> np.ndarray:
    D = U.shape[0]
    zsign = np.where(np.arange(D) < d, 1.0, -1.0)
    Ud = U.conj().T
    n = len(angles) - 1
    M = np.diag(np.exp(1j * angles[n] * zsign))
    for j in range(1, n + 1):
        M = (U if j % 2 else Ud) @ M
        M = np.exp(1j * angles[n - j] * zsign)[:, None] * M
    return M


def qsvt_apply(ps: PhaseSequence, enc: BlockEncoding) -> BlockEncoding:
    """
    Real-part QSVT: the returned (1, ℓ+1) encoding has block Re P applied to the
    singular values of the encoded block (Σ Re P(σ)|w⟩⟨v| for odd degree,
    Σ Re P(σ)|v⟩⟨v| for even). The extra ancilla averages the sequences Φ and −Φ.
    """
    if ps.convention != R:
        raise ConventionError("qsvt_apply needs R-convention phases; use convert_wx_to_r")
    if abs(enc.alpha - 1.0) > 1e-12:
        raise EncodingError(f"qsvt_apply needs alpha = 1, got {enc.alpha}")
    d = enc.system_dim
    plus = _qsvt_unitary(ps.angles, enc.unitary, d)
    minus = _qsvt_unitary(tuple(-a for a in ps.angles), enc.unitary, d)
    D = plus.shape[0]
    H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    HI = np.kron(H, np.eye(D))
    zero = np.zeros((D, D), dtype=complex)
    combined = HI @ np.block([[plus, zero], [zero, minus]]) @ HI
    return BlockEncoding(combined, 1.0, enc.num_ancilla + 1, enc.error)
