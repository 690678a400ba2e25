"""
Dense Matrix Core

Matrix values and the primitives every other module builds on:
- validated constructors for dense matrices and 0/1 reveal masks
- the averaged Frobenius, Frobenius, l-infinity, operator and nuclear norms
- Hadamard products and simultaneous row/column permutations
- a one-sided Jacobi SVD (compiled sweeps in mclab._kernels)

A DenseMatrix is a 2-D float64 numpy array with at least one row and one
column and finite entries. Operations never modify their inputs.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from mclab._kernels import jacobi_sweeps
from mclab.errors import DimensionError, PreconditionError

logger = logging.getLogger(__name__)

# Off-diagonal rotations below this relative size count as converged
JACOBI_TOL = 1e-14
MAX_SWEEPS = 80
# Singular values at or below RANK_CUTOFF * sigma_1 are dropped
RANK_CUTOFF = 1e-12


# --- Constructors ---
def as_matrix(a) -> np.ndarray:
    """
    Validate and freeze a dense matrix.

    :param a: Anything numpy can turn into a 2-D real array.
    :return: A read-only float64 copy.
    :raises DimensionError: if the input is not 2-D with m, n >= 1.
    :raises PreconditionError: if an entry is NaN or infinite.
    """
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


def as_mask(a) -> np.ndarray:
    """Validate a reveal mask: a dense matrix whose entries are exactly 0 or 1."""
    arr = as_matrix(a)
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise PreconditionError("mask entries must be exactly 0 or 1")
    return arr


def check_unit_range(a, name: str = "matrix") -> np.ndarray:
    """Validate a fractional mask Q with entries in [0, 1]."""
    arr = as_matrix(a)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise PreconditionError(f"{name} entries must lie in [0, 1]")
    return arr


def _matrix(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    return arr


def require_same_shape(*mats: np.ndarray) -> Tuple[int, int]:
    shape = mats[0].shape
    for other in mats[1:]:
        if other.shape != shape:
            raise DimensionError(f"shape mismatch: {shape} vs {other.shape}")
    return shape


# --- Norms ---
def frobenius(A) -> float:
    return float(np.linalg.norm(_matrix(A)))


def avg_frobenius(A) -> float:
    """sqrt(mean(a_ij^2)), i.e. frobenius(A) / sqrt(mn)."""
    A = _matrix(A)
    return float(np.sqrt(np.mean(A * A)))


def linf_norm(A) -> float:
    return float(np.max(np.abs(_matrix(A))))


def hadamard(A, B) -> np.ndarray:
    """Entrywise product; with a reveal mask this zeroes the hidden entries."""
    A = _matrix(A)
    B = _matrix(B)
    require_same_shape(A, B)
    return A * B


# --- Permutations ---
@dataclass(frozen=True)
class PermPair:
    """Row permutation pi and column permutation tau, 0-based index arrays."""

    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        for name in ("rows", "cols"):
            perm = np.asarray(getattr(self, name), dtype=np.int64)
            if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
                raise PreconditionError(f"{name} is not a permutation of 0..{perm.size - 1}")
            perm = perm.copy()
            perm.setflags(write=False)
            object.__setattr__(self, name, perm)

    @classmethod
    def identity(cls, m: int, n: int) -> "PermPair":
        return cls(np.arange(m), np.arange(n))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows.size, self.cols.size


def apply_perm(A, p: PermPair) -> np.ndarray:
    """A^{pi,tau}: result[i, j] = A[pi(i), tau(j)]."""
    A = _matrix(A)
    if p.shape != A.shape:
        raise DimensionError(f"permutation sizes {p.shape} do not match matrix shape {A.shape}")
    return A[np.ix_(p.rows, p.cols)]


def compose_perm(p: PermPair, q: PermPair) -> PermPair:
    """The pair r with apply_perm(apply_perm(A, p), q) == apply_perm(A, r)."""
    if p.shape != q.shape:
        raise DimensionError(f"cannot compose permutations of sizes {p.shape} and {q.shape}")
    return PermPair(p.rows[q.rows], p.cols[q.cols])


def invert_perm(p: PermPair) -> PermPair:
    return PermPair(np.argsort(p.rows), np.argsort(p.cols))


# --- SVD ---
@dataclass(frozen=True)
class SvdFactors:
    """
    Rank-truncated singular value decomposition.

    u is m x r, s has length r (non-increasing, strictly positive), v is n x r.
    A zero matrix has r = 0.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    shape: Tuple[int, int]
    sweeps: int = 0
    converged: bool = True

    @property
    def rank(self) -> int:
        return int(self.s.size)

    def triples(self):
        for i in range(self.rank):
            yield self.s[i], self.u[:, i], self.v[:, i]


def _empty_factors(m: int, n: int) -> SvdFactors:
    return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)), (m, n))


def svd(A, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> SvdFactors:
    """
    One-sided Jacobi SVD.

    The sweeps run on the shorter side: wide inputs are transposed, and tall
    inputs are first reduced to their square R factor by a QR decomposition.
    Singular values at or below RANK_CUTOFF * sigma_1 are discarded.
    """
    A = _matrix(A)
    m, n = A.shape
    transposed = m < n
    W = A.T if transposed else A
    p, d = W.shape
    if not np.any(W):
        return _empty_factors(m, n)

    Q = None
    if p > d:
        Q, R = np.linalg.qr(W)
        G = np.ascontiguousarray(R.T)
    else:
        G = np.ascontiguousarray(W.T)
    V = np.eye(d)
    sweeps, converged = jacobi_sweeps(G, V, tol, max_sweeps, RANK_CUTOFF)
    if converged:
        logger.debug(f"svd - converged after {sweeps} sweeps on {m}x{n}")
    else:
        logger.warning(f"svd - no convergence after {sweeps} sweeps on {m}x{n}")

    sigma = np.sqrt(np.einsum("ij,ij->i", G, G))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    if sigma[0] <= 0.0:
        return _empty_factors(m, n)
    keep = sigma > RANK_CUTOFF * sigma[0]
    idx = order[keep]
    s = sigma[keep]
    left = (G[idx] / s[:, None]).T
    if Q is not None:
        left = Q @ left
    right = V[idx].T
    if transposed:
        left, right = right, left
    return SvdFactors(left, s, right, (m, n), int(sweeps), bool(converged))


def reconstruct(f: SvdFactors) -> np.ndarray:
    """Sum of sigma_i u_i v_i^T, shaped like the factorized matrix."""
    if f.rank == 0:
        return np.zeros(f.shape)
    return (f.u * f.s) @ f.v.T


def nuclear_norm(A) -> float:
    return float(np.sum(svd(A).s))


def operator_norm(A) -> float:
    s = svd(A).s
    return float(s[0]) if s.size else 0.0


def rank(A) -> int:
    return svd(A).rank


# --- Singular-triple bounds for matrices in the unit box ---
@dataclass
class TripleBounds:
    index: int
    sigma: float
    sigma_ok: bool
    u_ok: bool
    v_ok: bool
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.sigma_ok and self.u_ok and self.v_ok


def lemma_bounds_hold(A, slack: float = 1e-9) -> List[TripleBounds]:
    """
    Check sigma_i <= sqrt(mn), ||u_i||_inf <= sqrt(n)/sigma_i and
    ||v_i||_inf <= sqrt(m)/sigma_i for every singular triple of A.

    :raises PreconditionError: if ||A||_inf > 1.
    """
    A = _matrix(A)
    if linf_norm(A) > 1.0 + slack:
        raise PreconditionError("singular-triple bounds need ||A||_inf <= 1")
    m, n = A.shape
    root_mn = np.sqrt(m * n)
    checks = []
    for i, (sigma, u, v) in enumerate(svd(A).triples()):
        u_max = float(np.max(np.abs(u)))
        v_max = float(np.max(np.abs(v)))
        checks.append(TripleBounds(
            index=i,
            sigma=float(sigma),
            sigma_ok=sigma <= root_mn * (1.0 + slack),
            u_ok=u_max <= np.sqrt(n) / sigma * (1.0 + slack),
            v_ok=v_max <= np.sqrt(m) / sigma * (1.0 + slack),
            details={"u_max": u_max, "v_max": v_max},
        ))
    return checks
