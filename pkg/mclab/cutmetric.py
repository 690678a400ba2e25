"""
Cut Norm and Cut Distance

||A||_cut = max |x^T A y| / (mn) over x in [-1,1]^m, y in [-1,1]^n.
The bilinear form peaks at sign vectors, so the exact value enumerates the
sign vectors of the shorter side and closes the other side with sign(A^T x).

Available estimates:
- cut_norm_exact: Gray-code enumeration (short side up to LAB_CUT_EXACT_LIMIT)
- cut_norm_lower: alternating sign maximization from seeded random starts
- cut_norm_upper: min(sigma_1 / sqrt(mn), mean |a_ij|)
- cut_distance_exact / cut_distance_heuristic: min over row and column
  relabelings of the cut norm of A^{pi,tau} - B
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

import utils
from mclab._kernels import anneal_permutations, cut_distance_search, gray_cut_enum
from mclab.errors import EnumerationLimitError
from mclab.graphon import discretize
from mclab.matcore import PermPair, _matrix, apply_perm, operator_norm, require_same_shape
from mclab.models import AnnealConfig

logger = logging.getLogger(__name__)

# Heuristic cut distances are re-scored exactly when the short side fits this
RESCORE_EXACT_LIMIT = 16


@dataclass
class CutNormEstimate:
    lower_bound: float
    upper_bound: float
    witness_x: np.ndarray
    witness_y: np.ndarray
    exact: bool

    @property
    def value(self) -> float:
        return self.lower_bound


@dataclass
class CutDistanceEstimate:
    """An upper bound on the cut distance, exact when `exact` is set."""

    value: float
    exact: bool
    perm: PermPair

    def __float__(self) -> float:
        return self.value


def _sign(v: np.ndarray) -> np.ndarray:
    # zero resolves to +1
    return np.where(v >= 0.0, 1.0, -1.0)


def _bilinear(A: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    m, n = A.shape
    return abs(float(x @ A @ y)) / (m * n)


def cut_norm_exact(A, limit: Optional[int] = None) -> CutNormEstimate:
    """
    Exact cut norm by enumerating 2^(d-1) sign vectors on the shorter side d.

    :param limit: Largest short side to enumerate. Falls back to LAB_CUT_EXACT_LIMIT.
    :raises EnumerationLimitError: if min(m, n) exceeds the limit.
    """
    A = _matrix(A)
    limit = utils.CUT_EXACT_LIMIT if limit is None else limit
    m, n = A.shape
    transposed = m > n
    M = np.ascontiguousarray(A.T if transposed else A)
    d = M.shape[0]
    if d > limit:
        raise EnumerationLimitError("cut_norm_exact", d, limit)

    _, x = gray_cut_enum(M)
    y = _sign(M.T @ x)
    if transposed:
        x, y = y, x
    value = _bilinear(A, x, y)
    return CutNormEstimate(value, value, x, y, True)


def cut_norm_upper(A) -> float:
    """Certified upper bound min(sigma_1 / sqrt(mn), mean |a_ij|)."""
    A = _matrix(A)
    m, n = A.shape
    spectral = operator_norm(A) / np.sqrt(m * n)
    return float(min(spectral, np.mean(np.abs(A))))


def cut_norm_lower(A, restarts: int = 50, seed: int = 0, max_iter: int = 100) -> CutNormEstimate:
    """
    Alternating maximization: y random, then x <- sign(A y), y <- sign(A^T x)
    until a fixed point. The best value over restarts is a feasible lower bound.
    """
    A = _matrix(A)
    m, n = A.shape
    rng = np.random.default_rng(seed)
    best_val = -1.0
    best_x = np.ones(m)
    best_y = np.ones(n)
    for _ in range(max(1, restarts)):
        y = rng.choice(np.array([-1.0, 1.0]), size=n)
        x = _sign(A @ y)
        for _ in range(max_iter):
            y_next = _sign(A.T @ x)
            x_next = _sign(A @ y_next)
            if np.array_equal(x_next, x) and np.array_equal(y_next, y):
                break
            x, y = x_next, y_next
        val = _bilinear(A, x, y)
        if val > best_val:
            best_val, best_x, best_y = val, x, y
    upper = max(cut_norm_upper(A), best_val)
    return CutNormEstimate(best_val, upper, best_x, best_y, False)


def cut_norm(A, exact_limit: Optional[int] = None, restarts: int = 50, seed: int = 0) -> CutNormEstimate:
    """Exact when the short side is within the limit, else the lower/upper sandwich."""
    A = _matrix(A)
    limit = utils.CUT_EXACT_LIMIT if exact_limit is None else exact_limit
    if min(A.shape) <= limit:
        return cut_norm_exact(A, limit)
    return cut_norm_lower(A, restarts, seed)


def _sign_vectors(d: int) -> np.ndarray:
    """All sign vectors of length d with first entry +1."""
    if d == 1:
        return np.ones((1, 1))
    rest = np.array(list(itertools.product((1.0, -1.0), repeat=d - 1)), dtype=np.float64)
    return np.hstack([np.ones((rest.shape[0], 1)), rest])


def cut_distance_exact(A, B, limit: Optional[int] = None) -> CutDistanceEstimate:
    """
    min over all (pi, tau) of cut_norm_exact(A^{pi,tau} - B), by exhaustive
    search with pruning.

    :raises DimensionError: if the shapes differ.
    :raises EnumerationLimitError: if m or n exceeds the limit.
    """
    A = _matrix(A)
    B = _matrix(B)
    require_same_shape(A, B)
    limit = utils.CUT_DISTANCE_EXACT_LIMIT if limit is None else limit
    m, n = A.shape
    if max(m, n) > limit:
        raise EnumerationLimitError("cut_distance_exact", max(m, n), limit)

    transposed = m > n
    A_w = np.ascontiguousarray(A.T if transposed else A)
    B_w = np.ascontiguousarray(B.T if transposed else B)
    d, w = A_w.shape
    row_perms = np.array(list(itertools.permutations(range(d))), dtype=np.int64)
    col_perms = np.array(list(itertools.permutations(range(w))), dtype=np.int64)
    _, r, c = cut_distance_search(A_w, B_w, row_perms, col_perms, _sign_vectors(d))
    if transposed:
        perm = PermPair(col_perms[c], row_perms[r])
    else:
        perm = PermPair(row_perms[r], col_perms[c])
    value = cut_norm_exact(apply_perm(A, perm) - B, limit=min(m, n)).lower_bound
    logger.debug(f"cut_distance_exact - {m}x{n} value {value:.6g}")
    return CutDistanceEstimate(value, True, perm)


def _rank_matching(a_sums: np.ndarray, b_sums: np.ndarray) -> np.ndarray:
    # index t of B receives the index of A with the same rank
    ra = np.argsort(a_sums, kind="stable")
    rb = np.argsort(b_sums, kind="stable")
    perm = np.empty_like(ra)
    perm[rb] = ra
    return perm


def sorted_start(A: np.ndarray, B: np.ndarray) -> PermPair:
    """Relabeling that matches row and column sums of A to those of B by rank."""
    return PermPair(
        _rank_matching(A.sum(axis=1), B.sum(axis=1)),
        _rank_matching(A.sum(axis=0), B.sum(axis=0)),
    )


def rescore(D: np.ndarray) -> float:
    if min(D.shape) <= RESCORE_EXACT_LIMIT:
        return cut_norm_exact(D, limit=RESCORE_EXACT_LIMIT).lower_bound
    return cut_norm_upper(D)


def cut_distance_heuristic(A, B, seed: int = 0, cfg: Optional[AnnealConfig] = None) -> CutDistanceEstimate:
    """
    Upper bound on the cut distance by simulated annealing over pairwise row
    and column swaps, started from the sum-sorted matching.

    The annealing score is a certified cut-norm upper bound; the permutation
    it settles on is re-scored with cut_norm_exact on small matrices and with
    cut_norm_upper otherwise.
    """
    A = _matrix(A)
    B = _matrix(B)
    require_same_shape(A, B)
    cfg = cfg or AnnealConfig()
    m, n = A.shape
    start = sorted_start(A, B)
    A_c = np.ascontiguousarray(A)
    B_c = np.ascontiguousarray(B)
    restart_seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=cfg.restarts)

    best_score = np.inf
    best_perm = start
    for r, restart_seed in enumerate(restart_seeds):
        score, rp, cp = anneal_permutations(
            A_c, B_c, start.rows.copy(), start.cols.copy(),
            cfg.levels, cfg.decay, cfg.proposals_per_size * (m + n), int(restart_seed),
        )
        logger.debug(f"cut_distance_heuristic - restart {r} proxy score {score:.6g}")
        if score < best_score:
            best_score = score
            best_perm = PermPair(rp, cp)
        if best_score <= 0.0:
            break
    value = rescore(apply_perm(A, best_perm) - B)
    return CutDistanceEstimate(value, False, best_perm)


def cut_distance(A, B, seed: int = 0, cfg: Optional[AnnealConfig] = None,
                 exact_limit: Optional[int] = None) -> CutDistanceEstimate:
    """Exact search when both sides fit the enumeration limit, else annealing."""
    A = _matrix(A)
    limit = utils.CUT_DISTANCE_EXACT_LIMIT if exact_limit is None else exact_limit
    if max(A.shape) <= limit:
        return cut_distance_exact(A, B, limit)
    return cut_distance_heuristic(A, B, seed, cfg)


def cut_distance_to_graphon(A, W, seed: int = 0, cfg: Optional[AnnealConfig] = None) -> CutDistanceEstimate:
    """delta(A, W) := delta(A, W_{m,n}), W discretized at A's dimensions."""
    A = _matrix(A)
    m, n = A.shape
    return cut_distance(A, discretize(W, m, n), seed, cfg)


def convergence_profile(masks: Sequence[np.ndarray], W, seed: int = 0,
                        cfg: Optional[AnnealConfig] = None) -> List[Tuple[Tuple[int, int], CutDistanceEstimate]]:
    """Cut distance from each mask of a sequence to W, keyed by mask shape."""
    profile = []
    for P in masks:
        P = _matrix(P)
        estimate = cut_distance_to_graphon(P, W, seed, cfg)
        logger.info(f"convergence_profile - {P.shape[0]}x{P.shape[1]}: {estimate.value:.6g}")
        profile.append((P.shape, estimate))
    return profile
