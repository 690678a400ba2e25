"""
Asymmetric Graphons

A graphon here is a measurable W: [0,1]^2 -> [0,1] with no symmetry
requirement. Two concrete kinds:
- StepGraphon: constant on the rectangles of a row/column breakpoint grid
- AnalyticGraphon: a vectorized callable, integrated by dyadic midpoint rules

This module also holds the reveal-mask generators for the pattern families
(half rows, parity, Paley-type quasirandom) and the zero-measure functional
phi(eta) = |{W <= eta}| behind the recoverability criterion.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from mclab.errors import PreconditionError, QuadratureError
from mclab.matcore import PermPair, _matrix, as_mask

logger = logging.getLogger(__name__)

QUADRATURE_RTOL = 1e-8
MAX_QUADRATURE_DEPTH = 12
DEFAULT_ETAS = (0.0, 1e-4, 1e-3, 1e-2)
# Step-graphon sublevel areas are exact up to this rounding slack
STEP_ZERO_TOL = 1e-15
# Largest number of evaluator samples held in memory at once
_SAMPLE_CHUNK = 1 << 22


def _check_breaks(breaks, name: str) -> np.ndarray:
    arr = np.array(breaks, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise PreconditionError(f"{name} needs at least two breakpoints")
    if arr[0] != 0.0 or arr[-1] != 1.0:
        raise PreconditionError(f"{name} must start at 0 and end at 1")
    if np.any(np.diff(arr) <= 0.0):
        raise PreconditionError(f"{name} must be strictly increasing")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StepGraphon:
    """Piecewise-constant graphon: values[a, b] on [r_a, r_{a+1}] x [c_b, c_{b+1}]."""

    row_breaks: np.ndarray
    col_breaks: np.ndarray
    values: np.ndarray
    name: str = "step"

    def __post_init__(self):
        rows = _check_breaks(self.row_breaks, "row_breaks")
        cols = _check_breaks(self.col_breaks, "col_breaks")
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (rows.size - 1, cols.size - 1):
            raise PreconditionError(
                f"block values have shape {vals.shape}, breakpoints need {(rows.size - 1, cols.size - 1)}"
            )
        if not np.all(np.isfinite(vals)) or vals.min() < 0.0 or vals.max() > 1.0:
            raise PreconditionError("block values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "row_breaks", rows)
        object.__setattr__(self, "col_breaks", cols)
        object.__setattr__(self, "values", vals)

    @property
    def block_shape(self) -> Tuple[int, int]:
        return self.values.shape

    def evaluate(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        a = np.clip(np.searchsorted(self.row_breaks, x, side="right") - 1, 0, self.values.shape[0] - 1)
        b = np.clip(np.searchsorted(self.col_breaks, y, side="right") - 1, 0, self.values.shape[1] - 1)
        return self.values[a, b]


@dataclass(frozen=True)
class AnalyticGraphon:
    """
    Graphon given by a numpy-broadcastable evaluator f(x, y).

    The evaluator must be deterministic and reentrant; outputs are checked to
    lie in [0, 1]. Riemann integrability is assumed by the quadrature.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    quadrature_depth: int = MAX_QUADRATURE_DEPTH
    name: str = "analytic"

    def __post_init__(self):
        if self.quadrature_depth < 1:
            raise PreconditionError("quadrature_depth must be positive")

    @classmethod
    def from_scalar(cls, fn: Callable[[float, float], float], **kwargs) -> "AnalyticGraphon":
        return cls(np.vectorize(fn, otypes=[np.float64]), **kwargs)

    def evaluate(self, x, y) -> np.ndarray:
        vals = np.asarray(self.evaluator(x, y), dtype=np.float64)
        vals = np.broadcast_to(vals, np.broadcast_shapes(np.shape(x), np.shape(y)))
        if not np.all(np.isfinite(vals)) or vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
            raise PreconditionError(f"graphon {self.name} evaluated outside [0, 1]")
        return np.clip(vals, 0.0, 1.0)


Graphon = (StepGraphon, AnalyticGraphon)


# --- Reference graphons ---
def constant(p: float) -> StepGraphon:
    return StepGraphon([0.0, 1.0], [0.0, 1.0], [[p]], name=f"constant-{p:g}")


def half_plane() -> StepGraphon:
    """1 on [0, 1/2] x [0, 1], 0 elsewhere."""
    return StepGraphon([0.0, 0.5, 1.0], [0.0, 1.0], [[1.0], [0.0]], name="half-plane")


def diagonal_blocks() -> StepGraphon:
    """1 on the two diagonal quadrants, 0 on the off-diagonal ones."""
    return StepGraphon([0.0, 0.5, 1.0], [0.0, 0.5, 1.0], [[1.0, 0.0], [0.0, 1.0]], name="diagonal-blocks")


def step_from_matrix(A, name: str = "matrix") -> StepGraphon:
    """Graphon equal to a_ij on the (i, j) rectangle of the uniform m x n grid."""
    A = _matrix(A)
    m, n = A.shape
    return StepGraphon(np.linspace(0.0, 1.0, m + 1), np.linspace(0.0, 1.0, n + 1), A, name=name)


# --- Discretization ---
def _overlap(breaks: np.ndarray, k: int) -> np.ndarray:
    """k x p matrix: k * |[i/k, (i+1)/k] intersect [b_a, b_{a+1}]|."""
    grid = np.linspace(0.0, 1.0, k + 1)
    lo = np.maximum(grid[:-1, None], breaks[None, :-1])
    hi = np.minimum(grid[1:, None], breaks[None, 1:])
    return np.clip(hi - lo, 0.0, None) * k


def _midpoint_average(W: AnalyticGraphon, m: int, n: int, s: int) -> np.ndarray:
    xs = (np.arange(m * s) + 0.5) / (m * s)
    ys = (np.arange(n * s) + 0.5) / (n * s)
    cells = max(1, _SAMPLE_CHUNK // (s * s))
    band_cols = min(n, cells)
    band_rows = max(1, cells // band_cols)
    out = np.empty((m, n))
    for i0 in range(0, m, band_rows):
        i1 = min(m, i0 + band_rows)
        for j0 in range(0, n, band_cols):
            j1 = min(n, j0 + band_cols)
            vals = W.evaluate(xs[i0 * s:i1 * s, None], ys[None, j0 * s:j1 * s])
            out[i0:i1, j0:j1] = vals.reshape(i1 - i0, s, j1 - j0, s).mean(axis=(1, 3))
    return out


def discretize(W, m: int, n: int) -> np.ndarray:
    """
    W_{m,n}: entry (i, j) is the average of W over the (i, j) grid rectangle.

    Step graphons are integrated exactly by block overlaps. Analytic graphons
    use midpoint rules with 2^d samples per cell side, d increasing until two
    successive estimates agree to QUADRATURE_RTOL.

    :raises QuadratureError: if the analytic rule has not settled by the maximum depth.
    """
    if m < 1 or n < 1:
        raise PreconditionError(f"discretize needs m, n >= 1, got {m} x {n}")
    if isinstance(W, StepGraphon):
        R = _overlap(W.row_breaks, m)
        C = _overlap(W.col_breaks, n)
        return np.clip(R @ W.values @ C.T, 0.0, 1.0)

    max_depth = min(W.quadrature_depth, MAX_QUADRATURE_DEPTH)
    previous = _midpoint_average(W, m, n, 1)
    residual = np.inf
    tolerance = QUADRATURE_RTOL
    for depth in range(1, max_depth + 1):
        current = _midpoint_average(W, m, n, 1 << depth)
        residual = float(np.max(np.abs(current - previous)))
        tolerance = QUADRATURE_RTOL * max(1.0, float(np.max(np.abs(current))))
        if residual <= tolerance:
            logger.debug(f"discretize - {W.name} settled at depth {depth} on {m}x{n}")
            return np.clip(current, 0.0, 1.0)
        previous = current
    raise QuadratureError(max_depth, residual, tolerance)


# --- Zero-measure functional ---
class ZeroMeasureReport(BaseModel):
    eta_grid: List[float]
    phi_values: List[float]
    admits_recovery: bool
    resolution_warning: Optional[str] = None

    @property
    def phi_zero(self) -> float:
        return self.phi_values[self.eta_grid.index(0.0)]


def _block_areas(W: StepGraphon) -> np.ndarray:
    return np.outer(np.diff(W.row_breaks), np.diff(W.col_breaks))


def _grid_sublevel_fractions(W: AnalyticGraphon, etas: Sequence[float], depth: int) -> List[float]:
    side = 1 << depth
    centers = (np.arange(side) + 0.5) / side
    counts = np.zeros(len(etas))
    band = max(1, _SAMPLE_CHUNK // side)
    for i0 in range(0, side, band):
        vals = W.evaluate(centers[i0:i0 + band, None], centers[None, :])
        for t, eta in enumerate(etas):
            counts[t] += np.count_nonzero(vals <= eta)
    return list(counts / float(side * side))


def zero_measure(W, eta: float) -> float:
    """phi(eta): Lebesgue measure of {(x, y): W(x, y) <= eta}."""
    if isinstance(W, StepGraphon):
        return float(np.sum(_block_areas(W)[W.values <= eta]))
    return _grid_sublevel_fractions(W, [eta], W.quadrature_depth)[0]


def recovery_verdict(W, eta_grid: Sequence[float] = DEFAULT_ETAS) -> ZeroMeasureReport:
    """
    Recoverability criterion: the pattern sequence converging to W admits
    stable recovery iff W is nonzero almost everywhere, i.e. phi(0) = 0.
    """
    etas = sorted(set(float(e) for e in eta_grid) | {0.0})
    if etas[0] < 0.0 or etas[-1] > 1.0:
        raise PreconditionError("eta values must lie in [0, 1]")
    warning = None
    if isinstance(W, StepGraphon):
        phis = [zero_measure(W, eta) for eta in etas]
        admits = phis[0] <= STEP_ZERO_TOL
    else:
        phis = _grid_sublevel_fractions(W, etas, W.quadrature_depth)
        admits = phis[0] == 0.0
        side = 1 << W.quadrature_depth
        warning = f"phi estimated on a {side}x{side} center grid; zero sets thinner than 1/{side} are invisible"
    # sublevel sets grow with eta
    phis = list(np.maximum.accumulate(phis))
    if admits and len(phis) > 1 and phis[1] > 0.0:
        note = f"phi({etas[1]:g}) = {phis[1]:.3g} > 0: W is small on a set of positive measure"
        warning = note if warning is None else f"{warning}; {note}"
    logger.info(f"recovery_verdict - {getattr(W, 'name', 'graphon')}: phi(0) = {phis[0]:.6g}")
    return ZeroMeasureReport(eta_grid=etas, phi_values=phis, admits_recovery=admits, resolution_warning=warning)


def recovery_modulus(W, delta: float, etas: Optional[Sequence[float]] = None, L: float = 1.0) -> Tuple[float, float]:
    """
    Finite form of the sufficiency bound: if the masked discrepancy is at most
    delta in the limit, then limsup ||A_k - B_k||_F <= 2 L sqrt(phi(eta)) + delta / eta
    for every eta in (0, 1). Returns (best bound, minimizing eta).
    """
    if delta < 0.0:
        raise PreconditionError("delta must be nonnegative")
    grid = np.geomspace(1e-6, 0.5, 60) if etas is None else np.asarray(etas, dtype=np.float64)
    grid = grid[(grid > 0.0) & (grid < 1.0)]
    if grid.size == 0:
        raise PreconditionError("need at least one eta in (0, 1)")
    if isinstance(W, StepGraphon):
        phis = np.array([zero_measure(W, eta) for eta in grid])
    else:
        phis = np.array(_grid_sublevel_fractions(W, list(grid), W.quadrature_depth))
    bounds = 2.0 * L * np.sqrt(phis) + delta / grid
    best = int(np.argmin(bounds))
    return float(bounds[best]), float(grid[best])


def dyadic_witness(W, m: int, n: int, level: int) -> np.ndarray:
    """
    Counterexample matrix for a graphon that vanishes on a set of positive
    measure: T is the union of the dyadic squares of side 2^-level on which W
    is zero, and B[i, j] = 1 iff the grid point (i/m, j/n) lies in T (1-based).

    B is binary with at most 4^level blocks, and ||B o P_k||_F tends to 0 for
    masks converging to W while ||B||_F stays near sqrt(|T|).
    """
    if level < 0:
        raise PreconditionError("level must be nonnegative")
    side = 1 << level
    if isinstance(W, StepGraphon):
        rows = _overlap(W.row_breaks, side) > 0.0
        cols = _overlap(W.col_breaks, side) > 0.0
        positive = (W.values > 0.0).astype(np.float64)
        zero_square = (rows.astype(np.float64) @ positive @ cols.T.astype(np.float64)) == 0.0
    else:
        sub = 1 << max(0, min(W.quadrature_depth, 10) - level)
        fine = side * sub
        centers = (np.arange(fine) + 0.5) / fine
        vals = W.evaluate(centers[:, None], centers[None, :])
        zero_square = vals.reshape(side, sub, side, sub).max(axis=(1, 3)) <= 0.0

    xi = np.minimum((np.arange(1, m + 1) / m * side).astype(np.int64), side - 1)
    yj = np.minimum((np.arange(1, n + 1) / n * side).astype(np.int64), side - 1)
    return zero_square[np.ix_(xi, yj)].astype(np.float64)


def l1_distance(W1, W2, depth: int = 10) -> float:
    """
    L1 distance of two graphons. Exact for two step graphons (common
    refinement of breakpoints); otherwise a midpoint rule on a 2^depth grid.
    """
    if isinstance(W1, StepGraphon) and isinstance(W2, StepGraphon):
        rows = np.union1d(W1.row_breaks, W2.row_breaks)
        cols = np.union1d(W1.col_breaks, W2.col_breaks)
        xm = (rows[:-1] + rows[1:]) / 2.0
        ym = (cols[:-1] + cols[1:]) / 2.0
        diff = np.abs(W1.evaluate(xm[:, None], ym[None, :]) - W2.evaluate(xm[:, None], ym[None, :]))
        return float(np.sum(diff * np.outer(np.diff(rows), np.diff(cols))))
    side = 1 << depth
    centers = (np.arange(side) + 0.5) / side
    diff = np.abs(W1.evaluate(centers[:, None], centers[None, :]) - W2.evaluate(centers[:, None], centers[None, :]))
    return float(np.mean(diff))


# --- Mask generators ---
def gen_full(k: int) -> np.ndarray:
    if k < 1:
        raise PreconditionError("k must be positive")
    return as_mask(np.ones((k, k)))


def gen_half_rows(k: int) -> np.ndarray:
    """k x k mask revealing only the top floor(k/2) rows."""
    if k < 2:
        raise PreconditionError("half-rows mask needs k >= 2")
    mask = np.zeros((k, k))
    mask[: k // 2] = 1.0
    return as_mask(mask)


def gen_parity(k: int) -> np.ndarray:
    """mask[i, j] = 1 iff i and j have the same parity."""
    if k < 2 or k % 2:
        raise PreconditionError("parity mask needs an even k >= 2")
    idx = np.arange(k)
    return as_mask((idx[:, None] % 2 == idx[None, :] % 2).astype(np.float64))


def gen_diagonal_blocks(k: int) -> np.ndarray:
    """Two k/2 x k/2 all-ones blocks on the diagonal."""
    if k < 2 or k % 2:
        raise PreconditionError("block mask needs an even k >= 2")
    half = k // 2
    mask = np.zeros((k, k))
    mask[:half, :half] = 1.0
    mask[half:, half:] = 1.0
    return as_mask(mask)


def parity_block_perm(k: int) -> PermPair:
    """
    Relabeling that clumps the parity mask into two diagonal blocks: the
    even-numbered (1-based) rows and columns go first, the odd ones after.
    """
    if k < 2 or k % 2:
        raise PreconditionError("parity permutation needs an even k >= 2")
    order = np.concatenate([np.arange(1, k, 2), np.arange(0, k, 2)])
    return PermPair(order, order.copy())


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, math.isqrt(q) + 1))


def paley_prime(k: int) -> int:
    """Smallest prime q >= k with q = 1 (mod 4)."""
    q = max(k, 5)
    while not (q % 4 == 1 and _is_prime(q)):
        q += 1
    return q


def gen_quasirandom(k: int, density: float = 0.5) -> np.ndarray:
    """
    Deterministic Paley-type mask. With q = paley_prime(k) and 1-based i, j:
    density 1/2 reveals (i, j) iff (i + j) mod q is a nonzero quadratic
    residue; other densities reveal (i, j) iff (i * j mod q) / q < density.
    """
    if k < 2:
        raise PreconditionError("quasirandom mask needs k >= 2")
    if not 0.0 < density < 1.0:
        raise PreconditionError(f"density must lie in (0, 1), got {density}")
    q = paley_prime(k)
    idx = np.arange(1, k + 1)
    if math.isclose(density, 0.5):
        residues = np.zeros(q, dtype=bool)
        residues[(np.arange(1, q) ** 2) % q] = True
        residues[0] = False
        mask = residues[(idx[:, None] + idx[None, :]) % q]
    else:
        mask = ((idx[:, None] * idx[None, :]) % q) / q < density
    return as_mask(mask.astype(np.float64))
