"""
Block Approximation

Constructive block structures for dense matrices:
- block_average: A^{P,Q}, each block replaced by its mean
- block_approximate_pair: simultaneous block approximation of two bounded,
  low-nuclear-norm matrices through quantized singular vectors
- block_transfer_bound: the inequality moving a masked Frobenius bound from
  one mask P to another mask Q through ||P - Q||_cut
- refinement_sequence: nested partitions whose block averages approximate A
  in cut norm to 2/j + 6 j^3 2^-j
- limit_estimate: a step-graphon estimate of the limit of a mask sequence
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

import utils
from mclab.cutmetric import cut_norm_exact, cut_norm_upper
from mclab.errors import DimensionError, PreconditionError
from mclab.graphon import StepGraphon
from mclab.matcore import (
    PermPair,
    _matrix,
    apply_perm,
    as_mask,
    avg_frobenius,
    check_unit_range,
    linf_norm,
    require_same_shape,
    svd,
)

logger = logging.getLogger(__name__)

MAX_REFINEMENT_LEVEL = 8
# Absolute slack when snapping quantized components onto the grid
_SNAP = 1e-12
# Scaled singular vectors are rounded to this many binary digits before flooring
_DYADIC_BITS = 40
_SLACK = 1e-9


# --- Partitions ---
@dataclass(frozen=True)
class PartitionPair:
    """Row partition and column partition, each a tuple of sorted index tuples."""

    rows: Tuple[Tuple[int, ...], ...]
    cols: Tuple[Tuple[int, ...], ...]
    shape: Tuple[int, int]

    def __post_init__(self):
        for name, parts, size in (("rows", self.rows, self.shape[0]), ("cols", self.cols, self.shape[1])):
            if any(len(part) == 0 for part in parts):
                raise PreconditionError(f"{name} partition has an empty part")
            members = sorted(i for part in parts for i in part)
            if members != list(range(size)):
                raise PreconditionError(f"{name} partition does not cover 0..{size - 1} exactly once")

    @property
    def block_count(self) -> int:
        return len(self.rows) * len(self.cols)

    def row_labels(self) -> np.ndarray:
        return _labels(self.rows, self.shape[0])

    def col_labels(self) -> np.ndarray:
        return _labels(self.cols, self.shape[1])

    @classmethod
    def singletons(cls, m: int, n: int) -> "PartitionPair":
        return cls(tuple((i,) for i in range(m)), tuple((j,) for j in range(n)), (m, n))

    @classmethod
    def whole(cls, m: int, n: int) -> "PartitionPair":
        return cls((tuple(range(m)),), (tuple(range(n)),), (m, n))

    @classmethod
    def from_labels(cls, row_labels, col_labels) -> "PartitionPair":
        rows = partition_from_labels(row_labels)
        cols = partition_from_labels(col_labels)
        return cls(rows, cols, (len(row_labels), len(col_labels)))

    @classmethod
    def regular(cls, m: int, n: int, p: int, q: int) -> "PartitionPair":
        """Contiguous near-equal parts: p row intervals and q column intervals."""
        return cls.from_labels(np.arange(m) * p // m, np.arange(n) * q // n)


def _labels(parts, size: int) -> np.ndarray:
    labels = np.empty(size, dtype=np.int64)
    for a, part in enumerate(parts):
        labels[list(part)] = a
    return labels


def partition_from_labels(labels) -> Tuple[Tuple[int, ...], ...]:
    """Group indices by label; parts ordered by their smallest member."""
    labels = np.asarray(labels)
    groups: Dict[object, List[int]] = {}
    for i, label in enumerate(labels.tolist()):
        groups.setdefault(label, []).append(i)
    return tuple(sorted((tuple(g) for g in groups.values()), key=lambda g: g[0]))


def is_refinement(fine: PartitionPair, coarse: PartitionPair) -> bool:
    """True when every part of `fine` sits inside one part of `coarse`, on both sides."""
    if fine.shape != coarse.shape:
        return False
    for fine_parts, coarse_labels in ((fine.rows, coarse.row_labels()), (fine.cols, coarse.col_labels())):
        for part in fine_parts:
            if np.unique(coarse_labels[list(part)]).size != 1:
                return False
    return True


def _require_partition(A: np.ndarray, part: PartitionPair) -> None:
    if part.shape != A.shape:
        raise DimensionError(f"partition shape {part.shape} does not match matrix shape {A.shape}")


def block_average(A, part: PartitionPair) -> np.ndarray:
    """
    A^{P,Q}: every block replaced by its average. Blocks that are already
    constant keep their value bit-for-bit.
    """
    A = _matrix(A)
    _require_partition(A, part)
    col_order = np.concatenate([np.asarray(c, dtype=np.int64) for c in part.cols])
    col_sizes = np.array([len(c) for c in part.cols])
    starts = np.concatenate([[0], np.cumsum(col_sizes)[:-1]])
    out = np.empty_like(A)
    for rows in part.rows:
        rows = np.asarray(rows, dtype=np.int64)
        sub = A[np.ix_(rows, col_order)]
        sums = np.add.reduceat(sub.sum(axis=0), starts)
        hi = np.maximum.reduceat(sub.max(axis=0), starts)
        lo = np.minimum.reduceat(sub.min(axis=0), starts)
        means = np.where(hi == lo, hi, sums / (rows.size * col_sizes))
        out[np.ix_(rows, col_order)] = np.repeat(means, col_sizes)[None, :]
    return out


def is_block_constant(A, part: PartitionPair, tol: float = 1e-12) -> bool:
    A = _matrix(A)
    return bool(np.max(np.abs(A - block_average(A, part))) <= tol)


def clump_perm(part: PartitionPair, row_keys=None, col_keys=None) -> Tuple[PermPair, PartitionPair]:
    """
    Permutation listing each class contiguously, classes ordered by size
    (descending) then by `*_keys` (default: smallest member). Returns the
    permutation and the partition in the permuted coordinates.
    """
    def order(parts, keys):
        if keys is None:
            keys = [part[0] for part in parts]
        ranked = sorted(range(len(parts)), key=lambda a: (-len(parts[a]), keys[a]))
        perm = np.concatenate([np.asarray(parts[a], dtype=np.int64) for a in ranked])
        sizes = [len(parts[a]) for a in ranked]
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        contiguous = tuple(tuple(range(bounds[t], bounds[t + 1])) for t in range(len(sizes)))
        return perm, contiguous

    rp, rparts = order(part.rows, row_keys)
    cp, cparts = order(part.cols, col_keys)
    return PermPair(rp, cp), PartitionPair(rparts, cparts, part.shape)


# --- Simultaneous block approximation ---
@dataclass
class BlockApproxResult:
    A: np.ndarray
    B: np.ndarray
    perm: PermPair
    partition: PartitionPair
    block_count: int
    err_x: float
    err_y: float
    params: Dict[str, float]
    retained: Tuple[int, int] = (0, 0)

    @property
    def log10_block_bound(self) -> float:
        """(20000 q^6 eps^-10)^(5 q^2 eps^-2), as a log10 to stay finite."""
        q, eps = self.params["q"], self.params["eps"]
        return 5.0 * q * q / (eps * eps) * math.log10(20000.0 * q ** 6 * eps ** -10)


def lemma_parameters(q: float, eps: float, m: int, n: int) -> Dict[str, float]:
    """beta solves (2^(2/3) + 2^(-1/3)) q^(2/3) beta^(1/3) = eps; alpha minimizes the error bound."""
    beta = (eps / ((2.0 ** (2.0 / 3.0) + 2.0 ** (-1.0 / 3.0)) * q ** (2.0 / 3.0))) ** 3
    alpha = 2.0 ** (4.0 / 3.0) * q ** (1.0 / 3.0) * beta ** (2.0 / 3.0)
    return {
        "q": q,
        "eps": eps,
        "alpha": alpha,
        "beta": beta,
        "delta": alpha * math.sqrt(m * n),
        "gamma": beta / math.sqrt(m),
        "eta": beta / math.sqrt(n),
    }


def _truncate(values: np.ndarray, grid: float) -> np.ndarray:
    """Integer multiples of `grid` closest to `values` with |result| <= |values|, as counts."""
    counts = np.floor(np.abs(values) / grid + _SNAP)
    return (np.sign(values) * counts).astype(np.int64)


def _classes(keys: np.ndarray) -> np.ndarray:
    if keys.shape[1] == 0:
        return np.zeros(keys.shape[0], dtype=np.int64)
    _, labels = np.unique(keys, axis=0, return_inverse=True)
    return labels.reshape(-1)


def block_approximate_pair(X, Y, q: float, eps: float) -> BlockApproxResult:
    """
    Simultaneous block approximation: truncate the SVDs of X and Y at delta,
    quantize singular vector components toward zero (gamma on the row side,
    eta on the column side), declare rows/columns equivalent when all their
    quantized components agree, clump the classes and clip to [-1, 1].

    :param q: Nuclear-norm budget, ||X||_* <= q sqrt(mn).
    :param eps: Target averaged-Frobenius error, in (0, 1).
    :raises PreconditionError: if ||X||_inf or ||Y||_inf exceeds 1, a nuclear
        norm exceeds q sqrt(mn), q < 1 or eps is outside (0, 1).
    """
    X = _matrix(X)
    Y = _matrix(Y)
    require_same_shape(X, Y)
    if q < 1.0:
        raise PreconditionError(f"q must be at least 1, got {q}")
    if not 0.0 < eps < 1.0:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}")
    if linf_norm(X) > 1.0 + _SLACK or linf_norm(Y) > 1.0 + _SLACK:
        raise PreconditionError("block approximation needs ||X||_inf, ||Y||_inf <= 1")
    m, n = X.shape
    params = lemma_parameters(q, eps, m, n)
    fx = svd(X)
    fy = svd(Y)
    for label, f in (("X", fx), ("Y", fy)):
        if float(np.sum(f.s)) > q * math.sqrt(m * n) * (1.0 + _SLACK):
            raise PreconditionError(f"nuclear norm of {label} exceeds q sqrt(mn)")

    k1 = int(np.count_nonzero(fx.s > params["delta"]))
    l1 = int(np.count_nonzero(fy.s > params["delta"]))
    gamma, eta = params["gamma"], params["eta"]
    ux, vx = _truncate(fx.u[:, :k1], gamma), _truncate(fx.v[:, :k1], eta)
    wy, zy = _truncate(fy.u[:, :l1], gamma), _truncate(fy.v[:, :l1], eta)

    X1 = (ux * gamma * fx.s[:k1]) @ (vx * eta).T if k1 else np.zeros((m, n))
    Y1 = (wy * gamma * fy.s[:l1]) @ (zy * eta).T if l1 else np.zeros((m, n))

    part = PartitionPair.from_labels(_classes(np.hstack([ux, wy])), _classes(np.hstack([vx, zy])))
    perm, clumped = clump_perm(part)
    A = np.clip(apply_perm(X1, perm), -1.0, 1.0)
    B = np.clip(apply_perm(Y1, perm), -1.0, 1.0)
    err_x = avg_frobenius(apply_perm(X, perm) - A)
    err_y = avg_frobenius(apply_perm(Y, perm) - B)
    logger.debug(
        f"block_approximate_pair - k1={k1} l1={l1} blocks={clumped.block_count} "
        f"errX={err_x:.4g} errY={err_y:.4g} eps={eps}"
    )
    return BlockApproxResult(A, B, perm, clumped, clumped.block_count, err_x, err_y, params, (k1, l1))


# --- Mask transfer inequality ---
@dataclass
class TransferBound:
    lhs: float
    rhs: float
    cut_distance: float
    cut_exact: bool
    blocks: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-12


def block_transfer_bound(A, B, part: PartitionPair, P, Q) -> TransferBound:
    """
    lhs = ||(A - B) o Q||_F and rhs = ||(A - B) o P||_F + sqrt(b ||P - Q||_cut) ||A - B||_inf
    for A, B block-constant on `part` with b blocks, P binary and Q in [0, 1].
    ||P - Q||_cut is exact when the short side fits the enumeration limit and
    replaced by its certified upper bound otherwise.
    """
    A = _matrix(A)
    B = _matrix(B)
    P = as_mask(P)
    Q = check_unit_range(Q, "Q")
    require_same_shape(A, B, P, Q)
    _require_partition(A, part)
    if not (is_block_constant(A, part) and is_block_constant(B, part)):
        raise PreconditionError("A and B must be constant on every block of the partition")
    D = A - B
    exact = min(D.shape) <= utils.CUT_EXACT_LIMIT
    cut = cut_norm_exact(P - Q).lower_bound if exact else cut_norm_upper(P - Q)
    b = part.block_count
    lhs = avg_frobenius(D * Q)
    rhs = avg_frobenius(D * P) + math.sqrt(b * cut) * linf_norm(D)
    return TransferBound(lhs, rhs, cut, exact, b)


# --- Refinement sequence ---
def refinement_bound(j: int) -> float:
    return 2.0 / j + 6.0 * j ** 3 * 2.0 ** (-j)


def size_bound(j: int) -> int:
    return (2 ** (j + 2) * j) ** (j * j)


@dataclass
class RefinementLevel:
    j: int
    partition: PartitionPair
    averaged: np.ndarray
    retained: int
    residual_bound: float
    bound_exact: bool
    status: str

    @property
    def target_bound(self) -> float:
        return refinement_bound(self.j)

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "rowClasses": len(self.partition.rows),
            "colClasses": len(self.partition.cols),
            "retained": self.retained,
            "residualBound": self.residual_bound,
            "boundExact": self.bound_exact,
            "bound": self.target_bound,
            "sizeBound": str(size_bound(self.j)),
            "status": self.status,
        }


@dataclass
class RefinementSequence:
    shape: Tuple[int, int]
    levels: List[RefinementLevel] = field(default_factory=list)

    def is_nested(self) -> bool:
        return all(is_refinement(b.partition, a.partition) for a, b in zip(self.levels, self.levels[1:]))

    def to_json(self) -> str:
        payload = {"shape": list(self.shape), "levels": [level.to_dict() for level in self.levels]}
        return json.dumps(payload, indent=2, sort_keys=True)


def refinement_sequence(A, j_max: int) -> RefinementSequence:
    """
    Nested partitions for j = 1..j_max from a single SVD of A: keep the
    l singular triples with sigma_i > sqrt(mn)/j, floor u-components to
    multiples of 2^-j m^-1/2 and v-components to multiples of 2^-j n^-1/2,
    and group rows (columns) whose floored components all agree.

    Each level stores A^{P_j,Q_j} and a certified bound on
    ||A - A^{P_j,Q_j}||_cut, classified against 2/j + 6 j^3 2^-j as
    certified, inconclusive (only the upper bound was available) or failed.
    """
    A = _matrix(A)
    if not 1 <= j_max <= MAX_REFINEMENT_LEVEL:
        raise PreconditionError(f"j_max must lie in 1..{MAX_REFINEMENT_LEVEL}, got {j_max}")
    if linf_norm(A) > 1.0 + _SLACK:
        raise PreconditionError("refinement sequence needs ||A||_inf <= 1")
    m, n = A.shape
    f = svd(A)
    u_grid = np.round(np.ldexp(f.u * math.sqrt(m), _DYADIC_BITS))
    v_grid = np.round(np.ldexp(f.v * math.sqrt(n), _DYADIC_BITS))
    exact = min(m, n) <= utils.CUT_EXACT_LIMIT

    seq = RefinementSequence((m, n))
    for j in range(1, j_max + 1):
        l = int(np.count_nonzero(f.s > math.sqrt(m * n) / j))
        # floors at scale 2^-j nest exactly across levels
        row_keys = np.floor(np.ldexp(u_grid[:, :l], j - _DYADIC_BITS)).astype(np.int64)
        col_keys = np.floor(np.ldexp(v_grid[:, :l], j - _DYADIC_BITS)).astype(np.int64)
        part = PartitionPair.from_labels(_classes(row_keys), _classes(col_keys))
        averaged = block_average(A, part)
        residual = A - averaged
        bound = cut_norm_exact(residual).lower_bound if exact else cut_norm_upper(residual)
        if bound <= refinement_bound(j):
            status = "certified"
        elif not exact:
            status = "inconclusive"
        else:
            status = "failed"
        logger.debug(
            f"refinement_sequence - j={j} l={l} classes={len(part.rows)}x{len(part.cols)} "
            f"residual<={bound:.4g} ({status})"
        )
        seq.levels.append(RefinementLevel(j, part, averaged, l, float(bound), exact, status))
    return seq


def hidden_block_witness(P, j: int) -> np.ndarray:
    """
    Indicator of the blocks of the level-j partition of P on which P is
    identically zero. Zero against this witness differs nowhere on the
    revealed entries.
    """
    P = as_mask(P)
    return zero_block_indicator(refinement_sequence(P, j).levels[-1])


def zero_block_indicator(level: RefinementLevel) -> np.ndarray:
    return (level.averaged == 0.0).astype(np.float64)


# --- Step-graphon limit estimate ---
def _canonical_step(level: RefinementLevel, shape: Tuple[int, int]) -> StepGraphon:
    m, n = shape
    part = level.partition
    averaged = level.averaged
    row_means = [float(np.mean(averaged[list(r)])) for r in part.rows]
    col_means = [float(np.mean(averaged[:, list(c)])) for c in part.cols]
    # size descending, then average value descending
    perm, clumped = clump_perm(part, [-v for v in row_means], [-v for v in col_means])
    row_sizes = np.array([len(r) for r in clumped.rows])
    col_sizes = np.array([len(c) for c in clumped.cols])
    row_breaks = np.concatenate([[0.0], np.cumsum(row_sizes) / m])
    col_breaks = np.concatenate([[0.0], np.cumsum(col_sizes) / n])
    row_breaks[-1] = col_breaks[-1] = 1.0
    permuted = apply_perm(averaged, perm)
    rs = np.concatenate([[0], np.cumsum(row_sizes)[:-1]])
    cs = np.concatenate([[0], np.cumsum(col_sizes)[:-1]])
    values = np.clip(permuted[np.ix_(rs, cs)], 0.0, 1.0)
    return StepGraphon(row_breaks, col_breaks, values, name=f"level-{level.j}-{m}x{n}")


def limit_estimate(masks: Sequence, j: int) -> StepGraphon:
    """
    Step-graphon estimate of the limit of a mask sequence: each mask is
    block-averaged on its level-j partition, classes are laid out
    canonically, and the resulting step graphons are averaged.

    :raises PreconditionError: if `masks` is empty or the dimensions decrease.
    """
    if not masks:
        raise PreconditionError("limit_estimate needs at least one mask")
    checked = [as_mask(P) for P in masks]
    for a, b in zip(checked, checked[1:]):
        if b.shape[0] < a.shape[0] or b.shape[1] < a.shape[1]:
            raise PreconditionError("mask dimensions must be non-decreasing")

    steps = [_canonical_step(refinement_sequence(P, j).levels[-1], P.shape) for P in checked]
    rows = np.unique(np.concatenate([s.row_breaks for s in steps]))
    cols = np.unique(np.concatenate([s.col_breaks for s in steps]))
    xm = (rows[:-1] + rows[1:]) / 2.0
    ym = (cols[:-1] + cols[1:]) / 2.0
    values = np.mean([s.evaluate(xm[:, None], ym[None, :]) for s in steps], axis=0)
    return StepGraphon(rows, cols, np.clip(values, 0.0, 1.0), name=f"limit-estimate-j{j}")
