"""
Stable-Recovery Probe

Finite-scale adversary for a reveal mask P: look for two bounded low-rank
matrices A, B that nearly agree on the revealed entries yet differ a lot
overall. A violation is a pair with ||(A - B) o P||_F <= masked_tol and
||A - B||_F >= full_tol; failing to find one only makes P "stable-looking".

Search = projected gradient ascent on the factors of A = U1 V1^T and
B = U2 V2^T (rank <= K) for the surrogate mean((1 - lambda P) o (A - B)^2),
with factors rescaled so ||U V^T||_inf <= L after each step. Known
counterexample witnesses are always evaluated as extra candidates.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from mclab.blockapx import refinement_sequence, zero_block_indicator
from mclab.matcore import as_mask, avg_frobenius, linf_norm, rank
from mclab.models import ProbeConfig

logger = logging.getLogger(__name__)

STABLE = "stable-looking"
VIOLATION = "violation-found"
_WITNESS_LEVELS = (1, 2, 3)
_LOG_EVERY = 20


@dataclass
class ProbeEntry:
    shape: Tuple[int, int]
    masked_diff: float
    full_diff: float
    verdict: str
    source: str
    witness_a: np.ndarray
    witness_b: np.ndarray
    log: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "shape": list(self.shape),
            "maskedDiff": self.masked_diff,
            "fullDiff": self.full_diff,
            "verdict": self.verdict,
            "source": self.source,
            "log": self.log,
        }


def discrepancies(A, B, P) -> Tuple[float, float]:
    """(||(A - B) o P||_F, ||A - B||_F)."""
    D = np.asarray(A, dtype=np.float64) - np.asarray(B, dtype=np.float64)
    return avg_frobenius(D * P), avg_frobenius(D)


def synthesize_truth(k: int, K: int, L: float, seed: int, n: Optional[int] = None) -> np.ndarray:
    """
    Rank-K ground truth of shape k x n (n defaults to k). Rows of U and V are
    random unit vectors in R^K drawn from a generator keyed on (seed, k), so
    entries are cosines spread over [-1, 1]. The product is scaled so that
    ||U V^T||_inf = L.
    """
    rng = np.random.default_rng([seed, k])
    U = _unit_rows(rng.standard_normal((k, K)))
    V = _unit_rows(rng.standard_normal((k if n is None else n, K)))
    M = U @ V.T
    peak = linf_norm(M)
    return M * (L / peak) if peak > 0.0 else M


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(norms > 0.0, norms, 1.0)


def _box(U: np.ndarray, V: np.ndarray, L: float) -> np.ndarray:
    peak = linf_norm(U @ V.T)
    if peak > L:
        U = U * (L / peak)
    return U


def _witnesses(P: np.ndarray, K: int, L: float) -> List[Tuple[str, np.ndarray]]:
    """Matrices B with B o P = 0 and rank <= K, paired against A = 0."""
    m, n = P.shape
    found = []
    hidden_rows = ~P.any(axis=1)
    if hidden_rows.any():
        found.append(("hidden-rows", np.outer(hidden_rows, np.ones(n)) * L))
    hidden_cols = ~P.any(axis=0)
    if hidden_cols.any():
        found.append(("hidden-cols", np.outer(np.ones(m), hidden_cols) * L))
    complement = 1.0 - P
    if complement.any() and rank(complement) <= K:
        found.append(("complement", complement * L))
    for level in refinement_sequence(P, max(_WITNESS_LEVELS)).levels:
        block = zero_block_indicator(level)
        if block.any() and rank(block) <= K:
            found.append((f"hidden-blocks-j{level.j}", block * L))
    return found


def _ascend(U1, V1, U2, V2, P, L, cfg: ProbeConfig, label: str, log: List[dict]):
    """Alternating projected gradient steps; yields the best (score, A, B) seen."""
    weight = 1.0 - cfg.penalty * P
    best = (-np.inf, None, None)

    def step(X, G):
        scale = np.linalg.norm(G)
        if scale == 0.0:
            return X
        return X + cfg.step_size * max(np.linalg.norm(X), 1.0) * G / scale

    for it in range(1, cfg.iterations + 1):
        W = weight * (U1 @ V1.T - U2 @ V2.T)
        U1 = _box(step(U1, W @ V1), V1, L)
        U2 = _box(step(U2, -W @ V2), V2, L)
        W = weight * (U1 @ V1.T - U2 @ V2.T)
        V1 = step(V1, W.T @ U1)
        V2 = step(V2, -W.T @ U2)
        U1 = _box(U1, V1, L)
        U2 = _box(U2, V2, L)
        A, B = U1 @ V1.T, U2 @ V2.T
        masked, full = discrepancies(A, B, P)
        score = full - cfg.penalty * masked
        if score > best[0]:
            best = (score, A, B)
        if it % _LOG_EVERY == 0 or it == cfg.iterations:
            log.append({"start": label, "iteration": it, "maskedDiff": masked, "fullDiff": full, "score": score})
    return best


def probe_stable_recovery(P, K: int, L: float, seed: int = 0, cfg: Optional[ProbeConfig] = None) -> ProbeEntry:
    """
    Search for a stable-recovery violation on mask P among pairs of matrices
    with rank <= K and entries in [-L, L]. Deterministic given the seed.

    The reported pair is the violating candidate with the largest full
    difference if one exists, otherwise the candidate with the best
    penalized score full - lambda * masked.
    """
    P = as_mask(P)
    cfg = cfg or ProbeConfig()
    m, n = P.shape
    zero = np.zeros((m, n))
    candidates = [("zero", zero, zero)]
    candidates += [(name, zero, B) for name, B in _witnesses(P, K, L)]

    log: List[dict] = []
    rng = np.random.default_rng(seed)
    for r in range(cfg.restarts):
        factors = [rng.standard_normal((size, K)) / np.sqrt(K) for size in (m, n, m, n)]
        U1, V1, U2, V2 = factors
        U1 = _box(U1, V1, L)
        U2 = _box(U2, V2, L)
        score, A, B = _ascend(U1, V1, U2, V2, P, L, cfg, f"random-{r}", log)
        if A is not None:
            candidates.append((f"random-{r}", A, B))

    scored = []
    for name, A, B in candidates:
        masked, full = discrepancies(A, B, P)
        scored.append((name, A, B, masked, full))
    violations = [c for c in scored if c[3] <= cfg.masked_tol and c[4] >= cfg.full_tol]
    if violations:
        name, A, B, masked, full = max(violations, key=lambda c: c[4])
        verdict = VIOLATION
    else:
        name, A, B, masked, full = max(scored, key=lambda c: c[4] - cfg.penalty * c[3])
        verdict = STABLE
    logger.info(f"probe_stable_recovery - {m}x{n}: {verdict} via {name} (masked {masked:.3g}, full {full:.3g})")
    return ProbeEntry((m, n), masked, full, verdict, name, A, B, log)
