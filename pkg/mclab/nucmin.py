"""
Nuclear-Norm Completion

Box-constrained nuclear-norm minimization (the modified Candes-Recht
estimator) and the unconstrained variant, both solved by ADMM on

    minimize ||X||_* + I_C(Z)   subject to   X = Z

where C is {B : B = revealed on P, ||B||_inf <= L}. Each iteration is one
singular value thresholding step and one exact projection onto C.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from mclab.errors import InfeasibleError, PreconditionError
from mclab.matcore import _matrix, as_mask, avg_frobenius, nuclear_norm, require_same_shape, svd
from mclab.models import SolverConfig

logger = logging.getLogger(__name__)

# Residual-balancing trigger and factor for the adaptive penalty
_BALANCE_RATIO = 10.0
_BALANCE_FACTOR = 2.0
_PENALTY_RANGE = 1e6
_LOG_EVERY = 100


@dataclass
class CompletionResult:
    estimate: np.ndarray
    nuclear_norm: float
    iterations: int
    primal_residual: float
    dual_residual: float
    feasibility_gap: float
    converged: bool
    penalty: float
    history: List[Tuple[int, float, float]] = field(default_factory=list)


def svt(A, t: float) -> np.ndarray:
    """
    Singular value thresholding: sum of max(sigma_i - t, 0) u_i v_i^T, the
    proximal map of t * ||.||_*.
    """
    if t < 0.0:
        raise PreconditionError(f"threshold must be nonnegative, got {t}")
    f = svd(A)
    keep = f.s > t
    if not np.any(keep):
        return np.zeros(f.shape)
    return (f.u[:, keep] * (f.s[keep] - t)) @ f.v[:, keep].T


def check_feasible(revealed, P, L: float) -> None:
    """
    :raises InfeasibleError: if some revealed entry exceeds L in magnitude.
    """
    worst = float(np.max(np.abs(revealed * P)))
    if worst > L:
        raise InfeasibleError(f"revealed entry of magnitude {worst:.6g} exceeds the box bound L = {L:.6g}")


def project_feasible(B, revealed, P, L: float = np.inf) -> np.ndarray:
    """
    Euclidean projection onto {revealed on P, entries in [-L, L]}: revealed
    positions take the revealed value, hidden ones are clamped.
    """
    B = _matrix(B)
    revealed = _matrix(revealed)
    P = _matrix(P)
    require_same_shape(B, revealed, P)
    if L <= 0.0:
        raise PreconditionError("box bound L must be positive")
    check_feasible(revealed, P, L)
    return np.where(P == 1.0, revealed, np.clip(B, -L, L))


def _solve(revealed, P, L: float, cfg: SolverConfig, label: str) -> CompletionResult:
    revealed = _matrix(revealed)
    P = as_mask(P)
    require_same_shape(revealed, P)
    if not np.any(P):
        raise PreconditionError(f"{label}: mask reveals no entries")
    check_feasible(revealed, P, L)

    def project(B):
        return np.where(P == 1.0, revealed, np.clip(B, -L, L))

    rho = cfg.penalty
    alpha = cfg.over_relaxation
    Z = revealed * P
    U = np.zeros_like(Z)
    X = Z
    history = []
    r = s = np.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        X = svt(Z - U, 1.0 / rho)
        X_hat = alpha * X + (1.0 - alpha) * Z
        Z_prev = Z
        Z = project(X_hat + U)
        U = U + X_hat - Z
        r = avg_frobenius(X - Z)
        s = rho * avg_frobenius(Z - Z_prev)
        history.append((it, r, s))
        if it % _LOG_EVERY == 0:
            logger.debug(f"{label} - iter {it}: primal {r:.3e}, dual {s:.3e}, rho {rho:.3g}")
        if r <= cfg.primal_tol and s <= cfg.dual_tol:
            converged = True
            break
        if cfg.adaptive_penalty:
            if r > _BALANCE_RATIO * s and rho < cfg.penalty * _PENALTY_RANGE:
                rho *= _BALANCE_FACTOR
                U = U / _BALANCE_FACTOR
            elif s > _BALANCE_RATIO * r and rho > cfg.penalty / _PENALTY_RANGE:
                rho /= _BALANCE_FACTOR
                U = U * _BALANCE_FACTOR

    gap = avg_frobenius(X - project(X))
    if converged:
        logger.debug(f"{label} - converged after {it} iterations")
    else:
        logger.warning(f"{label} - stopped at max_iters={cfg.max_iters}: primal {r:.3e}, dual {s:.3e}")
    return CompletionResult(
        estimate=Z,
        nuclear_norm=nuclear_norm(Z),
        iterations=it,
        primal_residual=float(r),
        dual_residual=float(s),
        feasibility_gap=float(gap),
        converged=converged,
        penalty=float(rho),
        history=history,
    )


def complete_modified_cr(revealed, P, L: float, cfg: Optional[SolverConfig] = None) -> CompletionResult:
    """
    Minimum nuclear norm among matrices that agree with `revealed` on P and
    have every entry in [-L, L].

    :param L: Box bound on every entry of the estimate.
    :raises InfeasibleError: if a revealed entry exceeds L in magnitude.
    :raises PreconditionError: if P reveals nothing or L <= 0.
    """
    if L <= 0.0:
        raise PreconditionError("box bound L must be positive")
    return _solve(revealed, P, float(L), cfg or SolverConfig(), "complete_modified_cr")


def complete_plain_cr(revealed, P, cfg: Optional[SolverConfig] = None) -> CompletionResult:
    """Minimum nuclear norm among matrices that agree with `revealed` on P."""
    return _solve(revealed, P, np.inf, cfg or SolverConfig(), "complete_plain_cr")
