"""Stage IV: least-squares debiasing on a fixed support.

Soft thresholding shrinks every surviving entry by roughly ``1/(lam L)``.
Once the support is settled the values are refit by minimizing
``||forward(U) - Y||_F`` over tensors supported on it, either with an
accelerated gradient iteration that stays in tensor form, or, for small
problems, with a dense solve on columns of the explicit Kronecker matrix.
"""

from __future__ import annotations

import time
import warnings
from typing import Optional

import numpy as np

from .exceptions import DimensionError
from .fista import (
    RecoveryConfig,
    check_finite,
    check_observation,
    converged,
    next_momentum,
    resolve_change_tol,
)
from .tensor_core import (
    FactorSet,
    SupportSet,
    as_tensor,
    frobenius_norm,
    kronecker_operator,
    unvectorize,
    vectorize,
)


class RankDeficiencyWarning(RuntimeWarning):
    """The restricted Kronecker system is rank deficient; a minimum-norm fit was used."""


def _check_support(support: SupportSet, F: FactorSet) -> None:
    if support.shape != F.J:
        raise DimensionError(f"support shape {support.shape} does not match {F.J}")


def run_postprocess(Y, F: FactorSet, X0, support: SupportSet, cfg=None):
    """Accelerated restricted least squares; returns ``(X, iterations, seconds)``."""
    cfg = cfg or RecoveryConfig()
    Y = check_observation(Y, F)
    _check_support(support, F)
    X0 = as_tensor(X0)
    if X0.shape != F.J:
        raise DimensionError(f"initial estimate {X0.shape} does not match {F.J}")
    change_tol = resolve_change_tol(cfg.pp_change_tol, Y, 1e-13)
    step = cfg.pp_lam / cfg.L
    mask = support.mask

    start = time.perf_counter()
    X_prev = np.where(mask, X0, 0.0)
    Z = X_prev
    d = 1.0
    t = 0
    if mask.any():
        while t < cfg.pp_max_iters:
            t += 1
            X = Z - step * F.adjoint(F.forward(Z) - Y)
            X[~mask] = 0.0
            check_finite(X, "postprocess", t)
            d_next = next_momentum(d)
            Z = X + ((d - 1.0) / d_next) * (X - X_prev)
            change = frobenius_norm(X - X_prev)
            X_prev, d = X, d_next
            if converged(change, change_tol):
                break
    X = np.where(np.abs(X_prev) > cfg.tol, X_prev, 0.0)
    return X, t, time.perf_counter() - start


def iterative_postprocess(
    Y, F: FactorSet, X0, support: SupportSet, cfg: Optional[RecoveryConfig] = None
) -> np.ndarray:
    """Refit the values of ``X0`` on ``support`` by accelerated gradient steps.

    The iterate starts at ``X0`` (zeroed off the support) and takes steps of
    size ``cfg.pp_lam / cfg.L`` on ``||forward(U) - Y||^2 / 2``, re-zeroing the
    complement each time. On exit entries with ``|X| <= cfg.tol`` are set to
    zero.
    """
    return run_postprocess(Y, F, X0, support, cfg)[0]


def kronecker_least_squares(
    Y,
    F: FactorSet,
    support: SupportSet,
    max_entries: Optional[int] = None,
) -> np.ndarray:
    """Dense least squares on the Kronecker columns selected by ``support``.

    Builds ``P = A_N kron ... kron A_1`` explicitly (subject to the size
    guard), keeps the columns of ``P^T`` indexed by the support in
    mode-1-fastest order, solves ``min ||vec(Y) - P_S x||`` and scatters
    ``x`` back. Emits :class:`RankDeficiencyWarning` if ``P_S`` lacks full
    column rank.
    """
    Y = check_observation(Y, F)
    _check_support(support, F)
    if max_entries is None:
        max_entries = RecoveryConfig.kronecker_max_entries
    P = kronecker_operator(F, max_entries=max_entries)
    X = np.zeros(F.J)
    cols = np.flatnonzero(vectorize(support.mask.astype(np.float64)))
    if cols.size == 0:
        return X
    P_S = P.T[:, cols]
    x, _, rank, _ = np.linalg.lstsq(P_S, vectorize(Y), rcond=None)
    if rank < cols.size:
        warnings.warn(
            f"restricted system has rank {rank} < {cols.size} columns",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    x_full = np.zeros(X.size)
    x_full[cols] = x
    return unvectorize(x_full, F.J)
