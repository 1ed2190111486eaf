"""Stage III: FISTA restricted to a working support that grows and prunes."""

from __future__ import annotations

import math
import time
from typing import Callable, NamedTuple, Optional

import numpy as np

from .exceptions import DimensionError
from .fista import (
    RecoveryConfig,
    RecoveryResult,
    check_finite,
    check_observation,
    converged,
    effective_support,
    next_momentum,
    objective,
    resolve_change_tol,
    soft_threshold,
)
from .tensor_core import FactorSet, SupportSet, as_tensor, frobenius_norm


class PruneTracker:
    """Consecutive below-``tol`` counters for indices in the working support.

    ``counts[j]`` is the length of the run of most recent iterations in which
    ``|X_s(j)| < tol``; it is zero for indices outside the support.
    """

    def __init__(self, shape, tol: float, window: float):
        self.tol = tol
        self.window = window
        self.counts = np.zeros(tuple(shape), dtype=np.int64)

    def update(self, X: np.ndarray, support: np.ndarray) -> np.ndarray:
        """Advance the counters with iterate ``X`` and return the mask to prune."""
        below = support & (np.abs(X) < self.tol)
        self.counts = np.where(below, self.counts + 1, 0)
        if self.window == math.inf:
            return np.zeros_like(support)
        pruned = self.counts >= self.window
        self.counts[pruned] = 0
        return pruned


class ProjectionStep(NamedTuple):
    """Snapshot handed to the Stage III callback."""

    t: int
    raw: np.ndarray
    estimate: np.ndarray
    support: SupportSet
    pruned: SupportSet
    counts: np.ndarray


def fista_with_projection(
    Y,
    F: FactorSet,
    support0: SupportSet,
    cfg: Optional[RecoveryConfig] = None,
    X_aug=None,
    callback: Optional[Callable[[ProjectionStep], None]] = None,
) -> RecoveryResult:
    """FISTA whose iterates are projected onto an adaptive support.

    Every step computes the plain FISTA update ``X_t``, then

    1. adds ``supp_tol(X_t)`` to the working support,
    2. drops indices that stayed below ``tol`` for the last ``R`` steps,
    3. zeroes ``X_t`` outside the working support,

    before the momentum update. The start point is ``adjoint(Y)``, or
    ``X_aug`` when ``cfg.warm_start_from_augmented`` is set.

    Returns a :class:`RecoveryResult` whose ``working_support`` holds the
    final working support.
    """
    cfg = cfg or RecoveryConfig()
    Y = check_observation(Y, F)
    if support0.shape != F.J:
        raise DimensionError(f"support shape {support0.shape} does not match {F.J}")
    change_tol = resolve_change_tol(cfg.change_tol, Y, 1e-6)
    step = 1.0 / cfg.L
    thresh = 1.0 / (cfg.lam * cfg.L)

    start = time.perf_counter()
    if cfg.warm_start_from_augmented:
        if X_aug is None:
            raise ValueError("warm start requested without an augmented estimate")
        X_prev = as_tensor(X_aug).copy()
        if X_prev.shape != F.J:
            raise DimensionError("augmented estimate does not match the core shape")
    else:
        X_prev = F.adjoint(Y)
    Z = X_prev
    d = 1.0
    omega = support0.mask.copy()
    tracker = PruneTracker(F.J, cfg.tol, cfg.R)
    trace = []
    t = 0
    while t < cfg.max_iters:
        t += 1
        Y_t = F.forward(Z)
        raw = soft_threshold(Z - step * F.adjoint(Y_t - Y), thresh)
        check_finite(raw, "fista_projected", t)
        omega |= np.abs(raw) > cfg.tol
        pruned = tracker.update(raw, omega)
        omega &= ~pruned
        X = np.where(omega, raw, 0.0)
        if cfg.record_objective:
            trace.append(objective(X, Y, F, cfg.lam))
        if callback is not None:
            callback(
                ProjectionStep(
                    t, raw, X, SupportSet(omega), SupportSet(pruned), tracker.counts.copy()
                )
            )
        d_next = next_momentum(d)
        Z = X + ((d - 1.0) / d_next) * (X - X_prev)
        change = frobenius_norm(X - X_prev)
        X_prev, d = X, d_next
        if converged(change, change_tol):
            break
    elapsed = time.perf_counter() - start

    return RecoveryResult(
        estimate=X_prev,
        support=effective_support(X_prev, cfg.tol),
        iterations={"fista_projected": t},
        wall_times={"fista_projected": elapsed},
        objective_trace=trace,
        working_support=SupportSet(omega),
        method="fista_projected",
    )
