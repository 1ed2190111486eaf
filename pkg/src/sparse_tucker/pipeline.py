"""End-to-end recovery and the baseline method variants.

Methods
-------
``fista``
    Stage I only.
``fista_pp``
    Stage I, then tensor postprocessing on its effective support.
``fista_mvpp``
    Stage I, then the Kronecker matrix-vector least-squares refit.
``four_stage``
    Stage I, support augmentation, projected FISTA, tensor postprocessing.
"""

from __future__ import annotations

import time
from typing import Optional

from .augmentation import augment_support
from .exceptions import SizeGuardError
from .fista import RecoveryConfig, RecoveryResult, effective_support, fista_recover
from .postprocess import kronecker_least_squares, run_postprocess
from .projected import fista_with_projection
from .tensor_core import FactorSet

METHODS = ("fista", "fista_pp", "fista_mvpp", "four_stage")


def four_stage_recover(Y, F: FactorSet, cfg: Optional[RecoveryConfig] = None) -> RecoveryResult:
    """Run FISTA, augment its support, re-run with projection, then debias.

    The final refit uses the working support left by the projected run.
    """
    cfg = cfg or RecoveryConfig()
    stage1 = fista_recover(Y, F, cfg)

    start = time.perf_counter()
    aug = augment_support(stage1.estimate, cfg)
    t_aug = time.perf_counter() - start

    stage3 = fista_with_projection(Y, F, aug.support, cfg, X_aug=aug.estimate)
    X, pp_iters, t_pp = run_postprocess(
        Y, F, stage3.estimate, stage3.working_support, cfg
    )
    return RecoveryResult(
        estimate=X,
        support=effective_support(X, cfg.tol),
        iterations={
            "fista": stage1.iterations["fista"],
            "augment": 1,
            "fista_projected": stage3.iterations["fista_projected"],
            "postprocess": pp_iters,
        },
        wall_times={
            "fista": stage1.wall_times["fista"],
            "augment": t_aug,
            "fista_projected": stage3.wall_times["fista_projected"],
            "postprocess": t_pp,
        },
        objective_trace=stage1.objective_trace + stage3.objective_trace,
        working_support=stage3.working_support,
        method="four_stage",
    )


def recover(
    Y, F: FactorSet, cfg: Optional[RecoveryConfig] = None, method: str = "four_stage"
) -> RecoveryResult:
    """Dispatch one of :data:`METHODS`."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    cfg = cfg or RecoveryConfig()
    if method == "four_stage":
        return four_stage_recover(Y, F, cfg)

    if method == "fista_mvpp":
        # fail on the guard before spending time in Stage I
        if F.kronecker_entries > cfg.kronecker_max_entries:
            raise SizeGuardError(F.kronecker_entries, cfg.kronecker_max_entries)

    result = fista_recover(Y, F, cfg)
    if method == "fista":
        return result

    omega = result.support
    if method == "fista_pp":
        X, iters, elapsed = run_postprocess(Y, F, result.estimate, omega, cfg)
        result.iterations["postprocess"] = iters
    else:
        start = time.perf_counter()
        X = kronecker_least_squares(Y, F, omega, max_entries=cfg.kronecker_max_entries)
        elapsed = time.perf_counter() - start
        result.iterations["postprocess"] = 1
    result.wall_times["postprocess"] = elapsed
    result.estimate = X
    result.support = effective_support(X, cfg.tol)
    result.working_support = omega
    result.method = method
    return result
