"""N-mode FISTA for the l1-regularized Tucker least-squares problem.

    minimize_U  ||U||_1 + (lam / 2) ||Y - forward(U)||_F^2

The iteration keeps everything in tensor form: one forward and one adjoint
multi-mode product per step, so the operator never costs more than the
factor matrices themselves.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional, Union

import numpy as np

from .exceptions import DimensionError, NumericalError
from .tensor_core import FactorSet, SupportSet, as_tensor, frobenius_norm, l1_norm


@dataclass(frozen=True)
class RecoveryConfig:
    """Scalar parameters for every stage of the recovery pipeline.

    Defaults for ``lam``, ``L``, ``tol``, ``a``, ``b`` and ``R`` are the
    standard synthetic-experiment values. ``change_tol=None``
    resolves to ``1e-6 * ||Y||_F`` (``1e-13 * ||Y||_F`` for the
    postprocessing stage). ``R`` may be ``math.inf`` to disable pruning.
    ``alpha_policy`` is either ``"median"`` (median magnitude over the
    current support) or a fixed float.
    """

    lam: float = 500.0
    L: float = 1.0
    tol: float = 0.05
    max_iters: int = 500
    change_tol: Optional[float] = None
    a: float = 0.05
    b: float = 0.5
    gamma: float = 2.0
    r: float = 1.5
    alpha_policy: Union[str, float] = "median"
    R: float = 20
    warm_start_from_augmented: bool = False
    # Stage IV step is pp_lam / L; lam=500 would diverge there.
    pp_lam: float = 1.0
    pp_max_iters: int = 10000
    pp_change_tol: Optional[float] = None
    record_objective: bool = False
    kronecker_max_entries: int = 10**8

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not self.pp_lam > 0:
            raise ValueError("pp_lam must be positive")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")
        if int(self.max_iters) < 1 or int(self.pp_max_iters) < 1:
            raise ValueError("iteration limits must be positive")
        for name in ("change_tol", "pp_change_tol"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.a < self.b:
            raise ValueError("augmentation band needs 0 <= a < b")
        if not self.gamma > 0 or not self.r > 0:
            raise ValueError("gamma and r must be positive")
        if not (self.R == math.inf or (self.R >= 1 and float(self.R).is_integer())):
            raise ValueError("R must be a positive integer or inf")
        if isinstance(self.alpha_policy, str):
            if self.alpha_policy != "median":
                raise ValueError(f"unknown alpha_policy {self.alpha_policy!r}")
        elif not math.isfinite(float(self.alpha_policy)):
            raise ValueError("fixed alpha must be finite")

    @classmethod
    def from_dict(cls, values: dict) -> "RecoveryConfig":
        """Build from flat keys; ``lambda`` is accepted for ``lam``."""
        values = dict(values)
        if "lambda" in values:
            values["lam"] = values.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "R" in values and values["R"] in ("inf", "Infinity", None):
            values["R"] = math.inf
        return cls(**values)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["R"] == math.inf:
            d["R"] = "inf"
        return d


@dataclass
class RecoveryResult:
    """Output of a recovery run.

    ``support`` is always the effective support of ``estimate`` at the
    configured ``tol``. ``working_support`` is the support set a stage
    carried internally (Stage III's pruned set), when it differs.
    """

    estimate: np.ndarray
    support: SupportSet
    iterations: dict = field(default_factory=dict)
    wall_times: dict = field(default_factory=dict)
    objective_trace: list = field(default_factory=list)
    working_support: Optional[SupportSet] = None
    method: str = ""

    @property
    def total_time(self) -> float:
        return float(sum(self.wall_times.values()))


def soft_threshold(U, alpha: float) -> np.ndarray:
    """Proximal map of ``alpha * ||.||_1``: ``sign(u) * max(|u| - alpha, 0)``."""
    if alpha < 0:
        raise ValueError("threshold must be non-negative")
    U = np.asarray(U, dtype=np.float64)
    return np.sign(U) * np.maximum(np.abs(U) - alpha, 0.0)


def objective(U, Y, F: FactorSet, lam: float) -> float:
    """``||U||_1 + (lam/2) ||Y - forward(U)||_F^2``."""
    residual = as_tensor(Y) - F.forward(U)
    return l1_norm(U) + 0.5 * lam * frobenius_norm(residual) ** 2


def effective_support(X, tol: float) -> SupportSet:
    """Indices with ``|X(j)| > tol`` (strict)."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return SupportSet(np.abs(as_tensor(X)) > tol)


def next_momentum(d: float) -> float:
    return (1.0 + math.sqrt(1.0 + 4.0 * d * d)) / 2.0


def check_observation(Y, F: FactorSet) -> np.ndarray:
    Y = as_tensor(Y)
    if Y.shape != F.I:
        raise DimensionError(f"observation shape {Y.shape} does not match factors {F.I}")
    return Y


def check_finite(X: np.ndarray, stage: str, t: int) -> None:
    if not np.isfinite(X).all():
        raise NumericalError(f"{stage}: non-finite iterate at step {t}")


def resolve_change_tol(value: Optional[float], Y: np.ndarray, scale: float) -> float:
    return scale * frobenius_norm(Y) if value is None else float(value)


def converged(change: float, change_tol: float) -> bool:
    # change == 0 catches exact fixed points when change_tol is 0
    return change < change_tol or change == 0.0


def fista_recover(
    Y,
    F: FactorSet,
    cfg: Optional[RecoveryConfig] = None,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> RecoveryResult:
    """Stage I: N-mode FISTA.

    Starts from ``X_0 = Z_1 = adjoint(Y)`` and repeats

        X_t     = prox_{1/(lam L)}(Z_t - (1/L) adjoint(forward(Z_t) - Y))
        d_{t+1} = (1 + sqrt(1 + 4 d_t^2)) / 2
        Z_{t+1} = X_t + ((d_t - 1) / d_{t+1}) (X_t - X_{t-1})

    until ``max_iters`` steps or ``||X_t - X_{t-1}||_F < change_tol``.

    Parameters
    ----------
    Y : ndarray
        Observation of shape ``F.I``.
    F : FactorSet
    cfg : RecoveryConfig, optional
    callback : callable, optional
        Called as ``callback(t, X_t)`` after every step.

    Returns
    -------
    RecoveryResult
    """
    cfg = cfg or RecoveryConfig()
    Y = check_observation(Y, F)
    change_tol = resolve_change_tol(cfg.change_tol, Y, 1e-6)
    step = 1.0 / cfg.L
    thresh = 1.0 / (cfg.lam * cfg.L)

    start = time.perf_counter()
    X_prev = F.adjoint(Y)
    Z = X_prev
    d = 1.0
    trace = []
    t = 0
    while t < cfg.max_iters:
        t += 1
        Y_t = F.forward(Z)
        X = soft_threshold(Z - step * F.adjoint(Y_t - Y), thresh)
        check_finite(X, "fista", t)
        if cfg.record_objective:
            trace.append(objective(X, Y, F, cfg.lam))
        if callback is not None:
            callback(t, X)
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
        iterations={"fista": t},
        wall_times={"fista": elapsed},
        objective_trace=trace,
        method="fista",
    )
