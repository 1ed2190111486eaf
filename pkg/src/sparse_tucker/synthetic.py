"""Seeded synthetic instances and the replicate experiment loop.

Each replicate ``i`` of an experiment draws its instance from its own
Philox stream keyed by ``SeedSequence([seed, i])``, in a fixed order:
support and core values, then factors ``A_1..A_N``, then noise. An instance
therefore depends only on ``(seed, i)`` and the ExperimentSpec, never on which methods
are run or in which order.

The Gaussian parameters of the data model (``0.1`` for support values,
``0.005`` for noise) are standard deviations by default. With
``convention="variance"`` they are read as variances instead, which puts
the noise norm well above the signal norm at the 40/28 sizes.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dtf
from .fista import RecoveryConfig
from .metrics import frobenius_error, support_scores
from .pipeline import recover
from .tensor_core import FactorSet, SupportSet, as_tensor


def _per_mode(value, N: int) -> tuple[int, ...]:
    if isinstance(value, (int, np.integer)):
        return (int(value),) * N
    value = tuple(int(v) for v in value)
    if len(value) == 1:
        return value * N
    if len(value) != N:
        raise ValueError(f"expected {N} mode sizes, got {len(value)}")
    return value


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of a synthetic experiment.

    ``J`` and ``I`` may be given as a single int (same size on every mode)
    or one size per mode.
    """

    J: tuple = (40, 40, 40)
    I: tuple = (28, 28, 28)  # noqa: E741
    N: int = 3
    support_size: int = 10
    support_value_mean: float = 1.0
    support_value_param: float = 0.1
    noise_param: float = 0.005
    convention: str = "stddev"
    seed: int = 0
    replicates: int = 20

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("tensor order must be positive")
        object.__setattr__(self, "J", _per_mode(self.J, self.N))
        object.__setattr__(self, "I", _per_mode(self.I, self.N))
        if any(i > j for i, j in zip(self.I, self.J)):
            raise ValueError("I exceeds J")
        if min(self.I) < 1:
            raise ValueError("mode sizes must be positive")
        if not 0 <= self.support_size <= math.prod(self.J):
            raise ValueError("support size must lie between 0 and prod(J)")
        if self.convention not in ("variance", "stddev"):
            raise ValueError("convention must be 'variance' or 'stddev'")
        if self.support_value_param < 0 or self.noise_param < 0:
            raise ValueError("Gaussian parameters must be non-negative")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")

    def _std(self, param: float) -> float:
        return math.sqrt(param) if self.convention == "variance" else float(param)

    @property
    def support_value_std(self) -> float:
        return self._std(self.support_value_param)

    @property
    def noise_std(self) -> float:
        return self._std(self.noise_param)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["J"], d["I"] = list(self.J), list(self.I)
        return d


def instance_rng(seed: int, replicate: int) -> np.random.Generator:
    """Independent Philox stream for replicate ``replicate`` of ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replicate])))


def random_orthonormal_matrix(J: int, I: int, rng: np.random.Generator) -> np.ndarray:  # noqa: E741
    """``J x I`` matrix with orthonormal columns from a QR of a Gaussian draw.

    The triangular factor is sign-normalized to a non-negative diagonal so
    the map from the Gaussian sample to ``Q`` is deterministic.
    """
    if I > J:
        raise ValueError("I exceeds J")
    if I < 1:
        raise ValueError("matrix needs at least one column")
    Q, R = np.linalg.qr(rng.standard_normal((J, I)))
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs


def random_sparse_core(
    shape: Sequence[int],
    k: int,
    rng: np.random.Generator,
    value_mean: float = 1.0,
    value_std: float = 0.1,
) -> tuple[np.ndarray, SupportSet]:
    """Core with ``k`` uniformly placed entries drawn from ``N(mean, std^2)``."""
    shape = tuple(int(s) for s in shape)
    size = math.prod(shape)
    if not 0 <= k <= size:
        raise ValueError(f"cannot place {k} support entries in {size} cells")
    flat = rng.choice(size, size=k, replace=False)
    values = value_mean + value_std * rng.standard_normal(k)
    X = np.zeros(size)
    X[flat] = values
    mask = np.zeros(size, dtype=bool)
    mask[flat] = True
    return np.reshape(X, shape, order="F"), SupportSet(np.reshape(mask, shape, order="F"))


def observe(X, F: FactorSet, noise_std: float, rng: np.random.Generator) -> np.ndarray:
    """``forward(X)`` plus i.i.d. Gaussian noise."""
    Y = F.forward(as_tensor(X))
    if noise_std > 0:
        Y = Y + noise_std * rng.standard_normal(Y.shape)
    return Y


@dataclass
class Instance:
    X: np.ndarray
    support: SupportSet
    factors: FactorSet
    Y: np.ndarray
    seed: int = 0
    replicate: int = 0
    spec: Optional[dict] = None


def make_instance(spec: ExperimentSpec, replicate: int = 0) -> Instance:
    rng = instance_rng(spec.seed, replicate)
    X, support = random_sparse_core(
        spec.J, spec.support_size, rng, spec.support_value_mean, spec.support_value_std
    )
    F = FactorSet(random_orthonormal_matrix(j, i, rng) for j, i in zip(spec.J, spec.I))
    Y = observe(X, F, spec.noise_std, rng)
    return Instance(X, support, F, Y, spec.seed, replicate, spec.to_dict())


def save_instance(inst: Instance, directory) -> list[Path]:
    """Write ``X``, ``A1..AN``, ``Y`` as DTF-1 plus an ``instance.json`` sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    tensors = [("X", inst.X)] + [(f"A{n}", A) for n, A in enumerate(inst.factors, 1)]
    tensors.append(("Y", inst.Y))
    for name, T in tensors:
        path = directory / f"{name}.dtf"
        dtf.write(path, T)
        written.append(path)
    sidecar = {
        "format": "DTF-1",
        "seed": inst.seed,
        "replicate": inst.replicate,
        "spec": inst.spec,
        "order": inst.factors.order,
        "files": {"X": "X.dtf", "Y": "Y.dtf",
                  "factors": [f"A{n}.dtf" for n in range(1, inst.factors.order + 1)]},
        "true_support": inst.support.to_list(),
    }
    path = directory / "instance.json"
    path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written


def load_instance(directory) -> Instance:
    directory = Path(directory)
    meta = json.loads((directory / "instance.json").read_text())
    files = meta["files"]
    F = FactorSet(dtf.read(directory / f) for f in files["factors"])
    Y = dtf.read(directory / files["Y"])
    x_path = directory / files["X"]
    X = dtf.read(x_path) if x_path.exists() else None
    support = SupportSet.from_indices(meta.get("true_support", []), F.J)
    return Instance(X, support, F, Y, meta.get("seed", 0), meta.get("replicate", 0),
                    meta.get("spec"))


@dataclass
class Metrics:
    """Scores for one method on one replicate."""

    method: str
    replicate: int
    frob_error: float
    support_precision: float
    support_recall: float
    support_f1: float
    wall_time_s: float
    stage_times: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    support_size: int = 0


def score(inst: Instance, result, method: str) -> Metrics:
    precision, recall, f1 = support_scores(inst.support, result.support)
    return Metrics(
        method=method,
        replicate=inst.replicate,
        frob_error=frobenius_error(inst.X, result.estimate),
        support_precision=precision,
        support_recall=recall,
        support_f1=f1,
        wall_time_s=result.total_time,
        stage_times=dict(result.wall_times),
        iterations=dict(result.iterations),
        support_size=len(result.support),
    )


def run_replicate(spec: ExperimentSpec, replicate: int, methods: Sequence[str],
                  cfg: Optional[RecoveryConfig] = None) -> list[Metrics]:
    """Draw one instance and run every method on that same instance."""
    inst = make_instance(spec, replicate)
    rows = []
    for method in methods:
        result = recover(inst.Y, inst.factors, cfg, method=method)
        rows.append(score(inst, result, method))
    return rows


def run_experiment(
    spec: ExperimentSpec,
    methods: Sequence[str] = ("fista", "four_stage"),
    cfg: Optional[RecoveryConfig] = None,
    workers: int = 1,
) -> list[Metrics]:
    """Metrics for every (replicate, method), ordered by replicate then ``methods``."""
    methods = list(methods)
    reps = range(spec.replicates)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
            chunks = list(pool.map(run_replicate, [spec] * len(reps), reps,
                                   [methods] * len(reps), [cfg] * len(reps)))
    else:
        chunks = [run_replicate(spec, r, methods, cfg) for r in reps]
    return [row for chunk in chunks for row in chunk]
