"""Sparse Tucker core recovery from multilinear measurements.

The observation model is ``Y = X x_1 A_1^T x_2 ... x_N A_N^T + noise`` with
orthonormal-column factors and a sparse core ``X``. Recovery runs N-mode
FISTA, augments ambiguous clusters of the support, re-solves on the
augmented support with pruning, and finishes with a least-squares refit.
"""

from .exceptions import DimensionError, NumericalError, SizeGuardError
from .fista import RecoveryConfig, RecoveryResult, fista_recover, soft_threshold
from .metrics import frobenius_error, support_scores
from .pipeline import METHODS, four_stage_recover, recover
from .synthetic import ExperimentSpec, load_instance, make_instance, run_experiment
from .tensor_core import FactorSet, SupportSet, kronecker_operator, mode_n_product

__all__ = [
    "DimensionError",
    "ExperimentSpec",
    "FactorSet",
    "METHODS",
    "NumericalError",
    "RecoveryConfig",
    "RecoveryResult",
    "SizeGuardError",
    "SupportSet",
    "fista_recover",
    "four_stage_recover",
    "frobenius_error",
    "kronecker_operator",
    "load_instance",
    "make_instance",
    "mode_n_product",
    "recover",
    "run_experiment",
    "soft_threshold",
    "support_scores",
]
__version__ = "0.1.0"
