"""Recovery quality measures."""

from __future__ import annotations

from .exceptions import DimensionError
from .tensor_core import SupportSet, as_tensor, frobenius_norm


def frobenius_error(X_true, X_hat) -> float:
    """Absolute error ``||X_true - X_hat||_F``."""
    X_true, X_hat = as_tensor(X_true), as_tensor(X_hat)
    if X_true.shape != X_hat.shape:
        raise DimensionError(f"shape mismatch: {X_true.shape} vs {X_hat.shape}")
    return frobenius_norm(X_true - X_hat)


def support_scores(true: SupportSet, estimated: SupportSet) -> tuple[float, float, float]:
    """Precision, recall and F1 of ``estimated`` against ``true``.

    An empty estimate has precision 1, an empty truth has recall 1, and F1
    is 1 only when both sets are empty.
    """
    hits = len(true & estimated)
    n_true, n_est = len(true), len(estimated)
    precision = hits / n_est if n_est else 1.0
    recall = hits / n_true if n_true else 1.0
    if n_true == 0 and n_est == 0:
        return 1.0, 1.0, 1.0
    if hits == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)
