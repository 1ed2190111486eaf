"""Stage II: support augmentation around suspected missed support nodes.

When FISTA drops a true support entry it tends to leak mass onto nearby
indices at intermediate magnitude. Those leaks are located as clusters of
band-valued entries (``a < |X| < b`` with a band neighbour closer than
``gamma``), grown by a ball of radius ``r`` and added to the support with a
target value ``alpha``.

Distances are Euclidean on integer index vectors. Neighbour searches use a
fixed stencil of integer offsets, so cost is linear in the tensor size.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple, Optional

import numpy as np

from .fista import RecoveryConfig, effective_support
from .exceptions import DimensionError
from .tensor_core import SupportSet, as_tensor


def ball_offsets(order: int, radius: float, closed: bool = True) -> np.ndarray:
    """Integer offsets ``o`` with ``||o|| <= radius`` (``<`` if not closed)."""
    reach = int(math.floor(radius))
    grid = np.array(
        list(itertools.product(range(-reach, reach + 1), repeat=order)), dtype=np.int64
    ).reshape(-1, order)
    sq = np.sum(grid * grid, axis=1)
    keep = sq <= radius * radius if closed else sq < radius * radius
    return grid[keep]


def _shifted_or(out: np.ndarray, src: np.ndarray, offset) -> None:
    """``out[j + offset] |= src[j]`` for every in-bounds ``j``."""
    dst_sl, src_sl = [], []
    for o, size in zip(offset, src.shape):
        if abs(o) >= size:
            return
        if o >= 0:
            dst_sl.append(slice(o, size))
            src_sl.append(slice(0, size - o))
        else:
            dst_sl.append(slice(0, size + o))
            src_sl.append(slice(-o, size))
    out[tuple(dst_sl)] |= src[tuple(src_sl)]


def detect_ambiguous_cluster(X, a: float, b: float, gamma: float) -> SupportSet:
    """Band-valued indices that have another band-valued index within ``gamma``.

    An index ``j`` qualifies when ``a < |X(j)| < b`` and some ``k != j`` with
    ``a < |X(k)| < b`` satisfies ``||j - k|| < gamma``. Isolated band values
    are left out.
    """
    if not 0 <= a < b:
        raise ValueError("band needs 0 <= a < b")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    mag = np.abs(as_tensor(X))
    band = (mag > a) & (mag < b)
    has_neighbor = np.zeros_like(band)
    for off in ball_offsets(band.ndim, gamma, closed=False):
        if off.any():
            _shifted_or(has_neighbor, band, off)
    return SupportSet(band & has_neighbor)


def dilate_support(cluster: SupportSet, r: float, shape=None) -> SupportSet:
    """Union of closed balls ``B(j, r)`` over ``j`` in ``cluster``, clipped to the grid."""
    if not r > 0:
        raise ValueError("dilation radius must be positive")
    if shape is not None and tuple(shape) != cluster.shape:
        raise DimensionError(f"cluster shape {cluster.shape} differs from {tuple(shape)}")
    src = cluster.mask
    out = np.zeros_like(src)
    if src.any():
        for off in ball_offsets(src.ndim, r, closed=True):
            _shifted_or(out, src, off)
    return SupportSet(out)


def resolve_alpha(X, support: SupportSet, cfg: RecoveryConfig) -> float:
    if not isinstance(cfg.alpha_policy, str):
        return float(cfg.alpha_policy)
    if support:
        return float(np.median(np.abs(as_tensor(X))[support.mask]))
    return 0.5 * (cfg.a + cfg.b)


def augment_estimate(
    X,
    support: SupportSet,
    dilated: SupportSet,
    cfg: Optional[RecoveryConfig] = None,
    alpha: Optional[float] = None,
) -> tuple[np.ndarray, SupportSet]:
    """Set ``alpha`` on ``dilated - support`` and return ``(X_aug, support | dilated)``.

    Entries on ``support`` keep their values. ``alpha`` defaults to the
    value chosen by ``cfg.alpha_policy``.
    """
    cfg = cfg or RecoveryConfig()
    X = as_tensor(X)
    if alpha is None:
        alpha = resolve_alpha(X, support, cfg)
    X_aug = X.copy()
    X_aug[(dilated - support).mask] = alpha
    return X_aug, support | dilated


class Augmentation(NamedTuple):
    estimate: np.ndarray
    support: SupportSet
    cluster: SupportSet
    dilated: SupportSet
    alpha: float


def augment_support(X, cfg: Optional[RecoveryConfig] = None) -> Augmentation:
    """Run the whole augmentation step on a Stage I estimate."""
    cfg = cfg or RecoveryConfig()
    X = as_tensor(X)
    omega = effective_support(X, cfg.tol)
    cluster = detect_ambiguous_cluster(X, cfg.a, cfg.b, cfg.gamma)
    dilated = dilate_support(cluster, cfg.r)
    alpha = resolve_alpha(X, omega, cfg)
    X_aug, omega_aug = augment_estimate(X, omega, dilated, cfg, alpha=alpha)
    return Augmentation(X_aug, omega_aug, cluster, dilated, alpha)
