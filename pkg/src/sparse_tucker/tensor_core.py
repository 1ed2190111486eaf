"""Dense tensor algebra for the Tucker sensing model.

Tensors are plain ``float64`` numpy arrays. Wherever a tensor is flattened
(``vectorize``, the DTF-1 file format, Kronecker matrices) the linear order
is mode-1 fastest, i.e. Fortran order, so that

    vec(Y x_1 A_1 x_2 A_2 ... x_N A_N) = (A_N kron ... kron A_1) vec(Y).

Mode indices follow the usual tensor notation and are 1-based; index tuples
addressing individual entries are 0-based, as in numpy.

The sensing operator built from factors ``A_n`` (``J_n x I_n``, orthonormal
columns) is used in two directions:

* ``forward``  applies ``A_n^T`` on every mode, mapping a ``J``-shaped core to
  an ``I``-shaped observation;
* ``adjoint``  applies ``A_n`` on every mode, mapping back to ``J``-shape.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import DimensionError, SizeGuardError

KRONECKER_MAX_ENTRIES = 10**8
ORTHONORMAL_ATOL = 1e-10


def as_tensor(X) -> np.ndarray:
    """Return ``X`` as a float64 array, checking it is a valid dense tensor."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim < 1:
        raise DimensionError("a tensor needs at least one mode")
    if any(d < 1 for d in X.shape):
        raise DimensionError(f"every mode must have size >= 1, got {X.shape}")
    return X


def _check_mode(n: int, order: int) -> int:
    if not 1 <= n <= order:
        raise DimensionError(f"mode {n} out of range for an order-{order} tensor")
    return n - 1


def mode_n_unfold(X, n: int) -> np.ndarray:
    """Mode-``n`` matricization.

    Row ``j`` holds every entry whose mode-``n`` coordinate is ``j``; the
    remaining modes are linearized in ascending order, lowest mode fastest.
    """
    X = as_tensor(X)
    axis = _check_mode(n, X.ndim)
    return np.reshape(np.moveaxis(X, axis, 0), (X.shape[axis], -1), order="F")


def mode_n_fold(M, n: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`mode_n_unfold` for the given tensor ``shape``."""
    M = np.asarray(M, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    axis = _check_mode(n, len(shape))
    rest = int(np.prod(shape)) // shape[axis] if shape[axis] else 0
    if M.shape != (shape[axis], rest):
        raise DimensionError(
            f"matrix of shape {M.shape} cannot fold into {shape} along mode {n}"
        )
    moved = (shape[axis],) + shape[:axis] + shape[axis + 1:]
    return np.moveaxis(np.reshape(M, moved, order="F"), 0, axis)


def mode_n_product(X, M, n: int) -> np.ndarray:
    """``X x_n M``: multiply every mode-``n`` fiber of ``X`` by ``M``."""
    X = as_tensor(X)
    M = np.asarray(M, dtype=np.float64)
    axis = _check_mode(n, X.ndim)
    if M.ndim != 2 or M.shape[1] != X.shape[axis]:
        raise DimensionError(
            f"cannot apply a {M.shape} matrix to mode {n} of size {X.shape[axis]}"
        )
    return np.moveaxis(np.tensordot(M, X, axes=(1, axis)), 0, axis)


class FactorSet:
    """Ordered factor matrices ``A_1, ..., A_N`` defining the sensing operator.

    Parameters
    ----------
    factors : sequence of 2-D arrays
        Factor ``n`` has shape ``(J_n, I_n)`` with ``I_n <= J_n``.
    check_orthonormal : bool
        Verify ``||A_n^T A_n - I||_F <= 1e-10`` for every factor. Disable it
        only for algebraic tests that use general matrices.
    """

    def __init__(self, factors: Iterable, check_orthonormal: bool = True):
        mats = []
        for k, A in enumerate(factors, start=1):
            A = np.array(A, dtype=np.float64)
            if A.ndim != 2 or min(A.shape) < 1:
                raise DimensionError(f"factor {k} must be a non-empty matrix")
            if A.shape[1] > A.shape[0]:
                raise DimensionError(
                    f"factor {k} is {A.shape[0]}x{A.shape[1]}: I exceeds J"
                )
            if check_orthonormal:
                gap = np.linalg.norm(A.T @ A - np.eye(A.shape[1]))
                if gap > ORTHONORMAL_ATOL:
                    raise ValueError(
                        f"factor {k} columns are not orthonormal (gap {gap:.2e})"
                    )
            A.setflags(write=False)
            mats.append(A)
        if not mats:
            raise DimensionError("a FactorSet needs at least one factor")
        self._factors = tuple(mats)

    def __len__(self) -> int:
        return len(self._factors)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._factors)

    def __getitem__(self, k) -> np.ndarray:
        return self._factors[k]

    def __repr__(self) -> str:
        dims = ", ".join(f"{a}x{b}" for a, b in zip(self.J, self.I))
        return f"FactorSet({dims})"

    @property
    def order(self) -> int:
        return len(self._factors)

    @property
    def J(self) -> tuple[int, ...]:
        """Core (uncompressed) mode sizes."""
        return tuple(A.shape[0] for A in self._factors)

    @property
    def I(self) -> tuple[int, ...]:  # noqa: E743
        """Observation (compressed) mode sizes."""
        return tuple(A.shape[1] for A in self._factors)

    @property
    def storage_entries(self) -> int:
        """Entries held by the operator in factored form, ``sum_n J_n I_n``."""
        return sum(A.size for A in self._factors)

    @property
    def nbytes(self) -> int:
        return sum(A.nbytes for A in self._factors)

    @property
    def kronecker_entries(self) -> int:
        """Entries of the explicit Kronecker matrix, ``prod_n J_n I_n``."""
        return int(np.prod([A.size for A in self._factors], dtype=object))

    def forward(self, X) -> np.ndarray:
        return multi_mode_product(X, self, adjoint=False)

    def adjoint(self, Y) -> np.ndarray:
        return multi_mode_product(Y, self, adjoint=True)


def multi_mode_product(X, F: FactorSet, adjoint: bool = False) -> np.ndarray:
    """Apply every factor of ``F`` along its mode.

    With ``adjoint=False`` the input is core-shaped (``J``) and each mode is
    multiplied by ``A_n^T``; with ``adjoint=True`` the input is
    observation-shaped (``I``) and each mode is multiplied by ``A_n``.
    """
    X = as_tensor(X)
    expected = F.I if adjoint else F.J
    if X.shape != expected:
        raise DimensionError(
            f"tensor of shape {X.shape} does not match operator {expected}"
        )
    out = X
    for n, A in enumerate(F, start=1):
        out = mode_n_product(out, A if adjoint else A.T, n)
    return out


def kronecker_product(A, B) -> np.ndarray:
    """Block Kronecker product ``[a_ij B]``."""
    return np.kron(np.asarray(A, dtype=np.float64), np.asarray(B, dtype=np.float64))


def kronecker_operator(F, max_entries: int = KRONECKER_MAX_ENTRIES) -> np.ndarray:
    """Explicit matrix ``P = A_N kron ... kron A_1`` of size ``prod J x prod I``.

    ``P @ vec(Y) == vec(adjoint(Y))`` and ``P.T @ vec(X) == vec(forward(X))``.
    Only meant for oracle checks and the matrix-vector baseline; raises
    :class:`SizeGuardError` past ``max_entries``.
    """
    if not isinstance(F, FactorSet):
        F = FactorSet(F, check_orthonormal=False)
    entries = F.kronecker_entries
    if entries > max_entries:
        raise SizeGuardError(entries, max_entries)
    return reduce(kronecker_product, reversed(tuple(F)))


def vectorize(X) -> np.ndarray:
    """Flatten with mode 1 varying fastest."""
    return np.ravel(as_tensor(X), order="F")


def unvectorize(v, shape: Sequence[int]) -> np.ndarray:
    return np.reshape(np.asarray(v, dtype=np.float64), tuple(shape), order="F")


def frobenius_norm(X) -> float:
    return float(np.sqrt(np.sum(np.square(as_tensor(X)))))


def l1_norm(X) -> float:
    return float(np.sum(np.abs(as_tensor(X))))


def inner(X, Y) -> float:
    """Sum of elementwise products."""
    return float(np.sum(as_tensor(X) * as_tensor(Y)))


class SupportSet:
    """Immutable set of index tuples over a fixed tensor shape.

    Stored as a boolean mask; iteration yields 0-based index tuples in
    lexicographic order.
    """

    __slots__ = ("_mask",)

    def __init__(self, mask):
        mask = np.array(mask, dtype=bool)
        if mask.ndim < 1:
            raise DimensionError("support mask needs at least one mode")
        mask.setflags(write=False)
        self._mask = mask

    @classmethod
    def empty(cls, shape: Sequence[int]) -> "SupportSet":
        return cls(np.zeros(tuple(shape), dtype=bool))

    @classmethod
    def full(cls, shape: Sequence[int]) -> "SupportSet":
        return cls(np.ones(tuple(shape), dtype=bool))

    @classmethod
    def from_indices(cls, indices, shape: Sequence[int]) -> "SupportSet":
        shape = tuple(int(s) for s in shape)
        mask = np.zeros(shape, dtype=bool)
        idx = np.asarray(list(indices), dtype=np.int64).reshape(-1, len(shape))
        if idx.size:
            if (idx < 0).any() or (idx >= np.array(shape)).any():
                raise DimensionError(f"index out of bounds for shape {shape}")
            mask[tuple(idx.T)] = True
        return cls(mask)

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def shape(self) -> tuple[int, ...]:
        return self._mask.shape

    def indices(self) -> np.ndarray:
        """``(k, N)`` integer array of members."""
        return np.argwhere(self._mask)

    def to_list(self) -> list[list[int]]:
        return self.indices().tolist()

    def complement(self) -> "SupportSet":
        return SupportSet(~self._mask)

    def __len__(self) -> int:
        return int(np.count_nonzero(self._mask))

    def __bool__(self) -> bool:
        return bool(self._mask.any())

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        for row in self.indices():
            yield tuple(int(v) for v in row)

    def __contains__(self, index) -> bool:
        index = tuple(index)
        if len(index) != self._mask.ndim:
            return False
        if any(not 0 <= i < d for i, d in zip(index, self.shape)):
            return False
        return bool(self._mask[index])

    def _other(self, other) -> np.ndarray:
        if not isinstance(other, SupportSet):
            return NotImplemented
        if other.shape != self.shape:
            raise DimensionError(f"support shapes differ: {self.shape} vs {other.shape}")
        return other._mask

    def __or__(self, other):
        m = self._other(other)
        return m if m is NotImplemented else SupportSet(self._mask | m)

    def __and__(self, other):
        m = self._other(other)
        return m if m is NotImplemented else SupportSet(self._mask & m)

    def __sub__(self, other):
        m = self._other(other)
        return m if m is NotImplemented else SupportSet(self._mask & ~m)

    def __le__(self, other):
        m = self._other(other)
        return m if m is NotImplemented else not bool((self._mask & ~m).any())

    def __ge__(self, other):
        return other.__le__(self)

    def __eq__(self, other):
        if not isinstance(other, SupportSet):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._mask, other._mask)

    def __hash__(self):
        return hash((self.shape, np.packbits(self._mask).tobytes()))

    def __repr__(self) -> str:
        return f"SupportSet(shape={self.shape}, size={len(self)})"
