"""DTF-1 binary tensor files.

Layout (little endian)::

    b"DTF1" | uint32 N | N x uint64 dims | prod(dims) x float64, mode-1 fastest

Matrices are stored as order-2 tensors.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .tensor_core import as_tensor

MAGIC = b"DTF1"


def dumps(X) -> bytes:
    X = as_tensor(X)
    header = MAGIC + struct.pack("<I", X.ndim) + struct.pack(f"<{X.ndim}Q", *X.shape)
    return header + np.ravel(X, order="F").astype("<f8").tobytes()


def loads(buf: bytes) -> np.ndarray:
    if len(buf) < 8 or buf[:4] != MAGIC:
        raise ValueError("not a DTF-1 stream (bad magic)")
    (ndim,) = struct.unpack_from("<I", buf, 4)
    if ndim < 1:
        raise ValueError("DTF-1 stream declares order 0")
    off = 8 + 8 * ndim
    if len(buf) < off:
        raise ValueError("truncated DTF-1 header")
    dims = struct.unpack_from(f"<{ndim}Q", buf, 8)
    count = int(np.prod(dims, dtype=object))
    if len(buf) != off + 8 * count:
        raise ValueError(
            f"DTF-1 payload holds {len(buf) - off} bytes, expected {8 * count}"
        )
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=off)
    return np.reshape(data.astype(np.float64), dims, order="F")


def write(path: str | os.PathLike, X) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(X))


def read(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return loads(fh.read())
