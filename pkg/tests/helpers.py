"""Shared fixtures builders and independent oracles for the test suite."""

import numpy as np

from sparse_tucker.synthetic import random_orthonormal_matrix
from sparse_tucker.tensor_core import FactorSet


def orthonormal_factors(J, I, rng):
    return FactorSet(random_orthonormal_matrix(j, i, rng) for j, i in zip(J, I))


def kron_matrix(F):
    """P = A_N kron ... kron A_1 built with numpy only."""
    P = np.array([[1.0]])
    for A in F:
        P = np.kron(np.asarray(A), P)
    return P


def vec(X):
    return np.asarray(X).ravel(order="F")


def soft(u, a):
    return np.sign(u) * np.maximum(np.abs(u) - a, 0.0)


def vector_fista(P, y, lam, L, iters):
    """Matrix-vector FISTA on y = P^T x; returns every iterate x_1..x_iters."""
    x_prev = P @ y
    z = x_prev
    d = 1.0
    out = []
    for _ in range(iters):
        x = soft(z - (1.0 / L) * (P @ (P.T @ z - y)), 1.0 / (lam * L))
        d_next = (1 + np.sqrt(1 + 4 * d * d)) / 2
        z = x + ((d - 1) / d_next) * (x - x_prev)
        x_prev, d = x, d_next
        out.append(x)
    return out


def vector_objective(P, y, x, lam):
    return np.abs(x).sum() + 0.5 * lam * np.sum((y - P.T @ x) ** 2)
