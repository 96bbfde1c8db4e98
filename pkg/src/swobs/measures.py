"""Matrix measures (logarithmic norms) and the vector norms that induce them.

Three measures are supported, selected by :class:`MeasureKind`: the measure
induced by the l1 norm (column sums), by the Euclidean norm (symmetric part
eigenvalue), and by the uniform norm (row sums).  A negative measure of a
Jacobian certifies exponential contraction in the inducing norm, which is
what every certification routine in this package ultimately checks.

All functions here are pure and safe to call from multiple threads.
"""

from __future__ import annotations

import enum

import numpy as np


class MeasureKind(enum.Enum):
    """Selector for the matrix measure and its inducing vector norm."""

    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def parse(cls, name: str) -> "MeasureKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown measure kind {name!r}; expected one of l1, l2, linf"
            ) from None


def _check_square(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    return A


def measure(kind: MeasureKind, A: np.ndarray) -> float:
    """Matrix measure of a dense real square matrix.

    L1: max over columns j of a_jj + sum_{i != j} |a_ij|.
    L2: largest eigenvalue of (A + A^T)/2.
    LINF: max over rows i of a_ii + sum_{j != i} |a_ij|.
    """
    A = _check_square(A)
    d = np.diag(A)
    if kind is MeasureKind.L1:
        return float(np.max(d + np.sum(np.abs(A), axis=0) - np.abs(d)))
    if kind is MeasureKind.LINF:
        return float(np.max(d + np.sum(np.abs(A), axis=1) - np.abs(d)))
    if kind is MeasureKind.L2:
        sym = 0.5 * (A + A.T)
        return float(np.linalg.eigvalsh(sym)[-1])
    raise ValueError(f"unsupported measure kind: {kind!r}")


def operator_norm(kind: MeasureKind, M: np.ndarray) -> float:
    """Induced operator norm matching `kind` (max column sum, spectral, max row sum)."""
    M = _check_square(M)
    if kind is MeasureKind.L1:
        return float(np.max(np.sum(np.abs(M), axis=0)))
    if kind is MeasureKind.LINF:
        return float(np.max(np.sum(np.abs(M), axis=1)))
    if kind is MeasureKind.L2:
        return float(np.linalg.svd(M, compute_uv=False)[0])
    raise ValueError(f"unsupported measure kind: {kind!r}")


def measure_limit_oracle(kind: MeasureKind, A: np.ndarray, h: float) -> float:
    """One-sided difference quotient (||I + h*A|| - 1)/h.

    Converges to measure(kind, A) as h -> 0+ and serves as an independent
    cross-check of the closed forms; the error shrinks linearly in h.
    """
    if h <= 0.0:
        raise ValueError(f"h must be positive, got {h}")
    A = _check_square(A)
    n = A.shape[0]
    return (operator_norm(kind, np.eye(n) + h * A) - 1.0) / h


def vec_norm(kind: MeasureKind, v: np.ndarray) -> float:
    """Vector norm inducing the given measure (l1, Euclidean, or uniform)."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    if kind is MeasureKind.L1:
        return float(np.sum(np.abs(v)))
    if kind is MeasureKind.L2:
        return float(np.sqrt(np.sum(v * v)))
    if kind is MeasureKind.LINF:
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise ValueError(f"unsupported measure kind: {kind!r}")
