"""Dense matrix helpers: SVD, norms and rank truncation.

Matrices are plain 2-D ``float64`` numpy arrays. Every function here is
pure and returns new arrays.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "DecompositionError",
    "SvdResult",
    "as_matrix",
    "svd",
    "norm",
    "rank_truncate",
]


class DecompositionError(RuntimeError):
    """Raised when the SVD routine fails to converge."""


class SvdResult(NamedTuple):
    """Thin SVD ``a = u @ diag(s) @ v.T`` with ``k = min(d1, d2)``."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return `a` as a finite 2-D float64 array or raise ValueError."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def svd(a) -> SvdResult:
    """Thin singular value decomposition.

    Singular values come back sorted in nonincreasing order. The routine is
    LAPACK's divide-and-conquer ``gesdd`` with a fallback to ``gesvd``.
    """
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            import scipy.linalg

            u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise DecompositionError(
                f"SVD did not converge for a {a.shape[0]}x{a.shape[1]} matrix"
            ) from exc
    return SvdResult(u, s, vt.T)


def norm(a, kind: str = "frobenius") -> float:
    """Matrix norm: ``frobenius``, ``nuclear``, ``inf`` (max-abs entry) or ``operator``."""
    a = as_matrix(a)
    if kind == "frobenius":
        return float(np.sqrt(np.sum(a * a)))
    if kind == "inf":
        return float(np.max(np.abs(a)))
    if kind == "nuclear":
        return float(np.sum(np.linalg.svd(a, compute_uv=False)))
    if kind == "operator":
        return float(np.linalg.svd(a, compute_uv=False)[0])
    raise ValueError(f"unknown norm kind {kind!r}")


def rank_truncate(a, r: int) -> np.ndarray:
    """Best rank-`r` approximation (keeps the `r` leading singular triplets).

    Ties among singular values are broken by the order the SVD returns.
    """
    a = as_matrix(a)
    k = min(a.shape)
    if not (isinstance(r, (int, np.integer)) and 1 <= r <= k):
        raise ValueError(f"rank must be an integer in [1, {k}], got {r!r}")
    u, s, v = svd(a)
    return (u[:, :r] * s[:r]) @ v[:, :r].T
