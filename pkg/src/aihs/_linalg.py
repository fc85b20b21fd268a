"""Small shared linear-algebra helpers.

All subspaces are handled through explicit column matrices.  Columns with
wildly different magnitudes are common here (orbit tails decay fast), so every
span computation normalizes columns first; that changes nothing about the
span but keeps the SVD/QR honest.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "as_complex_matrix",
    "unit_columns",
    "orthonormal_columns",
    "distance_to_span",
    "numerical_rank",
    "smallest_singular_value",
    "min_norm_dual",
    "null_space",
]

_RANK_RTOL = 1e-10


def as_complex_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {m.shape}")
    return m


def unit_columns(a: np.ndarray) -> np.ndarray:
    """Scale each nonzero column to unit Euclidean norm (zero columns dropped)."""
    a = as_complex_matrix(a)
    norms = np.linalg.norm(a, axis=0)
    keep = norms > 0.0
    return a[:, keep] / norms[keep]


def orthonormal_columns(a: np.ndarray, rtol: float = _RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column span, robust to column scaling."""
    a = unit_columns(a)
    if a.shape[1] == 0:
        return a
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    rank = int(np.count_nonzero(s > rtol * s[0])) if s[0] > 0.0 else 0
    return u[:, :rank]


def distance_to_span(v: np.ndarray, a: np.ndarray, rtol: float = _RANK_RTOL) -> float:
    """Euclidean distance from ``v`` to the column span of ``a``."""
    v = np.asarray(v, dtype=np.complex128)
    if a.size == 0 or a.shape[1] == 0:
        return float(np.linalg.norm(v))
    q = orthonormal_columns(a, rtol)
    return float(np.linalg.norm(v - q @ (q.conj().T @ v)))


def numerical_rank(a: np.ndarray, rtol: float = _RANK_RTOL) -> int:
    """Rank of the column span with columns normalized to unit scale."""
    a = unit_columns(a)
    if a.shape[1] == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def smallest_singular_value(a: np.ndarray) -> float:
    s = np.linalg.svd(as_complex_matrix(a), compute_uv=False)
    return float(s[-1]) if s.size else 0.0


def min_norm_dual(orbit: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Minimum-norm representer ``f`` with ``f^H x_n = values[n]`` for each column.

    Rows of the constraint system are scaled to unit norm before the solve;
    for a consistent system this leaves the solution set (and hence the
    minimum-norm point) unchanged while taming the orbit's dynamic range.
    """
    x = as_complex_matrix(orbit)
    v = np.asarray(values, dtype=np.complex128)
    if v.shape != (x.shape[1],):
        raise ValueError(f"expected {x.shape[1]} values, got {v.shape}")
    norms = np.linalg.norm(x, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("orbit matrix has a zero column")
    # row n states x_n^H f = conj(v_n), i.e. f^H x_n = v_n
    a = (x / norms).conj().T
    f, *_ = np.linalg.lstsq(a, np.conj(v) / norms, rcond=None)
    return f


def null_space(a: np.ndarray, rtol: float = _RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the (right) null space of ``a``."""
    a = as_complex_matrix(a)
    u, s, vh = np.linalg.svd(a)
    if s.size and s[0] > 0.0:
        rank = int(np.count_nonzero(s > rtol * s[0]))
    else:
        rank = 0
    return vh[rank:].conj().T


def qr_basis(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis via column-pivoted QR of the column-normalized matrix."""
    a = unit_columns(a)
    q, _, _ = scipy.linalg.qr(a, mode="economic", pivoting=True)
    return q[:, : a.shape[1]]
