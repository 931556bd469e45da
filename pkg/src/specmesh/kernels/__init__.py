"""Recurrence kernel selection: compiled Cython extension when available,
pure scipy fallback otherwise. Set SPECMESH_NO_EXT=1 to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np
from scipy import sparse

from . import _fallback

HAVE_EXT = False
_ext = None
if not os.environ.get("SPECMESH_NO_EXT"):
    try:
        from . import _recurrence as _ext

        HAVE_EXT = True
    except ImportError:
        _ext = None


def backend_name() -> str:
    return "cython" if HAVE_EXT else "python"


def recurrence_basis(
    matrix: sparse.csr_matrix,
    X: np.ndarray,
    K: int,
    ak: np.ndarray,
    bk: np.ndarray,
    ck: np.ndarray,
) -> np.ndarray:
    """Three-term recurrence basis [P_0(S)X, ..., P_{K-1}(S)X], shape (K, n, m).

    P_{k+1}X = ak[k] * S @ (P_k X) + bk[k] * P_k X + ck[k] * P_{k-1} X, with
    P_{-1}X = 0 and P_0 X = X. Coefficient arrays have length K-1. Entries of
    the output untouched by any sparse row stay exactly zero (structural
    locality of polynomial filters relies on this).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    n, m = X.shape
    if matrix.shape[0] != n:
        raise ValueError(f"signal has {n} rows, operator expects {matrix.shape[0]}")

    out = np.zeros((K, n, m), dtype=np.float64)
    out[0] = X
    if K == 1:
        return out[:, :, 0] if squeeze else out

    ak = np.ascontiguousarray(ak, dtype=np.float64)
    bk = np.ascontiguousarray(bk, dtype=np.float64)
    ck = np.ascontiguousarray(ck, dtype=np.float64)
    if len(ak) < K - 1 or len(bk) < K - 1 or len(ck) < K - 1:
        raise ValueError("coefficient arrays must have length >= K-1")

    if HAVE_EXT:
        m_csr = matrix.tocsr()
        _ext.recurrence_basis(
            np.ascontiguousarray(m_csr.data, dtype=np.float64),
            np.ascontiguousarray(m_csr.indices, dtype=np.int32),
            np.ascontiguousarray(m_csr.indptr, dtype=np.int32),
            np.ascontiguousarray(X),
            ak,
            bk,
            ck,
            out,
        )
    else:
        _fallback.recurrence_basis(matrix, X, ak, bk, ck, out)

    return out[:, :, 0] if squeeze else out
