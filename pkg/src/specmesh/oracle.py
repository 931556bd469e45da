"""Exact spectral machinery on small meshes: dense generalized eigensolve of
(C, diag(A)) and exact spectral filtering. Ground truth for the polynomial
approximations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError, UserError
from .operators import LBOperator, StiffnessAndMass

DENSE_GUARD = 3000


@dataclass
class EigenSystem:
    """Ascending generalized eigenvalues with A-orthonormal eigenvectors.

    psis columns satisfy C psi_j = lambda_j diag(A) psi_j and
    psi_i^T diag(A) psi_j = delta_ij.
    """

    lambdas: np.ndarray
    psis: np.ndarray
    mass: np.ndarray

    @property
    def n(self) -> int:
        return len(self.mass)

    @property
    def is_full(self) -> bool:
        return len(self.lambdas) == self.n


def eig_decompose(cm, m="all") -> EigenSystem:
    """m smallest generalized eigenpairs of (C, diag(A)).

    Solved through the symmetric transform A^{-1/2} C A^{-1/2}; eigenvector
    signs fixed so the first entry of significant magnitude is positive.
    """
    if isinstance(cm, (StiffnessAndMass, LBOperator)):
        C, A = cm.C, cm.A
    else:
        C, A = cm
    n = C.shape[0]
    if n > DENSE_GUARD:
        raise UserError(f"dense eigensolve guard: {n} > {DENSE_GUARD} vertices")
    if np.any(A <= 0):
        raise UserError("mass vector must be positive")

    sqrt_a = np.sqrt(A)
    S = (C.toarray() if hasattr(C, "toarray") else np.asarray(C)) / np.outer(
        sqrt_a, sqrt_a
    )
    S = 0.5 * (S + S.T)
    try:
        w, u = scipy.linalg.eigh(S)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc

    psis = u / sqrt_a[:, None]
    # deterministic sign: make the first entry of significant size positive
    for j in range(psis.shape[1]):
        col = psis[:, j]
        nz = np.nonzero(np.abs(col) > 1e-10 * np.abs(col).max())[0]
        if len(nz) and col[nz[0]] < 0:
            psis[:, j] = -col

    if m != "all":
        m = int(m)
        if not 1 <= m <= n:
            raise UserError(f"requested {m} eigenpairs of {n}")
        w, psis = w[:m], psis[:, :m]
    return EigenSystem(lambdas=w, psis=psis, mass=np.asarray(A, dtype=np.float64))


def forward_coeffs(eig: EigenSystem, f: np.ndarray) -> np.ndarray:
    """Spectral coefficients c_j = psi_j^T diag(A) f."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != eig.n:
        raise UserError(f"signal has {f.shape[0]} entries, expected {eig.n}")
    return eig.psis.T @ (eig.mass * f)


def spectral_filter(eig: EigenSystem, f: np.ndarray, g) -> np.ndarray:
    """Exact filtering h = sum_j g(lambda_j) c_j psi_j; needs the full basis."""
    if not eig.is_full:
        raise UserError("spectral_filter requires a full eigendecomposition")
    c = forward_coeffs(eig, f)
    glam = np.asarray([g(lam) for lam in eig.lambdas], dtype=np.float64)
    return eig.psis @ (glam * c)
