"""Chebyshev, Laguerre and normalized Hermite polynomials: closed forms,
three-term recurrences, and polynomial spectral filtering of mesh signals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UserError
from .kernels import recurrence_basis
from .operators import FAMILIES, NormalizedOperator


@dataclass(frozen=True)
class PolyFamily:
    """Recurrence P_{k+1} = a(k) x P_k + b(k) P_k + c(k) P_{k-1}."""

    tag: str
    domain: tuple

    def a(self, k: int) -> float:
        if self.tag == "chebyshev":
            return 1.0 if k == 0 else 2.0
        if self.tag == "laguerre":
            return -1.0 / (k + 1)
        return math.sqrt(2.0 / (k + 1))

    def b(self, k: int) -> float:
        if self.tag == "laguerre":
            return (2 * k + 1) / (k + 1)
        return 0.0

    def c(self, k: int) -> float:
        if self.tag == "chebyshev":
            return -1.0
        if self.tag == "laguerre":
            return -k / (k + 1)
        return -math.sqrt(k / (k + 1))

    def coeff_arrays(self, K: int):
        ks = range(max(K - 1, 0))
        return (
            np.array([self.a(k) for k in ks]),
            np.array([self.b(k) for k in ks]),
            np.array([self.c(k) for k in ks]),
        )


FAMILY = {
    "chebyshev": PolyFamily("chebyshev", (-1.0, 1.0)),
    "laguerre": PolyFamily("laguerre", (0.0, 2.0)),
    "hermite": PolyFamily("hermite", (0.0, 2.0)),
}


def get_family(tag: str) -> PolyFamily:
    if tag not in FAMILY:
        raise UserError(f"unknown polynomial family {tag!r}; choose from {FAMILIES}")
    return FAMILY[tag]


def hermite_unnormalized(k: int, lam: float) -> float:
    """Physicists' Hermite polynomial H_k via its finite sum."""
    total = 0.0
    for l in range(k // 2 + 1):
        total += (-1.0) ** l * (2.0 * lam) ** (k - 2 * l) / (
            math.factorial(l) * math.factorial(k - 2 * l)
        )
    return math.factorial(k) * total


def eval_poly_scalar(family: str, k: int, lam: float) -> float:
    """Closed-form P_k(lam). Hermite is normalized by 1/sqrt(2^k k!)."""
    if k < 0:
        raise UserError("polynomial order must be nonnegative")
    if family == "chebyshev":
        if not -1.0 - 1e-12 <= lam <= 1.0 + 1e-12:
            raise UserError(f"chebyshev domain is [-1, 1], got {lam}")
        return math.cos(k * math.acos(min(1.0, max(-1.0, lam))))
    if family == "laguerre":
        return sum(
            math.comb(k, l) * (-lam) ** l / math.factorial(l) for l in range(k + 1)
        )
    if family == "hermite":
        return hermite_unnormalized(k, lam) / math.sqrt(2.0**k * math.factorial(k))
    raise UserError(f"unknown polynomial family {family!r}")


def eval_poly_recurrence(family: str, K: int, lam) -> np.ndarray:
    """[P_0(lam), ..., P_{K-1}(lam)] by the three-term recurrence (vectorized)."""
    fam = get_family(family)
    lam = np.asarray(lam, dtype=np.float64)
    out = np.zeros((K,) + lam.shape)
    out[0] = 1.0
    prev = np.zeros_like(lam)
    cur = np.ones_like(lam)
    for k in range(K - 1):
        nxt = fam.a(k) * lam * cur + fam.b(k) * cur + fam.c(k) * prev
        out[k + 1] = nxt
        prev, cur = cur, nxt
    return out


@dataclass
class FilterCoefficients:
    """Expansion coefficients theta_0..theta_{K-1} for one polynomial family."""

    theta: np.ndarray
    family: str

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1 or len(theta) < 1:
            raise UserError("theta must be a 1-D array with K >= 1 entries")
        if not np.all(np.isfinite(theta)):
            raise UserError("theta entries must be finite")
        get_family(self.family)
        object.__setattr__(self, "theta", theta)

    @property
    def K(self) -> int:
        return len(self.theta)

    def spectrum(self, lam_normalized) -> np.ndarray:
        """g(lam) = sum_k theta_k P_k(lam) on already-normalized eigenvalues."""
        basis = eval_poly_recurrence(self.family, self.K, lam_normalized)
        return np.tensordot(self.theta, basis, axes=1)


def poly_basis_apply(
    op: NormalizedOperator, f: np.ndarray, K: int, transpose: bool = False
) -> np.ndarray:
    """[P_0(S)f, ..., P_{K-1}(S)f] for S the (optionally transposed) normalized
    operator; exactly K-1 sparse applications."""
    if K < 1:
        raise UserError("K must be >= 1")
    fam = get_family(op.family)
    ak, bk, ck = fam.coeff_arrays(K)
    matrix = op.matrix_T if transpose else op.matrix
    return recurrence_basis(matrix, np.asarray(f, dtype=np.float64), K, ak, bk, ck)


def filter_apply(
    op: NormalizedOperator, f: np.ndarray, coeffs: FilterCoefficients
) -> np.ndarray:
    """h = sum_k theta_k P_k(S) f, single recurrence pass without basis storage."""
    if coeffs.family != op.family:
        raise UserError(
            f"coefficient family {coeffs.family!r} != operator family {op.family!r}"
        )
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != op.n:
        raise UserError(f"signal has {f.shape[0]} rows, operator expects {op.n}")
    fam = get_family(op.family)
    theta = coeffs.theta

    prev = np.zeros_like(f)
    cur = f
    h = theta[0] * f
    for k in range(coeffs.K - 1):
        nxt = fam.a(k) * op.apply(cur)
        if fam.b(k) != 0.0:
            nxt += fam.b(k) * cur
        if k >= 1:
            nxt += fam.c(k) * prev
        h = h + theta[k + 1] * nxt
        prev, cur = cur, nxt
    return h


def impulse_response(
    op: NormalizedOperator, j: int, coeffs: FilterCoefficients
) -> np.ndarray:
    """Filter output for the indicator signal of vertex j."""
    if not 0 <= j < op.n:
        raise UserError(f"vertex index {j} out of range")
    f = np.zeros(op.n)
    f[j] = 1.0
    return filter_apply(op, f, coeffs)
