"""Discrete Laplace-Beltrami operator (cotan/mixed-area) and graph-Laplacian baseline.

The stiffness matrix C is symmetric with zero row sums; the operator acting on
signals is the asymmetric quotient diag(1/A) @ C. Spectral reasoning always
uses the generalized pair (C, diag(A)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import AssemblyError, PowerIterationError, UserError
from .mesh import TriMesh

FAMILIES = ("chebyshev", "laguerre", "hermite")

# Safety margin multiplying the estimated lambda_max before normalization, so
# the normalized spectrum stays inside the polynomial domain despite power
# iteration converging from below.
DEFAULT_LAMBDA_INFLATION = 1.01


@dataclass
class StiffnessAndMass:
    """Cotan stiffness matrix C (symmetric, zero row sums) and lumped areas A."""

    C: sparse.csr_matrix
    A: np.ndarray


@dataclass
class LBOperator:
    """Sparse operator diag(1/A) @ C; kind is 'laplace_beltrami' or 'graph_laplacian'."""

    kind: str
    C: sparse.csr_matrix
    A: np.ndarray
    lambda_max: float | None = None

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply Delta = diag(1/A) C to columns of x."""
        y = self.C @ x
        if x.ndim == 1:
            return y / self.A
        return y / self.A[:, None]


@dataclass
class NormalizedOperator:
    """Operator rescaled to the polynomial family's spectral domain.

    chebyshev: 2*Delta/lam - I  (spectrum in [-1, 1])
    laguerre/hermite: 2*Delta/lam  (spectrum in [0, 2])
    where lam = lambda_max * inflation.
    """

    base: LBOperator
    family: str
    lambda_scale: float
    matrix: sparse.csr_matrix
    _matrix_T: sparse.csr_matrix | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def matrix_T(self) -> sparse.csr_matrix:
        if self._matrix_T is None:
            self._matrix_T = self.matrix.T.tocsr()
        return self._matrix_T

    def map_eigenvalue(self, lam):
        """Image of a raw eigenvalue under the normalization's affine map."""
        lam = np.asarray(lam, dtype=np.float64)
        if self.family == "chebyshev":
            return 2.0 * lam / self.lambda_scale - 1.0
        return 2.0 * lam / self.lambda_scale

    def apply(self, X: np.ndarray, transpose: bool = False) -> np.ndarray:
        """Sparse product with X (or with the transposed operator)."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] != self.n:
            raise UserError(
                f"signal has {X.shape[0]} rows, operator expects {self.n}"
            )
        m = self.matrix_T if transpose else self.matrix
        return m @ X


def assemble_cotan(mesh: TriMesh) -> StiffnessAndMass:
    """Cotan stiffness and mixed Voronoi/Heron vertex areas.

    Off-diagonal C_ij accumulates -cot(angle)/2 per incident triangle; the
    diagonal makes rows sum to zero. Obtuse triangles give half their area to
    the obtuse vertex and a quarter to each of the others.
    """
    v = mesh.vertices
    f = mesh.faces
    n = mesh.n_vertices

    rows, cols, vals = [], [], []
    area = np.zeros(n)

    for fi, (a, b, c) in enumerate(f):
        p = v[[a, b, c]]
        # squared edge lengths opposite each corner
        l2 = np.array(
            [
                np.sum((p[1] - p[2]) ** 2),
                np.sum((p[2] - p[0]) ** 2),
                np.sum((p[0] - p[1]) ** 2),
            ]
        )
        tri_area = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
        if tri_area <= 0.0:
            raise AssemblyError(f"degenerate triangle at face {fi}")

        # cot at corner k, opposite edge k: (l_i^2 + l_j^2 - l_k^2) / (4 * area)
        cots = np.array(
            [
                (l2[1] + l2[2] - l2[0]),
                (l2[2] + l2[0] - l2[1]),
                (l2[0] + l2[1] - l2[2]),
            ]
        ) / (4.0 * tri_area)

        idx = (a, b, c)
        for k in range(3):
            i, j = idx[(k + 1) % 3], idx[(k + 2) % 3]
            w = -0.5 * cots[k]
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]

        obtuse = np.nonzero(cots < 0.0)[0]
        if len(obtuse):
            ob = obtuse[0]
            for k in range(3):
                area[idx[k]] += tri_area / 2.0 if k == ob else tri_area / 4.0
        else:
            # Voronoi: corner k gets (l_i^2 cot_i + l_j^2 cot_j) / 8
            for k in range(3):
                i, j = (k + 1) % 3, (k + 2) % 3
                area[idx[k]] += (l2[i] * cots[i] + l2[j] * cots[j]) / 8.0

    C = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    C.sum_duplicates()
    diag = -np.asarray(C.sum(axis=1)).ravel()
    C = C + sparse.diags(diag)
    return StiffnessAndMass(C=C.tocsr(), A=area)


def lb_operator(mesh: TriMesh) -> LBOperator:
    cm = assemble_cotan(mesh)
    return LBOperator(kind="laplace_beltrami", C=cm.C, A=cm.A)


def assemble_graph_laplacian(mesh: TriMesh) -> LBOperator:
    """Combinatorial Laplacian D - W with unit edge weights, unit vertex mass."""
    adj = mesh.adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    C = (sparse.diags(deg) - adj).tocsr()
    return LBOperator(kind="graph_laplacian", C=C, A=np.ones(mesh.n_vertices))


def estimate_lambda_max(
    op: LBOperator,
    tol: float = 1e-7,
    max_iters: int = 10000,
    seed: int = 0,
) -> float:
    """Largest generalized eigenvalue of (C, diag(A)) by power iteration on Delta.

    The result is cached on the operator. Start vector is normalized ones plus
    a small seeded perturbation (ones alone lie in the null space).

    Stopping is two-tier. The A-norm residual bounds the eigenvalue error for
    this A-self-adjoint operator, so a small residual certifies convergence.
    When the top of the spectrum is nearly degenerate the residual decays
    arbitrarily slowly while the Rayleigh quotients form a clean geometric
    sequence; in that regime the Aitken extrapolate of the quotient sequence
    is accepted once it has stabilized and the iterate is already close to the
    invariant subspace (residual below sqrt(tol)).
    """
    n = op.n
    rng = np.random.default_rng(seed)
    x = np.ones(n) / np.sqrt(n) + 1e-3 * rng.standard_normal(n)
    x /= np.linalg.norm(x)

    lam = 0.0
    lam_hist: list[float] = []
    aitken_prev = None
    aitken_hits = 0
    resid_prev = math.inf
    stall_count = 0
    for _ in range(max_iters):
        y = op.matvec(x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            op.lambda_max = 0.0
            return 0.0
        y /= ny
        dy = op.matvec(y)
        yy = float(np.dot(y * op.A, y))
        lam = float(np.dot(y * op.A, dy) / yy)
        resid = dy - lam * y
        resid_norm = math.sqrt(float(np.dot(resid * op.A, resid)) / yy)
        scale = max(abs(lam), 1e-300)
        if resid_norm <= tol * scale:
            op.lambda_max = lam
            return lam

        # the Aitken shortcut only arms once the residual has visibly stopped
        # making progress (decay factor within 0.1% of 1 for many iterations)
        stall_count = stall_count + 1 if resid_norm > 0.999 * resid_prev else 0
        resid_prev = resid_norm

        lam_hist = (lam_hist + [lam])[-3:]
        if (
            len(lam_hist) == 3
            and stall_count >= 10
            and resid_norm <= math.sqrt(tol) * scale
        ):
            d0 = lam_hist[1] - lam_hist[0]
            d1 = lam_hist[2] - lam_hist[1]
            denom = d1 - d0
            if denom != 0.0 and abs(d1) < abs(d0):
                aitken = lam_hist[2] - d1 * d1 / denom
                if (
                    aitken_prev is not None
                    and abs(aitken - aitken_prev) <= tol * abs(aitken)
                ):
                    aitken_hits += 1
                    if aitken_hits >= 3:
                        op.lambda_max = aitken
                        return aitken
                else:
                    aitken_hits = 0
                aitken_prev = aitken
            elif d1 == 0.0 and d0 == 0.0:
                # quotient fully stagnated at machine precision
                op.lambda_max = lam
                return lam
        x = y
    raise PowerIterationError(
        f"power iteration did not converge in {max_iters} iterations",
        last_estimate=lam,
    )


def normalize(
    op: LBOperator,
    family: str,
    lambda_inflation: float = DEFAULT_LAMBDA_INFLATION,
) -> NormalizedOperator:
    """Build the family-specific normalized operator from a cached lambda_max."""
    if family not in FAMILIES:
        raise UserError(f"unknown polynomial family {family!r}")
    if op.lambda_max is None:
        raise UserError("lambda_max unset; call estimate_lambda_max first")
    lam = op.lambda_max * lambda_inflation
    if lam <= 0.0:
        raise UserError("lambda_max must be positive to normalize")
    scaled = sparse.diags(2.0 / (lam * op.A)) @ op.C
    if family == "chebyshev":
        scaled = scaled - sparse.identity(op.n, format="csr")
    return NormalizedOperator(
        base=op, family=family, lambda_scale=lam, matrix=scaled.tocsr()
    )


def write_triplets(C: sparse.spmatrix, fh) -> None:
    """Sparse-triplet text: header 'rows cols nnz', then 'i j value' (0-based)."""
    coo = C.tocoo()
    fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
    for i, j, v in zip(coo.row, coo.col, coo.data):
        fh.write(f"{i} {j} {v:.17g}\n")


def read_triplets(fh) -> sparse.csr_matrix:
    header = fh.readline().split()
    if len(header) != 3:
        raise UserError("malformed triplet header, expected 'rows cols nnz'")
    rows, cols, nnz = (int(x) for x in header)
    i = np.zeros(nnz, dtype=np.int64)
    j = np.zeros(nnz, dtype=np.int64)
    v = np.zeros(nnz)
    for k in range(nnz):
        parts = fh.readline().split()
        if len(parts) != 3:
            raise UserError(f"malformed triplet line {k + 2}")
        i[k], j[k], v[k] = int(parts[0]), int(parts[1]), float(parts[2])
    return sparse.csr_matrix((v, (i, j)), shape=(rows, cols))


def write_area(A: np.ndarray, fh) -> None:
    fh.write(f"{len(A)}\n")
    for a in A:
        fh.write(f"{a:.17g}\n")


def read_area(fh) -> np.ndarray:
    n = int(fh.readline().strip())
    return np.array([float(fh.readline()) for _ in range(n)])
