"""Multilevel coarsening: greedy local normalized-cut matching, merged-weight
operator updates, balanced binary tree with fake padding nodes, and the
stride-2 average pooling (with adjoint) that the tree layout enables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import NumericalError, UserError
from .operators import (
    DEFAULT_LAMBDA_INFLATION,
    LBOperator,
    NormalizedOperator,
    estimate_lambda_max,
    normalize,
)

FAKE = -1


@dataclass
class Matching:
    """Disjoint vertex pairing along edges; unmatched vertices are singletons."""

    pairs: list
    singletons: list
    n: int

    def clusters(self) -> list:
        """Pairs then singletons, each as an ascending index tuple."""
        return [tuple(sorted(p)) for p in self.pairs] + [(s,) for s in self.singletons]


def normalized_cut_weight(op: LBOperator, i: int, j: int) -> float:
    """Local normalized cut -Delta_ij (1/Delta_ii + 1/Delta_jj); 0 off-edges."""
    dij = op.C[i, j] / op.A[i]
    if dij == 0.0:
        return 0.0
    dii = op.C[i, i] / op.A[i]
    djj = op.C[j, j] / op.A[j]
    if dii == 0.0 or djj == 0.0:
        raise NumericalError(f"zero operator diagonal at vertex {i if dii == 0 else j}")
    return -dij * (1.0 / dii + 1.0 / djj)


def _neighbor_lists(C: sparse.csr_matrix):
    c = C.tocsr()
    out = []
    for i in range(c.shape[0]):
        cols = c.indices[c.indptr[i]:c.indptr[i + 1]]
        vals = c.data[c.indptr[i]:c.indptr[i + 1]]
        keep = (cols != i) & (vals != 0.0)
        out.append(cols[keep])
    return out


def greedy_match(op: LBOperator, order_seed: int = 0) -> Matching:
    """Greedy matching maximizing the local normalized cut.

    Vertices are visited in ascending degree; ties break by ascending index
    (order_seed 0) or by a seeded permutation. Each visited vertex pairs with
    its best unvisited neighbor, ties by smaller index.
    """
    n = op.n
    nbrs = _neighbor_lists(op.C)
    degree = np.array([len(x) for x in nbrs])
    if order_seed == 0:
        tie = np.arange(n)
    else:
        tie = np.random.default_rng(order_seed).permutation(n)
    order = np.lexsort((tie, degree))

    visited = np.zeros(n, dtype=bool)
    pairs, singletons = [], []
    for u in order:
        if visited[u]:
            continue
        visited[u] = True
        best, best_w = -1, -np.inf
        for v in nbrs[u]:
            if visited[v]:
                continue
            w = normalized_cut_weight(op, u, v)
            if w > best_w or (w == best_w and v < best):
                best, best_w = int(v), w
        if best < 0:
            singletons.append(int(u))
        else:
            visited[best] = True
            pairs.append((int(u), best))
    return Matching(pairs=pairs, singletons=singletons, n=n)


def _parent_assignment(matching: Matching) -> np.ndarray:
    """Child -> parent indices; parents numbered by first member encountered."""
    parent = np.full(matching.n, -1, dtype=np.int64)
    mate = np.arange(matching.n)
    for i, j in matching.pairs:
        mate[i], mate[j] = j, i
    nxt = 0
    for v in range(matching.n):
        if parent[v] >= 0:
            continue
        parent[v] = nxt
        parent[mate[v]] = nxt
        nxt += 1
    return parent


def coarsen_operator(op: LBOperator, matching: Matching):
    """Merge matched vertices: edge weights between supernodes are summed, the
    diagonal is rebuilt from row sums, areas add (unit mass stays unit for the
    graph-Laplacian kind). Returns (coarse operator, parent map)."""
    if matching.n != op.n:
        raise UserError("matching size does not match operator")
    parent = _parent_assignment(matching)
    n_coarse = int(parent.max()) + 1 if op.n else 0
    P = sparse.csr_matrix(
        (np.ones(op.n), (np.arange(op.n), parent)), shape=(op.n, n_coarse)
    )
    merged = (P.T @ op.C @ P).tocoo()
    off = merged.row != merged.col
    C = sparse.csr_matrix(
        (merged.data[off], (merged.row[off], merged.col[off])),
        shape=(n_coarse, n_coarse),
    )
    diag = -np.asarray(C.sum(axis=1)).ravel()
    C = (C + sparse.diags(diag)).tocsr()
    if op.kind == "graph_laplacian":
        A = np.ones(n_coarse)
    else:
        A = P.T @ op.A
    return LBOperator(kind=op.kind, C=C, A=A), parent


@dataclass
class Level:
    """One hierarchy level, finest = level 0.

    permutation maps padded slots to original vertex indices (FAKE for padding);
    leaf_counts[slot] counts real finest-level slots beneath it.
    """

    operator: LBOperator
    permutation: np.ndarray
    fake_mask: np.ndarray
    leaf_counts: np.ndarray
    parent_map: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.operator.n

    @property
    def padded_size(self) -> int:
        return len(self.permutation)


@dataclass
class CoarseningHierarchy:
    levels: list
    depth: int
    order_seed: int
    _padded_ops: dict = field(default_factory=dict, repr=False)
    _normalized: dict = field(default_factory=dict, repr=False)

    def padded_size(self, level: int) -> int:
        return self.levels[level].padded_size

    def padded_operator(self, level: int) -> LBOperator:
        """Level operator re-indexed into padded slot order; fake slots carry
        zero stiffness rows and unit mass."""
        if level not in self._padded_ops:
            lv = self.levels[level]
            m = lv.padded_size
            real = np.nonzero(~lv.fake_mask)[0]
            sel = sparse.csr_matrix(
                (np.ones(len(real)), (real, lv.permutation[real])),
                shape=(m, lv.n),
            )
            C = (sel @ lv.operator.C @ sel.T).tocsr()
            A = np.ones(m)
            A[real] = lv.operator.A[lv.permutation[real]]
            self._padded_ops[level] = LBOperator(kind=lv.operator.kind, C=C, A=A)
        return self._padded_ops[level]

    def normalized_operator(
        self,
        level: int,
        family: str,
        lambda_inflation: float = DEFAULT_LAMBDA_INFLATION,
    ) -> NormalizedOperator:
        """Padded operator normalized with this level's own lambda_max."""
        key = (level, family, lambda_inflation)
        if key not in self._normalized:
            op = self.padded_operator(level)
            if op.lambda_max is None:
                estimate_lambda_max(op)
            self._normalized[key] = normalize(op, family, lambda_inflation)
        return self._normalized[key]

    def scatter(self, signals: np.ndarray) -> np.ndarray:
        """Fine vertex signals (..., n) -> padded level-0 layout (..., padded)."""
        lv = self.levels[0]
        signals = np.asarray(signals, dtype=np.float64)
        if signals.shape[-1] != lv.n:
            raise UserError(
                f"signal has {signals.shape[-1]} vertices, mesh has {lv.n}"
            )
        out = np.zeros(signals.shape[:-1] + (lv.padded_size,))
        real = np.nonzero(~lv.fake_mask)[0]
        out[..., real] = signals[..., lv.permutation[real]]
        return out

    def gather(self, padded: np.ndarray) -> np.ndarray:
        """Inverse of scatter on real slots."""
        lv = self.levels[0]
        real = np.nonzero(~lv.fake_mask)[0]
        out = np.zeros(padded.shape[:-1] + (lv.n,))
        out[..., lv.permutation[real]] = padded[..., real]
        return out


def build_hierarchy(
    op: LBOperator, binary_levels: int, order_seed: int = 0
) -> CoarseningHierarchy:
    """binary_levels rounds of matching + operator update, then a balanced
    binary tree over the levels with fake nodes so every parent has exactly
    two children and pooling is a contiguous stride-2 reduction."""
    if binary_levels < 1:
        raise UserError("binary_levels must be >= 1")
    if binary_levels > int(np.log2(max(op.n, 1))) + 2:
        raise UserError("level guard exceeded for this vertex count")

    ops = [op]
    parents = []
    children = []
    for _ in range(binary_levels):
        matching = greedy_match(ops[-1], order_seed)
        coarse, parent = coarsen_operator(ops[-1], matching)
        ops.append(coarse)
        parents.append(parent)
        ch = [[] for _ in range(coarse.n)]
        for v, p in enumerate(parent):
            ch[p].append(v)
        children.append([sorted(c) for c in ch])

    L = binary_levels
    perms = [None] * (L + 1)
    perms[L] = np.arange(ops[L].n, dtype=np.int64)
    for l in range(L - 1, -1, -1):
        above = perms[l + 1]
        perm = np.full(2 * len(above), FAKE, dtype=np.int64)
        for slot, v in enumerate(above):
            if v == FAKE:
                continue
            ch = children[l][v]
            perm[2 * slot] = ch[0]
            if len(ch) == 2:
                perm[2 * slot + 1] = ch[1]
        perms[l] = perm

    levels = []
    counts = None
    for l in range(L + 1):
        perm = perms[l]
        fake = perm == FAKE
        if l == 0:
            counts = (~fake).astype(np.int64)
        else:
            counts = counts[0::2] + counts[1::2]
        levels.append(
            Level(
                operator=ops[l],
                permutation=perm,
                fake_mask=fake,
                leaf_counts=counts.copy(),
                parent_map=parents[l] if l < L else None,
            )
        )
    return CoarseningHierarchy(levels=levels, depth=L, order_seed=order_seed)


def _check_pool_args(h: CoarseningHierarchy, from_level: int, pool_size: int) -> int:
    if pool_size < 1 or pool_size & (pool_size - 1):
        raise UserError("pool_size must be a power of two")
    p = int(pool_size).bit_length() - 1
    if from_level < 0 or from_level + p > h.depth:
        raise UserError("pooling overflows the hierarchy depth")
    return p


def pool_signal(
    h: CoarseningHierarchy, from_level: int, X: np.ndarray, pool_size: int
) -> np.ndarray:
    """Average pooling over real descendants only, as successive stride-2
    reductions weighted by real-leaf counts (so composed reductions equal the
    one-shot block mean). All-fake blocks pool to 0."""
    p = _check_pool_args(h, from_level, pool_size)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != h.padded_size(from_level):
        raise UserError(
            f"signal has {X.shape[0]} rows, level {from_level} is padded to "
            f"{h.padded_size(from_level)}"
        )
    for step in range(p):
        c = h.levels[from_level + step].leaf_counts.astype(np.float64)
        shape = (-1,) + (1,) * (X.ndim - 1)
        c = c.reshape(shape)
        num = c[0::2] * X[0::2] + c[1::2] * X[1::2]
        den = c[0::2] + c[1::2]
        X = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return X


def unpool_signal(
    h: CoarseningHierarchy, from_level: int, Y: np.ndarray, pool_size: int
) -> np.ndarray:
    """Adjoint of pool_signal: distributes each coarse value back over its real
    descendants in proportion to their leaf counts."""
    p = _check_pool_args(h, from_level, pool_size)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape[0] != h.padded_size(from_level + p):
        raise UserError(
            f"signal has {Y.shape[0]} rows, level {from_level + p} is padded to "
            f"{h.padded_size(from_level + p)}"
        )
    for step in range(p - 1, -1, -1):
        c = h.levels[from_level + step].leaf_counts.astype(np.float64)
        shape = (-1,) + (1,) * (Y.ndim - 1)
        c = c.reshape(shape)
        den = c[0::2] + c[1::2]
        scale = np.divide(Y, den, out=np.zeros_like(Y), where=den > 0)
        X = np.zeros((2 * Y.shape[0],) + Y.shape[1:])
        X[0::2] = c[0::2] * scale
        X[1::2] = c[1::2] * scale
        Y = X
    return Y
