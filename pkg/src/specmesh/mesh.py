"""Triangle mesh container, OFF I/O, validation and graph-distance queries."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import MeshError

UNREACHABLE = -1

_PHI = (1.0 + math.sqrt(5.0)) / 2.0

# Icosahedron: cyclic permutations of (0, ±1, ±phi), unit edge length 2.
_ICO_VERTS = np.array(
    [
        (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
        (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
        (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
    ],
    dtype=np.float64,
)

_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangulated mesh: vertex coordinates and CCW triangle indices."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        faces = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError("faces must be an (m, 3) array")
        if faces.size and (faces.min() < 0 or faces.max() >= len(verts)):
            raise MeshError("face index out of range")
        for f, (a, b, c) in enumerate(faces):
            if a == b or b == c or a == c:
                raise MeshError(f"face {f} has repeated vertices")
        verts.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as (min, max) pairs in lexicographic order."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)

    def adjacency(self) -> sparse.csr_matrix:
        """Unweighted symmetric adjacency of the 1-skeleton (CSR)."""
        e = self.edges()
        n = self.n_vertices
        if len(e) == 0:
            return sparse.csr_matrix((n, n))
        i = np.concatenate([e[:, 0], e[:, 1]])
        j = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((np.ones(len(i)), (i, j)), shape=(n, n))

    def face_areas(self) -> np.ndarray:
        v = self.vertices
        f = self.faces
        cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return 0.5 * np.linalg.norm(cross, axis=1)


@dataclass
class ValidationReport:
    nonmanifold_edges: int
    degenerate_faces: list
    boundary_edge_count: int
    connected: bool
    area_threshold: float = field(default=0.0)

    @property
    def ok(self) -> bool:
        return (
            self.nonmanifold_edges == 0
            and not self.degenerate_faces
            and self.connected
        )


def _edge_face_counts(mesh: TriMesh) -> dict:
    counts = {}
    for a, b, c in mesh.faces:
        for i, j in ((a, b), (b, c), (c, a)):
            key = (min(i, j), max(i, j))
            counts[key] = counts.get(key, 0) + 1
    return counts


def validate(mesh: TriMesh, area_threshold: float | None = None) -> ValidationReport:
    """Report manifoldness, boundary, degeneracy and connectivity; never raises.

    `area_threshold` defaults to 1e-12 times the mean face area.
    """
    areas = mesh.face_areas()
    if area_threshold is None:
        mean_area = float(areas.mean()) if len(areas) else 0.0
        area_threshold = 1e-12 * mean_area
    degenerate = [int(f) for f in np.nonzero(areas <= area_threshold)[0]]

    counts = _edge_face_counts(mesh)
    nonmanifold = sum(1 for c in counts.values() if c > 2)
    boundary = sum(1 for c in counts.values() if c == 1)

    n = mesh.n_vertices
    if n == 0:
        connected = True
    else:
        order, seen = _bfs(mesh.adjacency(), 0)
        connected = bool(seen.all())
        del order

    return ValidationReport(
        nonmanifold_edges=nonmanifold,
        degenerate_faces=degenerate,
        boundary_edge_count=boundary,
        connected=connected,
        area_threshold=area_threshold,
    )


def _bfs(adj: sparse.csr_matrix, source: int):
    n = adj.shape[0]
    dist = np.full(n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    seen = np.zeros(n, dtype=bool)
    seen[source] = True
    indptr, indices = adj.indptr, adj.indices
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist, seen


def ring_distances(mesh: TriMesh, i: int) -> np.ndarray:
    """Hop distances from vertex i to every vertex; UNREACHABLE where disconnected."""
    if not 0 <= i < mesh.n_vertices:
        raise MeshError(f"vertex index {i} out of range")
    dist, _ = _bfs(mesh.adjacency(), i)
    return dist


def ring_distance(mesh: TriMesh, i: int, j: int) -> int:
    """Shortest edge-path length between vertices i and j (UNREACHABLE if none)."""
    if not 0 <= j < mesh.n_vertices:
        raise MeshError(f"vertex index {j} out of range")
    return int(ring_distances(mesh, i)[j])


def load_off(text) -> TriMesh:
    """Parse an ASCII OFF stream/string into a TriMesh.

    Comment lines starting with '#' and blank lines are ignored. Only
    triangular faces are accepted.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    lines = []  # (lineno, content)
    for lineno, raw in enumerate(text, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append((lineno, stripped))
    if not lines:
        raise MeshError("empty OFF input")

    pos = 0
    lineno, header = lines[pos]
    pos += 1
    if header != "OFF":
        raise MeshError(f"line {lineno}: malformed header {header!r}, expected 'OFF'")
    if pos >= len(lines):
        raise MeshError("missing counts line")
    lineno, counts = lines[pos]
    pos += 1
    parts = counts.split()
    if len(parts) < 2:
        raise MeshError(f"line {lineno}: malformed counts line")
    try:
        n_v, n_f = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshError(f"line {lineno}: malformed counts line") from None

    verts = np.zeros((n_v, 3), dtype=np.float64)
    for k in range(n_v):
        if pos >= len(lines):
            raise MeshError(f"unexpected end of input reading vertex {k}")
        lineno, line = lines[pos]
        pos += 1
        parts = line.split()
        if len(parts) < 3:
            raise MeshError(f"line {lineno}: vertex line needs 3 coordinates")
        try:
            verts[k] = [float(parts[0]), float(parts[1]), float(parts[2])]
        except ValueError:
            raise MeshError(f"line {lineno}: unparseable vertex coordinate") from None

    faces = np.zeros((n_f, 3), dtype=np.int64)
    for k in range(n_f):
        if pos >= len(lines):
            raise MeshError(f"unexpected end of input reading face {k}")
        lineno, line = lines[pos]
        pos += 1
        parts = line.split()
        try:
            nv = int(parts[0])
        except (ValueError, IndexError):
            raise MeshError(f"line {lineno}: unparseable face line") from None
        if nv != 3:
            raise MeshError(f"line {lineno}: non-triangle face ({nv} vertices)")
        if len(parts) < 4:
            raise MeshError(f"line {lineno}: face line truncated")
        idx = [int(p) for p in parts[1:4]]
        if any(v < 0 or v >= n_v for v in idx):
            raise MeshError(f"line {lineno}: face index out of range")
        faces[k] = idx

    return TriMesh(verts, faces)


def save_off(mesh: TriMesh) -> str:
    """Serialize to ASCII OFF with 17 significant digits (round-trip exact)."""
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    for x, y, z in mesh.vertices:
        out.append(f"{x:.17g} {y:.17g} {z:.17g}")
    for a, b, c in mesh.faces:
        out.append(f"3 {a} {b} {c}")
    return "\n".join(out) + "\n"


def generate_icosphere(subdivisions: int, radius: float) -> TriMesh:
    """Icosahedron subdivided `subdivisions` times, projected to the sphere."""
    if subdivisions < 0:
        raise MeshError("subdivisions must be nonnegative")
    if subdivisions > 7:
        raise MeshError("subdivision guard exceeded (max 7)")
    if radius <= 0:
        raise MeshError("radius must be positive")

    verts = [tuple(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        midpoint = {}
        new_faces = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                midpoint[key] = len(verts)
                verts.append(tuple((np.array(verts[i]) + np.array(verts[j])) / 2.0))
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    v = np.array(verts, dtype=np.float64)
    v *= radius / np.linalg.norm(v, axis=1)[:, None]
    return TriMesh(v, np.array(faces, dtype=np.int64))
