import io

import numpy as np
import pytest

from specmesh import (
    TriMesh,
    UNREACHABLE,
    generate_icosphere,
    load_off,
    ring_distance,
    ring_distances,
    save_off,
    validate,
)
from specmesh.errors import MeshError

TRIANGLE_OFF = """OFF
3 1 0
0 0 0
1 0 0
0 1 0
3 0 1 2
"""


def test_load_off_single_triangle():
    mesh = load_off(TRIANGLE_OFF)
    assert mesh.n_vertices == 3
    assert mesh.n_faces == 1


def test_load_off_rejects_quad_face():
    text = TRIANGLE_OFF.replace("3 0 1 2", "4 0 1 2 2")
    with pytest.raises(MeshError, match="non-triangle face"):
        load_off(text)


def test_load_off_rejects_bad_header():
    with pytest.raises(MeshError, match="header"):
        load_off("OFX\n3 1 0\n")


def test_load_off_index_out_of_range():
    text = TRIANGLE_OFF.replace("3 0 1 2", "3 0 1 5")
    with pytest.raises(MeshError, match="out of range"):
        load_off(text)


def test_load_off_reports_line_numbers():
    text = "OFF\n3 1 0\n0 0 0\n1 0 0\nnot a number 0\n3 0 1 2\n"
    with pytest.raises(MeshError, match="line 5"):
        load_off(text)


def test_load_off_skips_comments_and_blanks():
    text = "# comment\nOFF\n\n3 1 0  # counts\n0 0 0\n1 0 0\n0 1 0\n\n3 0 1 2\n"
    mesh = load_off(text)
    assert mesh.n_vertices == 3


def test_icosahedron_counts_and_euler(icosahedron):
    # analytic icosahedron: 12 vertices, 30 edges, 20 faces
    assert icosahedron.n_vertices == 12
    assert icosahedron.n_faces == 20
    e = len(icosahedron.edges())
    assert e == 30
    assert icosahedron.n_vertices - e + icosahedron.n_faces == 2


def test_icosahedron_edges_shared_by_two_faces(icosahedron):
    report = validate(icosahedron)
    assert report.ok
    assert report.boundary_edge_count == 0
    assert report.nonmanifold_edges == 0


def test_off_roundtrip_is_identity(icosphere2):
    back = load_off(save_off(icosphere2))
    assert np.array_equal(back.faces, icosphere2.faces)
    assert np.array_equal(back.vertices, icosphere2.vertices)


def test_trimesh_rejects_repeated_vertices():
    with pytest.raises(MeshError, match="repeated"):
        TriMesh(np.zeros((3, 3)), np.array([(0, 1, 1)]))


def test_validate_single_triangle_boundary(single_triangle):
    report = validate(single_triangle)
    assert report.boundary_edge_count == 3
    assert report.connected


def test_validate_flags_degenerate_face():
    verts = np.array(
        [(0, 0, 0), (1, 0, 0), (2, 0, 0), (0, 1, 0)], dtype=np.float64
    )
    faces = np.array([(0, 1, 3), (1, 2, 3), (0, 1, 2)])  # last is collinear
    report = validate(TriMesh(verts, faces), area_threshold=1e-12)
    assert report.degenerate_faces == [2]


def test_icosphere_subdivision_counts():
    assert generate_icosphere(0, 1.0).n_vertices == 12
    mesh = generate_icosphere(1, 1.0)
    # each of the 30 edges gains one midpoint: 12 + 30 = 42
    assert mesh.n_vertices == 42
    assert mesh.n_faces == 80


def test_icosphere_face_count_formula():
    for sub in range(3):
        assert generate_icosphere(sub, 1.0).n_faces == 20 * 4**sub


def test_icosphere_radius_projection():
    mesh = generate_icosphere(2, 2.0)
    norms = np.linalg.norm(mesh.vertices, axis=1)
    assert np.all(np.abs(norms - 2.0) < 1e-12 * 2.0)


def test_icosphere_euler_characteristic():
    for sub in range(4):
        mesh = generate_icosphere(sub, 1.0)
        assert mesh.n_vertices - len(mesh.edges()) + mesh.n_faces == 2


def test_icosphere_guard():
    with pytest.raises(MeshError):
        generate_icosphere(8, 1.0)


def test_ring_distance_basics(icosahedron):
    assert ring_distance(icosahedron, 4, 4) == 0
    a, b = icosahedron.edges()[0]
    assert ring_distance(icosahedron, int(a), int(b)) == 1


def test_ring_distance_icosahedron_antipodal(icosahedron):
    # BFS oracle over the 1-skeleton: diameter of the icosahedron graph is 3
    v = icosahedron.vertices
    for i in range(12):
        j = int(np.argmin(v @ v[i]))  # antipode
        assert ring_distance(icosahedron, i, j) == 3


def test_ring_distance_symmetry_and_triangle_inequality(icosphere2):
    rng = np.random.default_rng(7)
    n = icosphere2.n_vertices
    dist_cache = {}

    def d(i, j):
        if i not in dist_cache:
            dist_cache[i] = ring_distances(icosphere2, i)
        return dist_cache[i][j]

    for _ in range(100):
        i, j, k = rng.integers(0, n, size=3)
        assert d(int(i), int(j)) == d(int(j), int(i))
        assert d(int(i), int(k)) <= d(int(i), int(j)) + d(int(j), int(k))


def test_ring_distance_unreachable():
    verts = np.array(
        [(0, 0, 0), (1, 0, 0), (0, 1, 0), (5, 5, 0), (6, 5, 0), (5, 6, 0)],
        dtype=np.float64,
    )
    faces = np.array([(0, 1, 2), (3, 4, 5)])
    mesh = TriMesh(verts, faces)
    assert ring_distance(mesh, 0, 3) == UNREACHABLE
    assert not validate(mesh).connected


def test_grid_mesh_fixture(grid10):
    assert grid10.n_vertices == 100
    assert validate(grid10).connected
