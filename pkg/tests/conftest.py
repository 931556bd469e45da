import numpy as np
import pytest

from specmesh import TriMesh, generate_icosphere


def make_grid_mesh(nx: int, ny: int) -> TriMesh:
    """Planar triangulated grid with nx*ny vertices (boundary mesh)."""
    verts = np.array(
        [(x, y, 0.0) for y in range(ny) for x in range(nx)], dtype=np.float64
    )
    faces = []
    for y in range(ny - 1):
        for x in range(nx - 1):
            a = y * nx + x
            b = a + 1
            c = a + nx
            d = c + 1
            faces.append((a, b, d))
            faces.append((a, d, c))
    return TriMesh(verts, np.array(faces, dtype=np.int64))


@pytest.fixture(scope="session")
def icosahedron():
    return generate_icosphere(0, 1.0)


@pytest.fixture(scope="session")
def icosphere2():
    return generate_icosphere(2, 1.0)


@pytest.fixture(scope="session")
def grid10():
    return make_grid_mesh(10, 10)


@pytest.fixture(scope="session")
def single_triangle():
    return TriMesh(
        np.array([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]),
        np.array([(0, 1, 2)]),
    )
