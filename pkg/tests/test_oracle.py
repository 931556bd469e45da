import math

import numpy as np
import pytest
from scipy import sparse

from specmesh import (
    assemble_cotan,
    assemble_graph_laplacian,
    eig_decompose,
    forward_coeffs,
    lb_operator,
    spectral_filter,
)
from specmesh.errors import UserError
from specmesh.oracle import DENSE_GUARD


@pytest.fixture(scope="module")
def sphere_eig(icosphere2):
    op = lb_operator(icosphere2)
    return op, eig_decompose(op)


def test_path_graph_eigenvalues():
    # 3-vertex path Laplacian has eigenvalues {0, 1, 3}
    C = sparse.csr_matrix(
        np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    )
    eig = eig_decompose((C, np.ones(3)))
    assert np.allclose(eig.lambdas, [0.0, 1.0, 3.0], atol=1e-12)


def test_weighted_mass_pair():
    # (C, diag(A)) with C = [[2,-2],[-2,2]], A = [1,2]: lambdas {0, 3}
    C = sparse.csr_matrix(np.array([[2.0, -2.0], [-2.0, 2.0]]))
    eig = eig_decompose((C, np.array([1.0, 2.0])))
    assert np.allclose(eig.lambdas, [0.0, 3.0], atol=1e-12)


def test_first_eigenpair_is_constant(sphere_eig):
    op, eig = sphere_eig
    assert abs(eig.lambdas[0]) < 1e-10 * eig.lambdas[-1]
    # psi_0 is constant with value 1/sqrt(total area)
    expected = 1.0 / math.sqrt(op.A.sum())
    assert np.allclose(eig.psis[:, 0], expected, atol=1e-8 * expected)


def test_eigenvalues_ascending(sphere_eig):
    _, eig = sphere_eig
    assert np.all(np.diff(eig.lambdas) >= -1e-12)


def test_a_orthonormality(sphere_eig):
    op, eig = sphere_eig
    gram = eig.psis.T @ (op.A[:, None] * eig.psis)
    assert np.abs(gram - np.eye(eig.n)).max() < 1e-10


def test_eigenpair_residual(sphere_eig):
    op, eig = sphere_eig
    resid = op.C @ eig.psis - (op.A[:, None] * eig.psis) * eig.lambdas
    assert np.abs(resid).max() < 1e-10 * max(1.0, eig.lambdas.max())


def test_sign_convention_deterministic(sphere_eig):
    op, eig = sphere_eig
    again = eig_decompose(op)
    assert np.array_equal(eig.psis, again.psis)


def test_partial_decomposition(sphere_eig):
    op, eig = sphere_eig
    part = eig_decompose(op, m=10)
    assert np.array_equal(part.lambdas, eig.lambdas[:10])
    assert not part.is_full
    with pytest.raises(UserError):
        eig_decompose(op, m=0)


def test_dense_guard():
    n = DENSE_GUARD + 1
    C = sparse.identity(n, format="csr")
    with pytest.raises(UserError, match="guard"):
        eig_decompose((C, np.ones(n)))


def test_nonpositive_mass_rejected():
    C = sparse.identity(2, format="csr")
    with pytest.raises(UserError, match="positive"):
        eig_decompose((C, np.array([1.0, 0.0])))


def test_forward_coeffs_parseval(sphere_eig):
    # ||f||_A^2 == ||c||_2^2 for a full basis
    op, eig = sphere_eig
    rng = np.random.default_rng(8)
    f = rng.standard_normal(eig.n)
    c = forward_coeffs(eig, f)
    energy_a = float(np.dot(op.A * f, f))
    assert np.dot(c, c) == pytest.approx(energy_a, rel=1e-10)


def test_forward_coeffs_recovers_eigenvector(sphere_eig):
    _, eig = sphere_eig
    c = forward_coeffs(eig, eig.psis[:, 5])
    expected = np.zeros(eig.n)
    expected[5] = 1.0
    assert np.abs(c - expected).max() < 1e-10


def test_spectral_filter_identity(sphere_eig):
    _, eig = sphere_eig
    rng = np.random.default_rng(1)
    f = rng.standard_normal(eig.n)
    assert np.allclose(spectral_filter(eig, f, lambda lam: 1.0), f, atol=1e-10)


def test_spectral_filter_heat_smoothing(sphere_eig):
    # e^{-t lam} preserves the mean component and shrinks A-energy
    op, eig = sphere_eig
    rng = np.random.default_rng(6)
    f = rng.standard_normal(eig.n)
    h = spectral_filter(eig, f, lambda lam: math.exp(-0.1 * lam))
    mean_f = np.dot(op.A, f) / op.A.sum()
    mean_h = np.dot(op.A, h) / op.A.sum()
    assert mean_h == pytest.approx(mean_f, abs=1e-10)
    assert np.dot(op.A * h, h) < np.dot(op.A * f, f)


def test_spectral_filter_requires_full_basis(sphere_eig):
    op, _ = sphere_eig
    part = eig_decompose(op, m=5)
    with pytest.raises(UserError, match="full"):
        spectral_filter(part, np.zeros(part.n), lambda lam: 1.0)


def test_accepts_stiffness_and_mass(icosahedron):
    cm = assemble_cotan(icosahedron)
    eig_a = eig_decompose(cm)
    eig_b = eig_decompose((cm.C, cm.A))
    assert np.array_equal(eig_a.lambdas, eig_b.lambdas)


def test_graph_operator_eigensolve(icosahedron):
    # icosahedron graph Laplacian spectrum: {0, 5-sqrt(5) x3, ...}
    op = assemble_graph_laplacian(icosahedron)
    eig = eig_decompose(op)
    assert np.allclose(eig.lambdas[1:4], 5.0 - math.sqrt(5.0), atol=1e-10)
