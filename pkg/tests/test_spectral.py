import warnings

import numpy as np
import pytest
from scipy.linalg import orthogonal_procrustes
from scipy.stats import ortho_group

from oracles import zhu_ghodsi
from omnimatch.spectral import (
    EmbeddingMatrix,
    ase,
    eig_symmetric,
    procrustes,
    select_dimension,
    top_eigenpairs,
    two_to_infinity,
)

C3 = np.ones((3, 3)) - np.eye(3)


def test_eig_examples():
    assert np.allclose(eig_symmetric(np.eye(3)).eigenvalues, [1, 1, 1])
    # characteristic polynomial of the 3-cycle: (x - 2)(x + 1)^2
    assert np.allclose(eig_symmetric(C3).eigenvalues, [2, -1, -1])
    assert np.allclose(eig_symmetric(np.diag([5.0, -3.0, 1.0])).eigenvalues, [5, -3, 1])


def test_eig_rejects_asymmetric_and_nonfinite():
    with pytest.raises(ValueError):
        eig_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        eig_symmetric(np.array([[np.inf, 0.0], [0.0, 0.0]]))


def test_eig_sign_convention():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(8, 8))
    spec = eig_symmetric(a + a.T)
    vecs = spec.eigenvectors
    idx = np.argmax(np.abs(vecs), axis=0)
    assert np.all(vecs[idx, np.arange(8)] > 0)


def test_partial_eigensolver_matches_dense():
    # large enough to take the tridiagonal route
    rng = np.random.default_rng(1)
    x = rng.dirichlet(np.ones(4), size=1300)[:, :3]
    p = x @ x.T
    a = np.triu(rng.random(p.shape) < p, 1).astype(float)
    a = a + a.T
    top = top_eigenpairs(a, 3)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(-np.abs(vals))[:3]
    assert np.allclose(top.eigenvalues, vals[order], atol=1e-8)
    for k in range(3):
        assert abs(abs(top.eigenvectors[:, k] @ vecs[:, order[k]]) - 1) < 1e-8


def test_ase_three_cycle():
    emb = ase(C3, 1)
    assert np.allclose(emb.values, np.sqrt(2 / 3), atol=1e-12)


def test_ase_zero_matrix_warns():
    with pytest.warns(UserWarning, match="zero spectrum"):
        emb = ase(np.zeros((4, 4)), 1)
    assert np.all(emb.values == 0)


def test_ase_rank_one_factor():
    x = np.array([0.6, 0.8])
    emb = ase(np.outer(x, x), 1).values[:, 0]
    assert np.allclose(np.abs(emb), x)
    assert np.sign(emb[0]) == np.sign(emb[1])


def test_ase_dimension_errors():
    with pytest.raises(ValueError):
        ase(C3, 4)
    with pytest.raises(ValueError):
        ase(C3, 0)


def test_ase_eigengap_warning():
    with pytest.warns(UserWarning, match="coincide"):
        ase(C3, 2)  # magnitudes 2, 1, 1: the second and third tie


def test_select_dimension_examples():
    assert select_dimension([100, 99, 1, 0.9, 0.8]) == zhu_ghodsi([100, 99, 1, 0.9, 0.8]) == 2
    assert select_dimension([10, 1]) == 1
    with pytest.warns(UserWarning):
        assert select_dimension([5, 5, 5, 5]) == 1
    with pytest.raises(ValueError):
        select_dimension([])


def test_select_dimension_cap_and_second_elbow():
    scree = [50, 49, 48, 10, 9.5, 9, 1, 0.9, 0.8, 0.7]
    first = select_dimension(scree)
    assert first == zhu_ghodsi(scree)
    second = select_dimension(scree, elbow=2)
    assert second == first + zhu_ghodsi(scree[first:])
    assert select_dimension(scree, max_d=1) == 1


def test_select_dimension_ignores_sign_and_order():
    assert select_dimension([1, -100, 0.9, 99, 0.8]) == 2


def test_procrustes_examples():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(10, 3))
    r = procrustes(x, x)
    assert np.allclose(r.w, np.eye(3)) and r.residual == pytest.approx(0, abs=1e-12)
    rot = ortho_group.rvs(3, random_state=4)
    r = procrustes(x, x @ rot)
    assert r.residual == pytest.approx(0, abs=1e-8)
    assert np.allclose(x @ rot @ r.w, x, atol=1e-8)
    r = procrustes(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert np.allclose(r.w, [[0, -1], [1, 0]]) and r.residual == pytest.approx(0, abs=1e-12)


def test_procrustes_matches_scipy():
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=(20, 4)), rng.normal(size=(20, 4))
    w_ref, _ = orthogonal_procrustes(y, x)
    r = procrustes(x, y)
    assert np.allclose(r.w, w_ref)
    assert r.residual == pytest.approx(np.linalg.norm(x - y @ w_ref))


def test_two_to_infinity():
    assert two_to_infinity(np.array([[3.0, 4.0], [1.0, 0.0]])) == 5.0
    assert two_to_infinity(np.zeros((0, 2))) == 0.0


def test_embedding_matrix_metadata():
    e = EmbeddingMatrix(np.ones((3, 2)), graph_index=[0, 0, 1])
    assert e.rows == 3 and e.d == 2
    assert np.asarray(e).shape == (3, 2)
    with pytest.raises(ValueError):
        EmbeddingMatrix(np.ones((3, 2)), graph_index=[0, 1])


def test_no_warning_on_regular_input():
    rng = np.random.default_rng(7)
    a = rng.random((6, 6))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ase(a + a.T, 2)
