import numpy as np
import pytest

from dcmax.numerics import (as_vector, CsrMatrix, SymmetricMatrix,
                            sym_eigendecomp, power_iteration_extreme_eigs)


def test_as_vector_accepts_lists_and_checks_dim():
    v = as_vector([1, 2, 3])
    assert v.dtype == np.float64
    assert v.shape == (3,)
    with pytest.raises(ValueError):
        as_vector([1.0, 2.0], dim=3)
    with pytest.raises(ValueError):
        as_vector([[1.0, 2.0]])


def test_csr_matches_dense_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n_rows = int(rng.integers(1, 12))
        n_cols = int(rng.integers(1, 12))
        dense = rng.standard_normal((n_rows, n_cols))
        dense[rng.random((n_rows, n_cols)) < 0.6] = 0.0
        rows = []
        for i in range(n_rows):
            cols = np.nonzero(dense[i])[0]
            rows.append((cols, dense[i, cols]))
        A = CsrMatrix.from_rows(rows, n_cols)
        assert np.allclose(A.to_dense(), dense)
        x = rng.standard_normal(n_cols)
        y = rng.standard_normal(n_rows)
        assert np.allclose(A.matvec(x), dense @ x)
        assert np.allclose(A.rmatvec(y), dense.T @ y)
        i = int(rng.integers(n_rows))
        assert np.allclose(A.row(i), dense[i])


def test_csr_rejects_out_of_range_columns():
    with pytest.raises(ValueError):
        CsrMatrix.from_rows([(np.array([3]), np.array([1.0]))], 3)


def test_symmetric_identity_and_quadratic_form():
    S = SymmetricMatrix.identity(4)
    assert np.allclose(S.full(), np.eye(4))
    rng = np.random.default_rng(3)
    B = rng.standard_normal((5, 5))
    M = 0.5 * (B + B.T)
    S = SymmetricMatrix.from_dense(M)
    assert np.allclose(S.full(), M)
    x = rng.standard_normal(5)
    assert np.allclose(S.matvec(x), M @ x)
    assert np.allclose(S.diag(), np.diag(M))
    assert np.allclose(S.add_diagonal(2.5).full(), M + 2.5 * np.eye(5))


def test_sym_eigendecomp_reconstructs_matrix():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(2, 8))
        B = rng.standard_normal((n, n))
        M = 0.5 * (B + B.T)
        vals, vecs = sym_eigendecomp(M)
        assert np.allclose(vecs @ np.diag(vals) @ vecs.T, M, atol=1e-9)
        assert np.allclose(vecs @ vecs.T, np.eye(n), atol=1e-9)
        # eigenvalues sorted ascending
        assert np.all(np.diff(vals) >= -1e-12)


def test_sym_eigendecomp_known_matrix():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    vals, _ = sym_eigendecomp(M)
    assert np.allclose(vals, [1.0, 3.0], atol=1e-12)


def test_power_iteration_extreme_eigs_brackets_spectrum():
    rng = np.random.default_rng(19)
    for _ in range(10):
        n = int(rng.integers(2, 10))
        B = rng.standard_normal((n, n))
        M = 0.5 * (B + B.T)
        lam_max, lam_min = power_iteration_extreme_eigs(M)
        ref = np.linalg.eigvalsh(M)
        assert abs(lam_max - ref[-1]) <= 1e-5 * max(1.0, abs(ref[-1]))
        assert abs(lam_min - ref[0]) <= 1e-5 * max(1.0, abs(ref[0]))
