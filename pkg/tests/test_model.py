import numpy as np
import pytest

from dcmax.model import (ScaledIdentityQuad, GeneralQuad, RidgeLeastSquares,
                         MaxBlock, TopKRankedBlock, TrimmedRankedBlock,
                         DcProgram, eval_objective, grad_g, active_set)
from dcmax.numerics import CsrMatrix, SymmetricMatrix


def finite_diff(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_scaled_identity_quad_value_and_grad():
    q = ScaledIdentityQuad(2.5)
    x = np.array([1.0, -2.0, 0.5])
    assert np.isclose(q.value(x), 0.5 * 2.5 * (x @ x))
    assert np.allclose(q.grad(x), 2.5 * x)
    assert q.strong_convexity() == 2.5


def test_general_quad_matches_finite_differences():
    rng = np.random.default_rng(5)
    B = rng.standard_normal((4, 4))
    H = B @ B.T + 0.5 * np.eye(4)
    f = rng.standard_normal(4)
    q = GeneralQuad(SymmetricMatrix.from_dense(H), f=f, const=1.25)
    x = rng.standard_normal(4)
    assert np.isclose(q.value(x), 0.5 * x @ H @ x + f @ x + 1.25)
    assert np.allclose(q.grad(x), finite_diff(q.value, x), atol=1e-5)
    ref = np.linalg.eigvalsh(H)
    assert q.strong_convexity() <= ref[0] + 1e-6
    assert q.strong_convexity() >= 0.0


def test_general_quad_rejects_indefinite():
    H = np.diag([1.0, -2.0])
    with pytest.raises(ValueError):
        GeneralQuad(SymmetricMatrix.from_dense(H))


def test_ridge_least_squares_value_and_grad():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((8, 3))
    y = rng.standard_normal(8)
    term = RidgeLeastSquares(CsrMatrix.from_dense(X), y, lam=0.1)
    w = rng.standard_normal(3)
    r = X @ w - y
    assert np.isclose(term.value(w), 0.5 * (r @ r) + 0.05 * (w @ w))
    assert np.allclose(term.grad(w), finite_diff(term.value, w), atol=1e-5)
    assert term.strong_convexity() >= 0.1 - 1e-12


def test_max_block_pieces_and_gradients():
    coeffs = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, 1.0]])
    blk = MaxBlock(coeffs, offsets=[0.0, -1.0, 0.5], weight=2.0)
    x = np.array([1.0, 1.0])
    vals = blk.piece_values(x)
    assert np.allclose(vals, [1.0, 1.0, 0.5])
    assert np.isclose(blk.value(x), 2.0 * 1.0)
    cols = blk.gradient_columns(x, [0, 1])
    assert cols.shape == (2, 2)
    assert np.allclose(cols[:, 0], 2.0 * coeffs[0])
    assert np.allclose(cols[:, 1], 2.0 * coeffs[1])


def test_max_block_quadratic_pieces_shift_gradients():
    coeffs = np.array([[1.0, 0.0]])
    blk = MaxBlock(coeffs, quad=0.5)
    x = np.array([2.0, -1.0])
    want = 1.0 * 2.0 + 0.25 * (x @ x)
    assert np.isclose(blk.piece_values(x)[0], want)
    cols = blk.gradient_columns(x, [0])
    assert np.allclose(cols[:, 0], coeffs[0] + 0.5 * x)


def test_max_block_validates_input():
    with pytest.raises(ValueError):
        MaxBlock(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        MaxBlock(np.ones((2, 2)), quad=-1.0)
    with pytest.raises(ValueError):
        MaxBlock(np.ones((2, 2)), weight=0.0)


def test_topk_value_matches_naive_sort():
    rng = np.random.default_rng(21)
    X = rng.standard_normal((15, 4))
    blk = TopKRankedBlock(X, k=5, weight=1.5)
    for _ in range(10):
        x = rng.standard_normal(4)
        naive = 1.5 * np.sum(np.sort(np.abs(X @ x))[-5:])
        assert np.isclose(blk.value(x), naive)


def test_topk_candidate_pool_signs_and_ties():
    X = np.array([[3.0, 0.0], [0.0, 2.0], [1.0, 0.0]])
    blk = TopKRankedBlock(X, k=2)
    # away from zero: each admissible row enters with its response sign
    cols, rows = blk.candidate_pool(np.array([1.0, -1.0]), eps=1e-9)
    assert rows.tolist() == [0, 1]
    assert np.allclose(cols[:, 0], X[0])
    assert np.allclose(cols[:, 1], -X[1])
    # at zero all responses tie at zero and both signs are admissible
    cols, rows = blk.candidate_pool(np.zeros(2), eps=1e-9)
    assert rows.tolist() == [0, 0, 1, 1, 2, 2]
    assert cols.shape == (2, 6)


def test_trimmed_value_matches_naive_sort():
    rng = np.random.default_rng(33)
    X = rng.standard_normal((12, 3))
    y = rng.standard_normal(12)
    blk = TrimmedRankedBlock(X, y, q=4)
    for _ in range(10):
        w = rng.standard_normal(3)
        sq = np.sort((X @ w - y) ** 2)[-4:]
        assert np.isclose(blk.value(w), np.sum(sq) / (2.0 * 12))


def test_trimmed_candidate_pool_scales_gradients():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 0.0]])
    y = np.array([0.0, 0.0, 10.0])
    blk = TrimmedRankedBlock(X, y, q=1)
    w = np.zeros(2)
    cols, rows = blk.candidate_pool(w, eps=1e-9)
    # only row 2 attains the largest squared residual
    assert rows.tolist() == [2]
    assert np.allclose(cols[:, 0], (1.0 / 3.0) * (-10.0) * X[2])


def test_program_objective_and_active_set():
    coeffs = np.array([[1.0], [-1.0]])
    prog = DcProgram(g=ScaledIdentityQuad(1.0), blocks=[MaxBlock(coeffs)])
    assert prog.dim == 1
    x = np.array([0.25])
    # F = x^2/2 - |x|
    assert np.isclose(eval_objective(prog, x), 0.5 * 0.0625 - 0.25)
    assert np.allclose(grad_g(prog, x), x)
    aset = active_set(prog, np.zeros(1), eps=0.0)
    assert aset.indices[0].tolist() == [0, 1]
    assert aset.product_size() == 2
    aset = active_set(prog, np.array([1.0]), eps=0.5)
    assert aset.indices[0].tolist() == [0]


def test_program_box_validation_and_clip():
    blk = MaxBlock(np.array([[1.0, 1.0]]))
    prog = DcProgram(g=ScaledIdentityQuad(1.0), blocks=[blk],
                     box=(np.zeros(2), np.ones(2)))
    assert np.allclose(prog.clip(np.array([-1.0, 2.0])), [0.0, 1.0])
    with pytest.raises(ValueError):
        DcProgram(g=ScaledIdentityQuad(1.0), blocks=[blk],
                  box=(np.ones(2), np.zeros(2)))
    with pytest.raises(ValueError):
        DcProgram(g=ScaledIdentityQuad(1.0), blocks=[])
