import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from blockmat import (
    BlockMatrix,
    ScalingCoefficients,
    adjoint,
    apply_scaling,
    block_diagonal,
    col_gram,
    col_grams,
    col_normalize,
    ds,
    flatten,
    inv_sqrt_psd,
    numerical_rank,
    row_gram,
    row_grams,
    row_normalize,
    support,
    zero_blocks,
)
from errors import InvalidArgument, InvalidScaling, SingularGram
from helpers import crandn


def scalar(x):
    return BlockMatrix(np.array(x, dtype=complex).reshape(1, 1, 1, 1))


def random_matrix(rng, m, n, r, c):
    return BlockMatrix(crandn(rng, m, n, r, c))


def test_block_matrix_rejects_bad_shapes():
    with pytest.raises(InvalidArgument):
        BlockMatrix(np.zeros((2, 2, 2)))
    with pytest.raises(InvalidArgument):
        BlockMatrix(np.zeros((0, 2, 1, 1)))
    with pytest.raises(InvalidArgument):
        BlockMatrix(np.full((1, 1, 1, 1), np.nan))


def test_blocks_are_read_only():
    A = scalar(1.0)
    with pytest.raises(ValueError):
        A.blocks[0, 0, 0, 0] = 2


def test_flatten_places_blocks():
    blocks = np.zeros((2, 2, 1, 2), dtype=complex)
    blocks[0, 0] = [[1, 2]]
    blocks[0, 1] = [[3, 4]]
    blocks[1, 0] = [[5, 6]]
    blocks[1, 1] = [[7, 8]]
    F = flatten(BlockMatrix(blocks))
    assert F.shape == (2, 4)
    np.testing.assert_allclose(F, [[1, 2, 3, 4], [5, 6, 7, 8]])


def test_from_dense_inverts_flatten(rng):
    A = random_matrix(rng, 3, 2, 2, 3)
    np.testing.assert_allclose(BlockMatrix.from_dense(flatten(A), 2, 3).blocks, A.blocks)


def test_numerical_rank_examples():
    assert numerical_rank(np.eye(3)) == 3
    assert numerical_rank(np.ones((3, 3))) == 1
    assert numerical_rank(np.zeros((2, 2))) == 0
    assert numerical_rank(np.diag([1.0, 1e-14])) == 1
    with pytest.raises(InvalidArgument):
        numerical_rank(np.eye(2), tol=-1.0)


def test_grams():
    blocks = np.zeros((1, 2, 1, 2), dtype=complex)
    blocks[0, 0] = [[1, 0]]
    blocks[0, 1] = [[0, 1]]
    A = BlockMatrix(blocks)
    np.testing.assert_allclose(row_gram(A, 0), [[2]])
    assert col_gram(scalar(2.0), 0)[0, 0] == pytest.approx(4.0)
    with pytest.raises(InvalidArgument):
        row_gram(A, 3)


def test_grams_are_exactly_hermitian(rng):
    A = BlockMatrix(crandn(rng, 4, 3, 3, 2))
    for G in [row_gram(A, 1), col_gram(A, 2), *row_grams(A), *col_grams(A)]:
        np.testing.assert_array_equal(G, G.conj().T)
    np.testing.assert_allclose(row_grams(A)[1], row_gram(A, 1), atol=1e-12)


def test_inv_sqrt_psd():
    np.testing.assert_allclose(inv_sqrt_psd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-12)
    with pytest.raises(SingularGram):
        inv_sqrt_psd(np.zeros((2, 2)))


def test_row_normalize_identity_multiple():
    A = BlockMatrix((2 * np.eye(2)).reshape(1, 1, 2, 2))
    norm = row_normalize(A)
    np.testing.assert_allclose(norm.matrix.blocks[0, 0], np.eye(2), atol=1e-12)
    np.testing.assert_allclose(norm.coefficients[0], 0.5 * np.eye(2), atol=1e-12)


def test_col_normalize_scalar():
    norm = col_normalize(scalar(3.0))
    assert norm.matrix.blocks[0, 0, 0, 0] == pytest.approx(1.0)


def test_zero_row_is_singular():
    blocks = np.zeros((2, 2, 1, 1), dtype=complex)
    blocks[0, 0] = 1
    with pytest.raises(SingularGram) as info:
        row_normalize(BlockMatrix(blocks))
    assert info.value.axis == "row"
    assert info.value.position == 1


def test_ds_examples():
    assert ds(scalar(2.0)) == pytest.approx(18.0)
    assert ds(BlockMatrix(np.eye(2).reshape(1, 1, 2, 2))) == pytest.approx(0.0)


def test_apply_scaling_scalar():
    S = ScalingCoefficients(np.array([[[2.0]]]), np.array([[[3.0]]]))
    assert apply_scaling(scalar(1.0), S).blocks[0, 0, 0, 0] == pytest.approx(6.0)


def test_apply_scaling_rejects_singular_and_mismatched():
    with pytest.raises(InvalidScaling):
        apply_scaling(scalar(1.0), ScalingCoefficients(np.zeros((1, 1, 1)), np.ones((1, 1, 1))))
    with pytest.raises(InvalidScaling):
        apply_scaling(scalar(1.0), ScalingCoefficients(np.ones((2, 1, 1)), np.ones((1, 1, 1))))


def test_adjoint(rng):
    np.testing.assert_allclose(adjoint(scalar(1j)).blocks[0, 0, 0, 0], -1j)
    A = random_matrix(rng, 3, 2, 2, 1)
    B = adjoint(A)
    assert B.shape == (2, 3, 1, 2)
    np.testing.assert_allclose(adjoint(B).blocks, A.blocks)
    np.testing.assert_allclose(flatten(B), flatten(A).conj().T)


def test_support_and_zero_blocks(rng):
    A = random_matrix(rng, 2, 3, 1, 1)
    mask = np.zeros((2, 3), dtype=bool)
    mask[0, 1] = mask[1, 2] = True
    Z = zero_blocks(A, mask)
    np.testing.assert_array_equal(support(Z), ~mask)


def test_block_diagonal(rng):
    A = random_matrix(rng, 1, 2, 2, 2)
    B = random_matrix(rng, 2, 1, 2, 2)
    D = block_diagonal(A, B)
    assert D.shape == (3, 3, 2, 2)
    assert not support(D)[0, 2] and not support(D)[1, 0]
    with pytest.raises(InvalidArgument):
        block_diagonal(A, random_matrix(rng, 1, 1, 1, 2))


@seed(7)
@settings(max_examples=40, deadline=None)
@given(draw=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_rank_invariant_under_nonsingular_scaling(draw):
    rng = np.random.default_rng(draw)
    m, n, r, c = 3, 2, 2, 2
    low = crandn(rng, m * r, 2) @ crandn(rng, 2, n * c)
    A = BlockMatrix.from_dense(low, r, c)
    S = ScalingCoefficients(crandn(rng, m, r, r) + 3 * np.eye(r), crandn(rng, n, c, c) + 3 * np.eye(c))
    assert numerical_rank(flatten(apply_scaling(A, S)), rtol=1e-9) == numerical_rank(flatten(A), rtol=1e-9)
