import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from blockmat import (
    BlockMatrix,
    ScalingCoefficients,
    apply_scaling,
    block_diagonal,
    col_normalize,
    ds,
    zero_blocks,
)
from errors import InvalidArgument
from generators import gen_cyclic_design
from helpers import crandn
from scaling import (
    amgm_bound,
    capacity_objective,
    capacity_upper_bound,
    duality_check,
    rescale_to_mean_one,
    sinkhorn_scale,
    transpose_capacity_diagnostic,
)


def scalar_matrix(rows):
    M = np.array(rows, dtype=complex)
    return BlockMatrix(M.reshape(M.shape[0], M.shape[1], 1, 1))


def random_pd(rng, count, dim):
    G = crandn(rng, count, dim, dim)
    return G @ np.swapaxes(G.conj(), 1, 2) + 0.5 * np.eye(dim)


def classic_sinkhorn(B, iters=5000):
    B = B.astype(float).copy()
    for _ in range(iters):
        B /= B.sum(axis=1, keepdims=True)
        B /= B.sum(axis=0, keepdims=True)
    return B


def test_identity_is_already_scaled():
    A = BlockMatrix(np.eye(2).reshape(1, 1, 2, 2))
    state, rep = sinkhorn_scale(A)
    assert rep.converged
    assert rep.iterations == 0
    assert rep.final_ds == pytest.approx(0.0, abs=1e-12)


def test_scalar_capacity_bound():
    state, rep = sinkhorn_scale(scalar_matrix([[2.0]]))
    assert rep.converged
    assert rep.capacity_upper_bound_log == pytest.approx(math.log(4.0))
    assert capacity_upper_bound(state) == rep.capacity_upper_bound_log
    assert state.bound_trace[-1] == rep.capacity_upper_bound_log
    assert state.current.blocks[0, 0, 0, 0] == pytest.approx(1.0)


def test_two_by_two_matches_classic_sinkhorn():
    A = scalar_matrix([[1, 1], [1, 2]])
    state, rep = sinkhorn_scale(A, tol=1e-12)
    assert rep.converged
    expected = classic_sinkhorn(np.abs(flatten_scalar(A)) ** 2)
    np.testing.assert_allclose(np.abs(flatten_scalar(state.current)) ** 2, expected, atol=1e-6)


def flatten_scalar(A):
    return A.blocks[:, :, 0, 0]


def test_current_tracks_accumulated_coefficients(rng):
    A = BlockMatrix(crandn(rng, 3, 2, 2, 3))
    state, rep = sinkhorn_scale(A, max_iter=50)
    np.testing.assert_allclose(apply_scaling(A, state.accumulated).blocks, state.current.blocks, atol=1e-8)


def test_zero_column_reports_failure():
    A = scalar_matrix([[1, 0], [1, 0]])
    state, rep = sinkhorn_scale(A)
    assert not rep.converged
    assert rep.non_scalable_evidence
    assert rep.failure is not None
    assert rep.failure.axis == "column"
    assert rep.failure.position == 1
    assert rep.failure.step == 0


def test_invalid_arguments():
    A = scalar_matrix([[1.0]])
    with pytest.raises(InvalidArgument):
        sinkhorn_scale(A, tol=0)
    with pytest.raises(InvalidArgument):
        sinkhorn_scale(A, max_iter=0)


def test_step_factors_and_bound_trace(rng):
    A = BlockMatrix(np.abs(crandn(rng, 4, 3, 2, 2)) + 0.1)
    state, rep = sinkhorn_scale(A, tol=1e-10)
    assert rep.converged
    for step in state.step_log:
        assert step.log_h_row >= -1e-8
        assert step.log_h_col >= min(1.0, step.ds_before_col) / 6 - 1e-8
    trace = state.bound_trace
    assert all(b <= a + 1e-8 for a, b in zip(trace, trace[1:]))
    assert rep.to_dict()["log_capacity_upper_bound"] == rep.capacity_upper_bound_log


@pytest.mark.parametrize("sample", range(5))
def test_cyclic_designs_converge(sample):
    A = gen_cyclic_design(6, 2, 2, 2, seed=sample)
    state, rep = sinkhorn_scale(A, tol=1e-6)
    assert rep.converged
    assert ds(state.current) <= 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("sample", range(50))
def test_cyclic_designs_converge_many(sample):
    A = gen_cyclic_design(8, 3, 2, 2, seed=100 + sample)
    _, rep = sinkhorn_scale(A, tol=1e-6)
    assert rep.converged


def test_objective_at_column_normalized_identity(rng):
    A = col_normalize(BlockMatrix(crandn(rng, 3, 2, 2, 2))).matrix
    assert capacity_objective(A, np.broadcast_to(np.eye(2), (3, 2, 2))) == pytest.approx(0.0, abs=1e-9)


def test_objective_singular_is_minus_infinity():
    A = scalar_matrix([[1, 0], [1, 0]])
    assert capacity_objective(A, np.ones((2, 1, 1))) == -math.inf


def test_objective_rejects_indefinite_weights():
    with pytest.raises(InvalidArgument):
        capacity_objective(scalar_matrix([[1.0]]), -np.ones((1, 1, 1)))


def check_block_diagonal_additivity(rng):
    A = BlockMatrix(crandn(rng, 2, 2, 2, 2))
    B = BlockMatrix(crandn(rng, 3, 3, 2, 2))
    XA, XB = random_pd(rng, 2, 2), random_pd(rng, 3, 2)
    total = capacity_objective(block_diagonal(A, B), np.concatenate([XA, XB]))
    assert total == pytest.approx(capacity_objective(A, XA) + capacity_objective(B, XB), rel=1e-8, abs=1e-8)


def check_zeroing_monotone(rng):
    A = BlockMatrix(crandn(rng, 3, 3, 2, 2))
    X = random_pd(rng, 3, 2)
    mask = rng.random((3, 3)) < 0.3
    assert capacity_objective(zero_blocks(A, mask), X) <= capacity_objective(A, X) + 1e-9


def check_objective_under_scaling(rng):
    A = BlockMatrix(crandn(rng, 3, 2, 2, 2))
    X = random_pd(rng, 3, 2)
    R = 0.5 * crandn(rng, 3, 2, 2) + 2 * np.eye(2)
    C = 0.5 * crandn(rng, 2, 2, 2) + 2 * np.eye(2)
    scaled = apply_scaling(A, ScalingCoefficients(R, C))
    RXR = np.swapaxes(R.conj(), 1, 2) @ X @ R
    shift = 2 * float(np.sum(np.log(np.abs(np.linalg.det(C)))))
    assert capacity_objective(scaled, X) == pytest.approx(capacity_objective(A, RXR) + shift, rel=1e-9, abs=1e-9)


def test_objective_additive_over_block_diagonal(rng):
    check_block_diagonal_additivity(rng)


def test_zeroing_blocks_decreases_objective(rng):
    A = BlockMatrix(crandn(rng, 3, 3, 2, 2))
    X = random_pd(rng, 3, 2)
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 1] = mask[2, 2] = True
    assert capacity_objective(zero_blocks(A, mask), X) <= capacity_objective(A, X) + 1e-9


def test_objective_under_scaling(rng):
    check_objective_under_scaling(rng)


@pytest.mark.slow
@pytest.mark.parametrize("check", [
    check_block_diagonal_additivity,
    check_zeroing_monotone,
    check_objective_under_scaling,
])
def test_objective_identities_many(check):
    for draw in range(1000):
        check(np.random.default_rng(draw))


def test_amgm_examples():
    assert amgm_bound([1, 1, 1, 1]) == pytest.approx(1.0)
    assert amgm_bound([1.5, 0.5]) == pytest.approx(math.exp(-1 / 12))
    assert amgm_bound([2, 0.5, 0.5]) == pytest.approx(math.exp(-1 / 6))
    with pytest.raises(InvalidArgument):
        amgm_bound([1.0, 2.0])
    with pytest.raises(InvalidArgument):
        amgm_bound([2.0, 0.0])


@seed(11)
@settings(max_examples=300, deadline=None)
@given(
    size=st.integers(min_value=1, max_value=12),
    draw=st.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_amgm_bound_dominates_product(size, draw):
    rng = np.random.default_rng(draw)
    x = rescale_to_mean_one(rng.uniform(0.01, 3.0, size))
    assert float(np.prod(x)) <= amgm_bound(x) * (1 + 1e-12)


@pytest.mark.slow
def test_amgm_bound_dominates_product_many():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        size = int(rng.integers(1, 13))
        x = rescale_to_mean_one(rng.uniform(0.01, 3.0, size))
        assert float(np.prod(x)) <= amgm_bound(x) * (1 + 1e-12)


@pytest.mark.slow
def test_duality_inequality_many():
    for draw in range(1000):
        rng = np.random.default_rng(draw)
        A = BlockMatrix(crandn(rng, 3, 2, 2, 3))
        lhs, rhs = duality_check(A, random_pd(rng, 3, 2))
        assert lhs >= rhs - 1e-9


@seed(3)
@settings(max_examples=60, deadline=None)
@given(draw=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_duality_inequality(draw):
    rng = np.random.default_rng(draw)
    A = BlockMatrix(crandn(rng, 3, 2, 2, 3))
    lhs, rhs = duality_check(A, random_pd(rng, 3, 2))
    assert lhs >= rhs - 1e-9


def test_transpose_diagnostic_runs(rng):
    A = BlockMatrix(np.abs(crandn(rng, 2, 2, 2, 2)) + 0.2)
    out = transpose_capacity_diagnostic(A, tol=1e-10)
    assert out["converged"] and out["adjoint_converged"]
    assert out["duality_gap"] is not None
