import numpy as np
import pytest

from blockmat import flatten
from design import DesignParams, WellSpreadMode, regularize, verify_design
from errors import DegenerateConfiguration, InvalidArgument, InvalidTriple
from generators import gen_grid
from rigidity import (
    PointList,
    TripleMultiset,
    collinear_motion_velocity,
    collinear_triples,
    collinearity_residuals,
    delta_block,
    generic_transform,
    projective_motion_basis,
    rigidity_bound,
    rigidity_formula,
    rigidity_matrix,
    sg_rigidity_formula,
)


def test_delta_block_examples():
    np.testing.assert_allclose(delta_block([1, 0, 0]), [[0, -1, 0], [0, 0, -1]])
    np.testing.assert_allclose(delta_block([1, 2, 3]), [[2, -1, 0], [3, 0, -1]])
    w = np.array([1 + 1j, 2, -3j])
    np.testing.assert_allclose(delta_block(w) @ w, 0, atol=1e-12)
    with pytest.raises(InvalidArgument):
        delta_block([1])


def test_triple_multiset_validation():
    T = TripleMultiset(((0, 1, 2), (0, 1, 2), (1, 2, 3)))
    assert len(T) == 3
    assert T.counts_per_index(4).tolist() == [2, 3, 3, 1]
    assert T.pair_counts()[(1, 2)] == 3
    with pytest.raises(InvalidArgument):
        TripleMultiset(((0, 0, 1),))


def test_generic_transform_separates_first_coordinates():
    V = PointList(np.array([[0, 0], [0, 1], [0, 2], [1, 0]], dtype=complex))
    W = generic_transform(V, seed=3)
    first = W.points[:, 0]
    gaps = np.abs(first[:, None] - first[None, :]) + np.eye(4)
    assert gaps.min() > 1e-8
    assert collinearity_residuals(W.points, [(0, 1, 2)])[0] <= 1e-10


def test_generic_transform_rejects_repeated_points():
    V = PointList(np.array([[1, 1], [1, 1], [0, 2]], dtype=complex))
    with pytest.raises(DegenerateConfiguration):
        generic_transform(V)


def test_collinear_triples_of_grid():
    V, T = gen_grid(3)
    assert len(T) == 8
    found = collinear_triples(V)
    assert found.delta == pytest.approx(0.5)
    assert collinear_triples(PointList(np.eye(2, dtype=complex))).triples.triples == ()


def test_rigidity_matrix_shape_and_rejection():
    V, T = gen_grid(3)
    A = rigidity_matrix(V, T)
    assert A.shape == (8, 9, 1, 2)
    with pytest.raises(InvalidTriple):
        rigidity_matrix(V, TripleMultiset(((0, 1, 4),)))
    with pytest.raises(InvalidArgument):
        rigidity_matrix(V, TripleMultiset(()))
    with pytest.raises(InvalidArgument):
        rigidity_matrix(V, TripleMultiset(((0, 1, 12),)))


def test_projective_motion_counts(rng):
    assert projective_motion_basis(PointList(rng.standard_normal((6, 2)))).shape == (8, 12)
    assert projective_motion_basis(PointList(rng.standard_normal((6, 3)))).shape == (15, 18)


def test_rigidity_formula_examples():
    assert rigidity_formula(2, 1, 52, 105) == 15
    assert rigidity_formula(2, 1, 2, 9) == 12
    assert sg_rigidity_formula(2, 1.0, 9) <= 24
    with pytest.raises(InvalidArgument):
        rigidity_formula(1, 1, 2, 9)
    with pytest.raises(InvalidArgument):
        sg_rigidity_formula(2, 0.0, 9)


def test_grid_rigidity_bound():
    V, T = gen_grid(3)
    report = rigidity_bound(V, T)
    assert report.bound_int == 12
    assert report.details["k"] == 2
    assert report.details["t"] == 1
    assert 8 <= report.measured <= 12
    assert report.details["motion_rank"] == 8
    assert report.details["motion_kernel_residual"] <= 1e-8
    assert report.details["certified"] == {"q": 3, "k": 2, "t": 1}
    assert report.details["design_rank_ok"]
    assert report.hypotheses_ok
    assert report.passed


def test_rigidity_bound_rejects_dimension_mismatch():
    V, T = gen_grid(3)
    with pytest.raises(InvalidArgument):
        rigidity_bound(V, T, d=3)


def test_rigidity_bound_finds_triples_itself():
    V, _ = gen_grid(3)
    assert rigidity_bound(V).details["triples"] == 8


def test_rigidity_matrix_is_a_design():
    V, T = gen_grid(3)
    A = rigidity_matrix(generic_transform(V), T)
    cert = verify_design(A, DesignParams(3, 2, 1), WellSpreadMode.KERNEL_LINE)
    assert cert.passed
    B = regularize(A, DesignParams(3, 2, 1), WellSpreadMode.KERNEL_LINE, certificate=cert)
    assert B.shape == (18, 9, 1, 2)
    assert np.linalg.matrix_rank(flatten(B)) <= np.linalg.matrix_rank(flatten(A))


def test_collinear_motion_velocity_in_row_kernel():
    V, T = gen_grid(3)
    W = generic_transform(V)
    A = rigidity_matrix(W, T)
    F = flatten(A)
    for row, triple in enumerate(T):
        vel = collinear_motion_velocity(W, triple, seed=row)
        assert abs(F[row] @ vel) <= 1e-6 * np.linalg.norm(F[row]) * np.linalg.norm(vel)
