import numpy as np
import pytest

from blockmat import flatten, numerical_rank
from errors import HypothesisFailure, InvalidArgument
from generators import gen_hesse, gen_orthopair, gen_product_sg
from subspace_sg import (
    SubspaceArrangement,
    sg_dimension_bound,
    sg_matrices,
    steiner_triples,
    verify_steiner,
)


def test_steiner_small_orders():
    assert steiner_triples(3).triples == ((0, 1, 2),) * 6
    T4 = steiner_triples(4)
    assert len(T4) == 12
    assert T4.counts_per_index(4).tolist() == [9] * 4
    T5 = steiner_triples(5)
    assert len(T5) == 20
    assert T5.counts_per_index(5).tolist() == [12] * 5


@pytest.mark.parametrize("r", range(3, 61))
def test_steiner_invariants(r):
    T = steiner_triples(r)
    assert len(T) == r * r - r
    assert all(c == 3 * (r - 1) for c in T.counts_per_index(r))
    assert max(T.pair_counts().values()) <= 6
    assert all(len(set(tri)) == 3 for tri in T)
    verify_steiner(T, r)


def test_steiner_rejects_small_orders():
    for r in (0, 2, True):
        with pytest.raises(InvalidArgument):
            steiner_triples(r)


def test_arrangement_validation():
    with pytest.raises(InvalidArgument):
        SubspaceArrangement(np.array([[[1, 0, 0], [2, 0, 0]]], dtype=complex))
    W = gen_hesse()
    assert (W.n, W.ell, W.d) == (9, 1, 3)
    assert W.span_dimension() == 3


def test_hesse_structure():
    W = gen_hesse()
    spaces = W.special_spaces()
    assert len(spaces) == 12
    assert all(len(members) == 3 for members in spaces)
    assert W.intersecting_pairs() == []
    assert W.delta() == pytest.approx(1.0)


def test_hesse_sg_bound():
    A_V, A_C, report = sg_matrices(gen_hesse(), 1.0)
    assert report.bound_int == 3
    assert report.measured == 3
    assert report.passed
    assert A_C.m == 72
    assert report.details["certified"] == {"q": 3, "k": 24, "t": 6}
    assert report.details["rank_A_C"] == 6
    assert report.details["design_rank_bound"] == 6
    assert report.details["design_rank_ok"]
    assert np.linalg.norm(flatten(A_C) @ A_V) <= 1e-9 * np.linalg.norm(flatten(A_C))


def test_hesse_hypotheses_are_measured():
    report = sg_matrices(gen_hesse(), 1.0).report
    assert report.hypotheses == {
        "trivial_intersections": True,
        "delta_partners": True,
        "dependency_design": True,
    }
    assert report.details["intersecting_pairs"] == 0
    assert report.details["min_partners"] == 8
    assert report.details["k"] == 8


def test_product_sg_bound():
    W = gen_product_sg(2)
    _, A_C, report = sg_matrices(W, 1.0)
    assert report.measured == 6
    assert report.bound_int == 7
    assert report.passed
    assert A_C.shape[2:] == (2, 2)


def test_orthopair_rejected():
    with pytest.raises(HypothesisFailure) as info:
        sg_matrices(gen_orthopair(5), 1.0)
    assert info.value.evidence["pairs"]


def test_too_few_partners_rejected():
    hesse = gen_hesse().bases
    extra = np.array([[[0.3 + 0.1j, -1.7, 0.55j]]])
    W = SubspaceArrangement(np.concatenate([hesse, extra]))
    with pytest.raises(HypothesisFailure) as info:
        sg_matrices(W, 1.0)
    assert 9 in info.value.evidence["subspaces"]


def test_dimension_bound_formula():
    assert sg_dimension_bound(1, 1.0) == 3
    assert sg_dimension_bound(2, 1.0) == 7
    assert sg_dimension_bound(1, 0.5) == 7
    with pytest.raises(InvalidArgument):
        sg_dimension_bound(1, 1.5)


def test_dependency_rows_rank():
    W = gen_hesse()
    _, A_C, _ = sg_matrices(W, 1.0)
    assert numerical_rank(flatten(A_C)) == W.n - W.span_dimension()
