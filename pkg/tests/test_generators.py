import itertools

import numpy as np
import pytest

from blockmat import support
from errors import InvalidArgument
from generators import (
    gen_concurrent_lines,
    gen_cyclic_design,
    gen_grid,
    gen_hesse,
    gen_orthopair,
    gen_pencil_lines,
    gen_plane_conics,
    gen_product_sg,
)


def test_hesse_is_complete_sg():
    W = gen_hesse()
    assert all(len(p) == 8 for p in W.partners())


def test_grid_triples():
    V, T = gen_grid(3)
    assert V.n == 9 and V.d == 2
    assert len(T) == 8
    assert len(gen_grid(4)[1]) > 8
    with pytest.raises(InvalidArgument):
        gen_grid(2)


def test_orthopair_planes():
    W = gen_orthopair(5)
    assert (W.n, W.ell, W.d) == (10, 2, 5)
    assert len(W.intersecting_pairs()) > 0
    with pytest.raises(InvalidArgument):
        gen_orthopair(2)


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_product_sg_dimension(ell):
    W = gen_product_sg(ell)
    assert (W.n, W.ell, W.d) == (9, ell, 3 * ell)
    assert W.span_dimension() == 3 * ell


def test_pencil_lines_lie_in_a_plane():
    L = gen_pencil_lines(5, 4, seed=3)
    assert (L.n, L.d) == (5, 4)
    flat = np.vstack([L.points - L.points[0], L.directions])
    assert np.linalg.matrix_rank(flat, tol=1e-8) == 2


def test_pencil_is_deterministic():
    a, b = gen_pencil_lines(4, 3, seed=9), gen_pencil_lines(4, 3, seed=9)
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.directions, b.directions)


def test_concurrent_lines_share_a_point():
    L = gen_concurrent_lines(4, 3, seed=1)
    for i, j in itertools.combinations(range(L.n), 2):
        M = np.stack([L.directions[i], -L.directions[j]], axis=1)
        s = np.linalg.lstsq(M, L.points[j] - L.points[i], rcond=None)[0]
        assert np.linalg.norm(M @ s - (L.points[j] - L.points[i])) <= 1e-9


def test_plane_conics():
    C = gen_plane_conics(5, 4, seed=0)
    assert (C.n, C.degree, C.d) == (5, 2, 4)
    assert np.linalg.matrix_rank(C.gamma_matrix(), tol=1e-8) == 2


def test_cyclic_design_support():
    A = gen_cyclic_design(7, 3, 2, 2, seed=5)
    assert A.shape == (14, 7, 2, 2)
    sup = support(A)
    assert sup.sum(axis=1).tolist() == [3] * 14
    assert sup.sum(axis=0).tolist() == [6] * 7
    with pytest.raises(InvalidArgument):
        gen_cyclic_design(3, 4, 1, 1)
