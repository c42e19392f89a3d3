"""
Deterministic generators for the standard test configurations.

Every generator is a pure function of its arguments (seeded where random)
and validates the property it promises before returning.
"""

import itertools
import math
from typing import Tuple

import numpy as np

from blockmat import BlockMatrix, numerical_rank
from errors import ConstructionFailure, InvalidArgument
from incidence import CurveSet, LineSet
from rigidity import PointList, TripleMultiset, collinear_triples
from subspace_sg import SubspaceArrangement

MAX_ATTEMPTS = 100


def _crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidArgument(message)


def gen_hesse() -> SubspaceArrangement:
    """The nine inflection points of a smooth plane cubic, as lines of C^3."""
    omega = np.exp(2j * np.pi / 3)
    vecs = []
    for a in range(3):
        w = omega ** a
        vecs.extend([(0, 1, -w), (1, 0, -w), (1, -w, 0)])
    W = SubspaceArrangement(np.array(vecs, dtype=np.complex128)[:, None, :])
    if any(len(p) != 8 for p in W.partners()):
        raise ConstructionFailure("Hesse points are not a complete 1-SG configuration")
    return W


def gen_grid(s: int) -> Tuple[PointList, TripleMultiset]:
    """The s x s integer grid in C^2 with all of its collinear triples."""
    _require(s >= 3, f"grid side must be at least 3, got {s}")
    V = PointList(np.array([(x, y) for x in range(s) for y in range(s)], dtype=np.complex128))
    return V, collinear_triples(V).triples


def gen_orthopair(d: int) -> SubspaceArrangement:
    """The planes span{e_i, e_j} of C^d; planes sharing an index intersect."""
    _require(d >= 3, f"orthopair needs d >= 3, got {d}")
    e = np.eye(d, dtype=np.complex128)
    return SubspaceArrangement(np.array([[e[i], e[j]] for i, j in itertools.combinations(range(d), 2)]))


def gen_product_sg(ell: int) -> SubspaceArrangement:
    """
    Hesse arrangement tensored with C^l: nine l-dimensional subspaces of
    C^{3l}, a 1-SG arrangement spanning exactly 3l dimensions.
    """
    _require(ell >= 1, f"l must be positive, got {ell}")
    hesse = gen_hesse().bases[:, 0, :]
    eye = np.eye(ell, dtype=np.complex128)
    W = SubspaceArrangement(np.array([np.kron(h[None, :], eye) for h in hesse]))
    if W.span_dimension() != 3 * ell:
        raise ConstructionFailure("product arrangement does not span 3l dimensions")
    return W


def gen_pencil_lines(n: int, d: int, seed: int = 0) -> LineSet:
    """
    n generic lines inside a random affine 2-flat of C^d: every pair meets,
    no two are parallel and all intersection points are distinct.
    """
    _require(n >= 3, f"need at least 3 lines, got {n}")
    _require(d >= 2, f"need d >= 2, got {d}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        origin = _crandn(rng, d)
        E = _crandn(rng, 2, d)
        if numerical_rank(E) < 2:
            continue
        p2 = _crandn(rng, n, 2)
        u2 = _crandn(rng, n, 2)
        meets = []
        ok = True
        for i, j in itertools.combinations(range(n), 2):
            M = np.stack([u2[i], -u2[j]], axis=1)
            if abs(np.linalg.det(M)) < 1e-6:
                ok = False
                break
            s = np.linalg.solve(M, p2[j] - p2[i])
            meets.append(p2[i] + s[0] * u2[i])
        if not ok:
            continue
        pts = np.array(meets)
        gaps = [np.linalg.norm(a - b) for a, b in itertools.combinations(pts, 2)]
        if gaps and min(gaps) < 1e-6:
            continue
        return LineSet(origin + p2 @ E, u2 @ E)
    raise ConstructionFailure(f"no generic pencil found after {MAX_ATTEMPTS} attempts")


def gen_concurrent_lines(n: int, d: int, seed: int = 0) -> LineSet:
    """n random lines of C^d through one common point."""
    _require(n >= 3, f"need at least 3 lines, got {n}")
    _require(d >= 2, f"need d >= 2, got {d}")
    rng = np.random.default_rng(seed)
    center = _crandn(rng, d)
    dirs = _crandn(rng, n, d)
    offsets = _crandn(rng, n)
    return LineSet(center + offsets[:, None] * dirs, dirs)


def gen_plane_conics(n: int, d: int, seed: int = 0) -> CurveSet:
    """n random parametrized conics lying in one random 2-dimensional linear subspace of C^d."""
    _require(n >= 2, f"need at least 2 conics, got {n}")
    _require(d >= 2, f"need d >= 2, got {d}")
    rng = np.random.default_rng(seed)
    E = _crandn(rng, 2, d)
    return CurveSet(_crandn(rng, n, 3, 2) @ E)


def gen_cyclic_design(n: int, q: int, p: int, r: int, seed: int = 0) -> BlockMatrix:
    """
    A (q, qp, t)-design in M_{np, n}(r, r) with random nonsingular blocks.

    Row (s, j) is supported on j + D_s mod n for p random offset sets D_s of
    size q containing 0, so every column holds exactly q p nonzero blocks.
    """
    _require(n >= 2 and 2 <= q <= n and p >= 1 and r >= 1,
             f"invalid cyclic design parameters n={n}, q={q}, p={p}, r={r}")
    rng = np.random.default_rng(seed)
    offsets = []
    for _ in range(p):
        rest = rng.choice(np.arange(1, n), size=q - 1, replace=False)
        offsets.append(np.concatenate([[0], np.sort(rest)]))
    blocks = np.zeros((n * p, n, r, r), dtype=np.complex128)
    for s, D in enumerate(offsets):
        for j in range(n):
            for delta in D:
                for _ in range(MAX_ATTEMPTS):
                    X = _crandn(rng, r, r)
                    if np.linalg.cond(X) < 1e3:
                        break
                else:
                    raise ConstructionFailure("could not draw a well-conditioned block")
                blocks[s * n + j, (j + delta) % n] = X
    return BlockMatrix(blocks)
