"""
Rigidity of point configurations along their collinear triples.

For a triple (i, j, k) of collinear points the rigidity matrix holds one
block row with Delta(v_j - v_k), Delta(v_k - v_i) and Delta(v_i - v_j) in
columns i, j and k. Its kernel contains the tangent vectors of all
projective motions, and its corank bounds the dimension of the space of
motions preserving every triple's collinearity.
"""

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from blockmat import BlockMatrix, flatten, numerical_rank
from bound_report import BoundReport
from config import DEFAULT_COLLINEAR_TOL, DEFAULT_RANK_RTOL, DEFAULT_SEED
from console import print_step
from design import (
    DesignParams,
    WellSpreadMode,
    rank_lower_bound,
    verify_design,
)
from errors import DegenerateConfiguration, InvalidArgument, InvalidTriple

Triple = Tuple[int, int, int]


@dataclass(frozen=True, eq=False)
class PointList:
    """n points of C^d stored as an (n, d) complex array."""

    points: np.ndarray

    def __post_init__(self):
        arr = np.array(self.points, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgument(f"points must have shape (n, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("points contain non-finite coordinates")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class TripleMultiset:
    """Triples of distinct point indices; repeats are allowed."""

    triples: Tuple[Triple, ...]

    def __post_init__(self):
        clean = []
        for tri in self.triples:
            tri = tuple(int(x) for x in tri)
            if len(tri) != 3 or len(set(tri)) != 3 or min(tri) < 0:
                raise InvalidArgument(f"triple {tri} must hold three distinct nonnegative indices")
            clean.append(tri)
        object.__setattr__(self, "triples", tuple(clean))

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def max_index(self) -> int:
        return max((max(t) for t in self.triples), default=-1)

    def counts_per_index(self, n: int) -> np.ndarray:
        counts = np.zeros(n, dtype=int)
        for tri in self.triples:
            for x in tri:
                counts[x] += 1
        return counts

    def pair_counts(self) -> Counter:
        pairs: Counter = Counter()
        for tri in self.triples:
            for a, b in itertools.combinations(sorted(tri), 2):
                pairs[(a, b)] += 1
        return pairs


def delta_block(w) -> np.ndarray:
    """
    The (d-1) x d matrix whose rows w_{i+1} e_1 - w_1 e_{i+1} span the
    complement of w in the sense that Delta(w) w = 0.
    """
    w = np.asarray(w, dtype=np.complex128).ravel()
    d = w.shape[0]
    if d < 2:
        raise InvalidArgument(f"Delta needs dimension at least 2, got {d}")
    D = np.zeros((d - 1, d), dtype=np.complex128)
    D[:, 0] = w[1:]
    D[np.arange(d - 1), np.arange(1, d)] = -w[0]
    return D


def generic_transform(V: PointList, seed: int = DEFAULT_SEED, max_draws: int = 100) -> PointList:
    """
    Apply a random well-conditioned affine map so that no two points share
    a first coordinate.
    """
    rng = np.random.default_rng(seed)
    X = V.points
    n, d = X.shape
    for _ in range(max_draws):
        M = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
        b = (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / math.sqrt(2)
        if np.linalg.cond(M) >= 1e4:
            continue
        Y = X @ M.T + b
        if n < 2:
            return PointList(Y)
        scale = max(float(np.max(np.linalg.norm(Y - Y[0], axis=1))), np.finfo(float).tiny)
        first = Y[:, 0]
        diffs = np.abs(first[:, None] - first[None, :])
        np.fill_diagonal(diffs, np.inf)
        if diffs.min() > 1e-8 * scale:
            return PointList(Y)
    raise DegenerateConfiguration(
        f"no generic transform separated the first coordinates after {max_draws} draws; "
        "are two points equal?"
    )


def collinearity_residuals(P: np.ndarray, triples: np.ndarray) -> np.ndarray:
    """
    Norm of the wedge of the unit vectors v_j - v_i and v_k - v_i for each
    triple; zero exactly when the three points are collinear.
    """
    triples = np.asarray(triples, dtype=int).reshape(-1, 3)
    if triples.shape[0] == 0:
        return np.zeros(0)
    u = P[triples[:, 1]] - P[triples[:, 0]]
    w = P[triples[:, 2]] - P[triples[:, 0]]
    nu = np.linalg.norm(u, axis=1)
    nw = np.linalg.norm(w, axis=1)
    good = (nu > 0) & (nw > 0)
    u = np.where(good[:, None], u / np.where(nu > 0, nu, 1)[:, None], 0)
    w = np.where(good[:, None], w / np.where(nw > 0, nw, 1)[:, None], 0)
    wedge = u[:, :, None] * w[:, None, :] - w[:, :, None] * u[:, None, :]
    return np.sqrt(0.5 * np.sum(np.abs(wedge) ** 2, axis=(1, 2)))


class CollinearTriples(NamedTuple):
    triples: TripleMultiset
    delta_per_point: np.ndarray

    @property
    def delta(self) -> float:
        return float(self.delta_per_point.min()) if self.delta_per_point.size else 0.0


def collinear_triples(V: PointList, tol: float = DEFAULT_COLLINEAR_TOL) -> CollinearTriples:
    """
    Every collinear triple i < j < k of V, and for each point the fraction
    of other points it shares a line with some third point.
    """
    n = V.n
    if n < 3:
        return CollinearTriples(TripleMultiset(()), np.zeros(n))
    idx = np.array(list(itertools.combinations(range(n), 3)), dtype=int)
    res = collinearity_residuals(V.points, idx)
    found = idx[res <= tol]
    partners: List[set] = [set() for _ in range(n)]
    for i, j, k in found:
        partners[i].update((j, k))
        partners[j].update((i, k))
        partners[k].update((i, j))
    delta = np.array([len(p) / (n - 1) for p in partners])
    return CollinearTriples(TripleMultiset(tuple(map(tuple, found.tolist()))), delta)


def rigidity_matrix(V: PointList, T: TripleMultiset,
                    tol: float = DEFAULT_COLLINEAR_TOL) -> BlockMatrix:
    """The |T| x n matrix of (d-1) x d blocks described in the module docstring."""
    if len(T) == 0:
        raise InvalidArgument("rigidity matrix needs at least one triple")
    if T.max_index() >= V.n:
        raise InvalidArgument(f"triple index {T.max_index()} out of range for {V.n} points")
    P = V.points
    arr = np.array(T.triples, dtype=int)
    res = collinearity_residuals(P, arr)
    bad = np.flatnonzero(res > tol)
    if bad.size:
        raise InvalidTriple(T.triples[bad[0]], float(res[bad[0]]))
    d = V.d
    blocks = np.zeros((len(T), V.n, d - 1, d), dtype=np.complex128)
    for row, (i, j, k) in enumerate(T.triples):
        blocks[row, i] += delta_block(P[j] - P[k])
        blocks[row, j] += delta_block(P[k] - P[i])
        blocks[row, k] += delta_block(P[i] - P[j])
    return BlockMatrix(blocks)


def projective_motion_basis(V: PointList) -> np.ndarray:
    """
    Tangent vectors at V of the projective group, one row per generator of
    sl(d+1); shape (d^2 + 2d, n d).
    """
    X = V.points
    n, d = X.shape
    H = np.hstack([X, np.ones((n, 1), dtype=np.complex128)])
    gens = []
    for a in range(d + 1):
        for b in range(d + 1):
            if a != b:
                g = np.zeros((d + 1, d + 1), dtype=np.complex128)
                g[a, b] = 1
                gens.append(g)
    for a in range(d):
        g = np.zeros((d + 1, d + 1), dtype=np.complex128)
        g[a, a], g[d, d] = 1, -1
        gens.append(g)
    rows = []
    for g in gens:
        Y = H @ g.T
        tangent = Y[:, :d] - X * Y[:, d:d + 1]
        rows.append(tangent.reshape(n * d))
    return np.array(rows)


def rigidity_formula(d: int, t, k, n: int) -> int:
    """floor(2 d^2 t n / (2 d t + k (d - 1)))."""
    if d < 2 or n < 1 or t <= 0 or k < 0:
        raise InvalidArgument(f"invalid rigidity parameters d={d}, t={t}, k={k}, n={n}")
    return int(math.floor(2 * d * d * t * n / (2 * d * t + k * (d - 1)) + 1e-9))


def sg_rigidity_formula(d: int, delta: float, n: int) -> int:
    """Rigidity bound for a delta-SG configuration: k = 3 delta (n - 1), t = 6; at most 12 d / delta."""
    if not 0 < delta <= 1:
        raise InvalidArgument(f"delta must lie in (0, 1], got {delta}")
    return rigidity_formula(d, 6, 3 * delta * (n - 1), n)


def collinear_motion_velocity(V: PointList, triple: Sequence[int], seed: int = DEFAULT_SEED,
                              h: float = 1e-5) -> np.ndarray:
    """
    Velocity in C^{nd} of a random motion moving the three points of a
    collinear triple along a moving line (all other points fixed), by
    central differences.
    """
    i, j, k = (int(x) for x in triple)
    P = V.points
    rng = np.random.default_rng(seed)
    u = P[j] - P[i]
    lam_k = np.vdot(u, P[k] - P[i]) / np.vdot(u, u)
    lams = np.array([0, 1, lam_k])

    def crandn(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    do, du, dl = crandn(V.d), crandn(V.d), crandn(3)

    def positions(s: float) -> np.ndarray:
        return (P[i] + s * do)[None, :] + (lams + s * dl)[:, None] * (u + s * du)[None, :]

    vel = (positions(h) - positions(-h)) / (2 * h)
    out = np.zeros((V.n, V.d), dtype=np.complex128)
    out[[i, j, k]] = vel
    return out.reshape(-1)


def rigidity_bound(V: PointList, T: Optional[TripleMultiset] = None, d: Optional[int] = None,
                   t: Optional[int] = None, k: Optional[int] = None, seed: int = DEFAULT_SEED,
                   collinear_tol: float = DEFAULT_COLLINEAR_TOL,
                   rank_rtol: float = DEFAULT_RANK_RTOL) -> BoundReport:
    """
    Compare dim ker of the rigidity matrix with floor(2 d^2 t n / (2dt + k(d-1))).

    k defaults to the fewest triples through any point and t to the most
    triples through any pair. Well-spreadness of each point's triples is
    certified on the rigidity matrix in kernel-line mode.
    """
    if d is not None and d != V.d:
        raise InvalidArgument(f"points live in C^{V.d}, not C^{d}")
    n, d = V.n, V.d
    if d < 2:
        raise InvalidArgument("rigidity needs points of dimension at least 2")
    if T is None:
        T = collinear_triples(V, collinear_tol).triples
    W = generic_transform(V, seed)
    A = rigidity_matrix(W, T, collinear_tol)

    counts = T.counts_per_index(n)
    pairs = T.pair_counts()
    k = int(counts.min()) if k is None else int(k)
    t = max(pairs.values(), default=1) if t is None else int(t)
    hyp_k = bool(np.all(counts >= k))
    hyp_t = max(pairs.values(), default=0) <= t

    cert = verify_design(A, DesignParams(3, max(k, 1), max(t, 1)), WellSpreadMode.KERNEL_LINE, seed=seed)
    violations: List[Dict] = [
        {"point": col.column, "well_spread": col.k_certified,
         "violating_subspace": col.certificate.violating_subspace}
        for col in cert.columns if col.k_certified < k
    ]

    bound = rigidity_formula(d, t, k, n)
    raw = 2 * d * d * t * n / (2 * d * t + k * (d - 1))
    F = flatten(A)
    rank = numerical_rank(F, rtol=rank_rtol)
    measured = d * n - rank

    motions = projective_motion_basis(W)
    scale = max(np.linalg.norm(F, 2) * np.max(np.linalg.norm(motions, axis=1)), np.finfo(float).tiny)
    kernel_residual = float(np.max(np.linalg.norm(motions @ F.T, axis=1)) / scale)
    motion_rank = numerical_rank(motions, rtol=rank_rtol)
    print_step("rigidity", n=n, d=d, triples=len(T), rank=rank)

    details = {
        "n": n, "d": d, "triples": len(T), "k": k, "t": t,
        "rank": rank,
        "motion_rank": motion_rank,
        "motion_kernel_residual": kernel_residual,
        "certified": {"q": cert.q_actual, "k": cert.k_actual, "t": cert.t_actual},
        "violations": violations,
    }
    if cert.k_actual >= 1:
        design = rank_lower_bound(3, cert.k_actual, max(cert.t_actual, 1), d - 1, d, n)
        details["design_rank_bound"] = design.ceiling
        details["design_rank_ok"] = rank >= design.ceiling
    return BoundReport(
        name="rigidity",
        bound=raw,
        bound_int=bound,
        measured=measured,
        relation="<=",
        hypotheses={
            "each_point_in_k_triples": hyp_k,
            "each_pair_in_at_most_t_triples": hyp_t,
            "triples_well_spread_at_each_point": not violations,
            "motions_in_kernel": kernel_residual <= 1e-8,
        },
        details=details,
        certificate=cert.to_dict(),
    )
