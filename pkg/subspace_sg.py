"""
Sylvester-Gallai arrangements of subspaces.

An arrangement of l-dimensional subspaces V_1..V_n of C^d with pairwise
trivial intersections is delta-SG when every V_i has, for at least
delta (n - 1) indices j, a third V_k inside V_i + V_j. Such arrangements
span at most ceil(4 l / delta) - 1 dimensions; the pipeline here builds
the block matrix A_C of linear dependencies between triples and certifies
that bound.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, NamedTuple, Tuple

import numpy as np

from blockmat import BlockMatrix, flatten, numerical_rank
from bound_report import BoundReport
from config import DEFAULT_RANK_RTOL
from console import print_step
from design import DesignParams, WellSpreadMode, rank_lower_bound, verify_design
from errors import (
    ConstructionFailure,
    DegenerateTriple,
    HypothesisFailure,
    InvalidArgument,
    NumericalFailure,
)
from rigidity import TripleMultiset

SPAN_TOL = 1e-8


def _idempotent_latin_square(r: int) -> np.ndarray:
    """
    An r x r Latin square with L[i, i] = i.

    Odd orders use L[i, j] = (i + j)(r + 1)/2 mod r. Even orders extend the
    odd square of order r - 1 along its transversal (i, i + 1).
    """
    if r % 2:
        i, j = np.meshgrid(np.arange(r), np.arange(r), indexing="ij")
        return ((i + j) * ((r + 1) // 2)) % r
    q = r - 1
    M = _idempotent_latin_square(q)
    L = np.zeros((r, r), dtype=int)
    L[:q, :q] = M
    inf = q
    for i in range(q):
        s = (i + 1) % q
        L[i, s] = inf
        L[i, inf] = M[i, s]
        L[inf, s] = M[i, s]
    L[inf, inf] = inf
    return L


def verify_steiner(triples: TripleMultiset, r: int) -> None:
    """Raise ConstructionFailure unless the multiset has r^2 - r triples,
    each element in 3(r - 1) of them and each pair in at most 6."""
    if len(triples) != r * r - r:
        raise ConstructionFailure(f"expected {r * r - r} triples, built {len(triples)}")
    counts = triples.counts_per_index(r)
    if np.any(counts != 3 * (r - 1)):
        raise ConstructionFailure(f"element counts {counts.tolist()} differ from {3 * (r - 1)}")
    pairs = triples.pair_counts()
    if pairs and max(pairs.values()) > 6:
        raise ConstructionFailure(f"a pair lies in {max(pairs.values())} triples")


def steiner_triples(r: int) -> TripleMultiset:
    """
    r^2 - r triples of distinct elements of {0..r-1}: every element in
    exactly 3(r - 1) triples and every pair in at most 6.

    Triples are {a, b, L[a, b]} over ordered pairs a != b of an idempotent
    Latin square L.
    """
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or r < 3:
        raise InvalidArgument(f"steiner_triples needs an integer r >= 3, got {r!r}")
    L = _idempotent_latin_square(r)
    triples = TripleMultiset(tuple(
        tuple(sorted((a, b, int(L[a, b])))) for a in range(r) for b in range(r) if a != b
    ))
    verify_steiner(triples, r)
    return triples


@dataclass(frozen=True, eq=False)
class SubspaceArrangement:
    """n subspaces of C^d of dimension l, each given by an (l, d) basis."""

    bases: np.ndarray

    def __post_init__(self):
        arr = np.array(self.bases, dtype=np.complex128)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise InvalidArgument(f"bases must have shape (n, l, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("bases contain non-finite entries")
        for i in range(arr.shape[0]):
            if numerical_rank(arr[i]) != arr.shape[1]:
                raise InvalidArgument(f"basis {i} does not have rank {arr.shape[1]}")
        arr.setflags(write=False)
        object.__setattr__(self, "bases", arr)

    @property
    def n(self) -> int:
        return self.bases.shape[0]

    @property
    def ell(self) -> int:
        return self.bases.shape[1]

    @property
    def d(self) -> int:
        return self.bases.shape[2]

    def stacked(self) -> np.ndarray:
        """The n l x d matrix A_V of all basis vectors."""
        return self.bases.reshape(self.n * self.ell, self.d)

    def span_dimension(self, rank_rtol: float = DEFAULT_RANK_RTOL) -> int:
        return numerical_rank(self.stacked(), rtol=rank_rtol)

    def intersecting_pairs(self) -> List[Tuple[int, int]]:
        return [
            (i, j) for i, j in itertools.combinations(range(self.n), 2)
            if numerical_rank(np.vstack([self.bases[i], self.bases[j]])) < 2 * self.ell
        ]

    def special_spaces(self) -> Dict[FrozenSet[int], List[int]]:
        """
        Group members by the span of each pair: a key is the set of all V_k
        inside V_i + V_j, kept when it holds at least three members.
        """
        spaces: Dict[FrozenSet[int], List[int]] = {}
        norms = np.linalg.norm(self.bases, axis=(1, 2))
        for i, j in itertools.combinations(range(self.n), 2):
            Q = np.linalg.svd(np.vstack([self.bases[i], self.bases[j]]), full_matrices=False)[2]
            proj = self.bases @ Q.conj().T @ Q
            res = np.linalg.norm(self.bases - proj, axis=(1, 2)) / norms
            members = frozenset(np.flatnonzero(res <= SPAN_TOL).tolist()) | {i, j}
            if len(members) >= 3:
                spaces[members] = sorted(members)
        return spaces

    def partners(self) -> List[set]:
        out: List[set] = [set() for _ in range(self.n)]
        for members in self.special_spaces():
            for i in members:
                out[i].update(members - {i})
        return out

    def delta(self) -> float:
        """The largest delta for which the arrangement is delta-SG."""
        if self.n < 2:
            return 0.0
        return min(len(p) for p in self.partners()) / (self.n - 1)


class SGMatrices(NamedTuple):
    A_V: np.ndarray
    A_C: BlockMatrix
    report: BoundReport


def sg_dimension_bound(ell: int, delta: float) -> int:
    """ceil(4 l / delta) - 1."""
    if not 0 < delta <= 1:
        raise InvalidArgument(f"delta must lie in (0, 1], got {delta}")
    return int(math.ceil(4 * ell / delta - 1e-9)) - 1


def _dependency_row(bases: np.ndarray, tri: Tuple[int, int, int], n: int) -> np.ndarray:
    i1, i2, i3 = tri
    ell = bases.shape[1]
    S = np.vstack([bases[i2], bases[i3]])
    X = np.linalg.lstsq(S.T, bases[i1].T, rcond=None)[0]
    C = X.T
    resid = np.linalg.norm(C @ S - bases[i1]) / np.linalg.norm(bases[i1])
    if resid > 1e-6:
        raise NumericalFailure(f"V_{i1} is not inside V_{i2} + V_{i3} (residual {resid:.3e})")
    C2, C3 = C[:, :ell], C[:, ell:]
    if numerical_rank(C2) < ell or numerical_rank(C3) < ell:
        raise DegenerateTriple(f"coefficients of triple {tri} are singular",
                               {"triple": list(tri)})
    row = np.zeros((n, ell, ell), dtype=np.complex128)
    row[i1] = np.eye(ell)
    row[i2] = -C2
    row[i3] = -C3
    return row


def sg_matrices(W: SubspaceArrangement, delta: float,
                rank_rtol: float = DEFAULT_RANK_RTOL) -> SGMatrices:
    """
    Build A_V and A_C for a delta-SG arrangement and certify the dimension bound.

    Each special space with r members contributes r^2 - r dependency rows
    following steiner_triples(r), so A_C is a (3, 3k, 6)-design with square
    blocks, k = floor(delta (n - 1)).
    """
    n, ell = W.n, W.ell
    if not 0 < delta <= 1:
        raise InvalidArgument(f"delta must lie in (0, 1], got {delta}")
    bad = W.intersecting_pairs()
    if bad:
        raise HypothesisFailure(f"{len(bad)} pairs of subspaces intersect nontrivially",
                                {"pairs": [list(p) for p in bad[:20]]})
    spaces = W.special_spaces()
    partners: List[set] = [set() for _ in range(n)]
    for members in spaces:
        for i in members:
            partners[i].update(members - {i})
    k = int(math.floor(delta * (n - 1) + 1e-9))
    short = [i for i in range(n) if len(partners[i]) < k]
    if short:
        raise HypothesisFailure(
            f"{len(short)} subspaces have fewer than {k} partners",
            {"subspaces": short[:20], "partner_counts": [len(partners[i]) for i in short[:20]]},
        )

    rows = []
    for members in sorted(spaces.values()):
        for tri in steiner_triples(len(members)):
            rows.append(_dependency_row(W.bases, tuple(members[x] for x in tri), n))
    A_C = BlockMatrix(np.array(rows))
    A_V = W.stacked()

    F = flatten(A_C)
    orth = np.linalg.norm(F @ A_V)
    scale = max(np.linalg.norm(F) * np.linalg.norm(A_V), np.finfo(float).tiny)
    if orth > 1e-6 * scale:
        raise NumericalFailure(f"A_C A_V is not zero (norm {orth:.3e})")

    cert = verify_design(A_C, DesignParams(3, max(3 * k, 1), 6), WellSpreadMode.SQUARE)
    rank_c = numerical_rank(F, rtol=rank_rtol)
    measured = numerical_rank(A_V, rtol=rank_rtol)
    bound = sg_dimension_bound(ell, delta)
    details = {
        "n": n, "ell": ell, "d": W.d, "delta": delta, "k": k,
        "special_spaces": len(spaces),
        "intersecting_pairs": len(bad),
        "min_partners": min(len(p) for p in partners),
        "rows": A_C.m,
        "rank_A_C": rank_c,
        "certified": {"q": cert.q_actual, "k": cert.k_actual, "t": cert.t_actual},
    }
    if cert.k_actual >= 1:
        design = rank_lower_bound(3, cert.k_actual, max(cert.t_actual, 1), ell, ell, n)
        details["design_rank_bound"] = design.ceiling
        details["design_rank_ok"] = rank_c >= design.ceiling
        details["dimension_from_rank"] = ell * n - rank_c
    print_step("sg", n=n, ell=ell, rows=A_C.m, rank=measured)
    report = BoundReport(
        name="sg",
        bound=4 * ell / delta - 1,
        bound_int=bound,
        measured=measured,
        relation="<=",
        hypotheses={
            "trivial_intersections": not bad,
            "delta_partners": not short,
            "dependency_design": cert.passed,
        },
        details=details,
        certificate=cert.to_dict(),
    )
    return SGMatrices(A_V, A_C, report)
