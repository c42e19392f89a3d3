"""
(q, k, t)-designs of block matrices and the rank bounds they imply.

A block matrix A in M_{m,n}(r,c) is a (q, k, t)-design when every row has at
most q nonzero blocks, every column holds at least k nonzero blocks forming a
well-spread set, and any two columns share nonzero blocks in at most t rows.
A set of s blocks A_1..A_s in M(r,c) is well-spread when
sum_i dim(A_i V) >= (r s / c) dim V for every subspace V of C^c.
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from blockmat import (
    BlockMatrix,
    ensure_hermitian,
    flatten,
    numerical_rank,
    row_normalize,
    support,
)
from bound_report import BoundReport
from config import (
    DEFAULT_DS_TOL,
    DEFAULT_ENUMERATION_CAP,
    DEFAULT_HEURISTIC_SAMPLES,
    DEFAULT_MAX_ITER,
    DEFAULT_RANK_RTOL,
    DEFAULT_SEED,
)
from console import print_step, warn
from errors import CertificateMismatch, InvalidArgument, InvalidMode
from scaling import sinkhorn_scale

SPAN_TOL = 1e-8
IMAGE_RTOL = 1e-9
CEIL_EPS = 1e-9


class WellSpreadMode(str, Enum):
    SQUARE = "square"
    KERNEL_LINE = "kernel-line"
    COVECTOR = "covector"
    PARTITION = "partition"
    HEURISTIC = "heuristic"

    @classmethod
    def parse(cls, value) -> "WellSpreadMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for mode in cls:
            if mode.value == key:
                return mode
        raise InvalidArgument(
            f"unknown well-spread mode {value!r}; choose from {', '.join(m.value for m in cls)}"
        )


@dataclass(frozen=True)
class DesignParams:
    q: int
    k: int
    t: int

    def __post_init__(self):
        for name in ("q", "k", "t"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidArgument(f"design parameter {name} must be a positive integer, got {value!r}")

    def to_dict(self) -> Dict[str, int]:
        return {"q": int(self.q), "k": int(self.k), "t": int(self.t)}


@dataclass
class WellSpreadCertificate:
    """
    Outcome of a well-spread check on a set of blocks.

    On failure violating_subspace is a c x l matrix whose columns span a V
    with sum_i dim(A_i V) < (r s / c) dim V; lhs and rhs are the two sides.
    """

    mode: WellSpreadMode
    requested_mode: WellSpreadMode
    passed: bool
    exhaustive: bool
    size: int
    witness: Dict[str, Any] = field(default_factory=dict)
    violating_subspace: Optional[np.ndarray] = None
    lhs: Optional[float] = None
    rhs: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "requested_mode": self.requested_mode.value,
            "passed": self.passed,
            "exhaustive": self.exhaustive,
            "size": self.size,
            "witness": self.witness,
            "violating_subspace": self.violating_subspace,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


# ---------------------------------------------------------------------------
# Subspace helpers
# ---------------------------------------------------------------------------

def image_dimensions(blocks: np.ndarray, V: np.ndarray) -> np.ndarray:
    """dim(A_i V) for every block, thresholded at 1e-9 times ||A_i||_2."""
    blocks = np.asarray(blocks, dtype=np.complex128)
    V = np.asarray(V, dtype=np.complex128)
    if blocks.shape[0] == 0 or V.shape[1] == 0:
        return np.zeros(blocks.shape[0], dtype=int)
    prods = blocks @ V
    sv = np.linalg.svd(prods, compute_uv=False)
    norms = np.linalg.norm(blocks, ord=2, axis=(1, 2))
    thr = IMAGE_RTOL * norms
    dims = np.sum(sv > thr[:, None], axis=1)
    dims[norms == 0] = 0
    return dims.astype(int)


def witness_margin(blocks: np.ndarray, V: np.ndarray) -> Tuple[float, float]:
    blocks = np.asarray(blocks)
    s, r, c = blocks.shape
    lhs = float(np.sum(image_dimensions(blocks, V)))
    rhs = r * s * V.shape[1] / c
    return lhs, rhs


def _orth_rows(vectors: np.ndarray) -> np.ndarray:
    _, s, vh = np.linalg.svd(vectors, full_matrices=False)
    rank = int(np.count_nonzero(s > SPAN_TOL * max(s[0], np.finfo(float).tiny))) if s.size else 0
    return vh[:rank]


def _in_span(W: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Boolean mask of the rows of W lying in the row span of orthonormal Q."""
    proj = (W @ Q.conj().T) @ Q
    res = np.linalg.norm(W - proj, axis=1)
    return res <= SPAN_TOL * np.maximum(np.linalg.norm(W, axis=1), np.finfo(float).tiny)


def _cluster_directions(W: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[List[int]]]:
    """Group rows of W by the line they span; returns unit representatives and multiplicities."""
    reps: List[np.ndarray] = []
    members: List[List[int]] = []
    for idx, w in enumerate(W):
        u = w / np.linalg.norm(w)
        for pos, rep in enumerate(reps):
            if np.linalg.norm(u - np.vdot(rep, u) * rep) <= SPAN_TOL:
                members[pos].append(idx)
                break
        else:
            reps.append(u)
            members.append([idx])
    rep_arr = np.array(reps) if reps else np.zeros((0, W.shape[1]), dtype=np.complex128)
    mults = np.array([len(m) for m in members], dtype=int)
    return rep_arr, mults, members


def _subset_count(p: int, c: int) -> int:
    return sum(math.comb(p, u) for u in range(1, min(c - 1, p) + 1))


def _span_enumeration(reps: np.ndarray, mults: np.ndarray, base_count: int,
                      s: int, c: int) -> Tuple[Optional[Tuple[int, np.ndarray, int]], Dict[int, int]]:
    """
    Enumerate spans U of 1..c-1 representatives and look for one holding more
    than s*dim(U)/c of the vectors (zero vectors counted via base_count).

    Returns the first violation (dim, orthonormal rows of U, count) or None,
    and the largest count seen per dimension.
    """
    p = reps.shape[0]
    best: Dict[int, int] = {}
    for u in range(1, min(c - 1, p) + 1):
        for combo in itertools.combinations(range(p), u):
            Q = _orth_rows(reps[list(combo)])
            if Q.shape[0] != u:
                continue
            count = base_count + int(np.sum(mults[_in_span(reps, Q)]))
            best[u] = max(best.get(u, 0), count)
            if count * c > s * u:
                return (u, Q, count), best
    return None, best


# ---------------------------------------------------------------------------
# Mode checks
# ---------------------------------------------------------------------------

def _check_square(blocks: np.ndarray, requested: WellSpreadMode) -> WellSpreadCertificate:
    s, r, c = blocks.shape
    if r != c:
        raise InvalidMode(f"square mode needs square blocks, got {r}x{c}")
    for i in range(s):
        if numerical_rank(blocks[i]) < c:
            V = null_space(blocks[i], rcond=IMAGE_RTOL)[:, :1]
            if V.shape[1] == 0:
                V = np.eye(c, 1, dtype=np.complex128)
            lhs, rhs = witness_margin(blocks, V)
            return WellSpreadCertificate(WellSpreadMode.SQUARE, requested, False, True, s,
                                         {"singular_block": i}, V, lhs, rhs)
    return WellSpreadCertificate(WellSpreadMode.SQUARE, requested, True, True, s,
                                 {"nonsingular_blocks": s})


def _check_kernel_line(blocks: np.ndarray, requested: WellSpreadMode,
                       enumeration_cap: int, seed: int, samples: int) -> WellSpreadCertificate:
    s, r, c = blocks.shape
    if r != c - 1:
        raise InvalidMode(f"kernel-line mode needs (c-1) x c blocks, got {r}x{c}")
    deficient = [i for i in range(s) if numerical_rank(blocks[i]) != c - 1]
    if deficient:
        return WellSpreadCertificate(WellSpreadMode.KERNEL_LINE, requested, False, True, s,
                                     {"rank_deficient_blocks": deficient})
    kernels = [np.linalg.svd(blocks[i])[2][-1].conj() for i in range(s)]
    reps, mults, _ = _cluster_directions(np.array(kernels))
    if _subset_count(reps.shape[0], c) > enumeration_cap:
        warn(f"kernel-line enumeration exceeds {enumeration_cap} subsets; falling back to heuristic")
        return _check_heuristic(blocks, requested, seed, samples)
    violation, best = _span_enumeration(reps, mults, 0, s, c)
    witness = {"distinct_kernels": int(reps.shape[0]), "max_share": best}
    if violation is None:
        return WellSpreadCertificate(WellSpreadMode.KERNEL_LINE, requested, True, True, s, witness)
    u, Q, count = violation
    V = Q.T.copy()
    lhs, rhs = witness_margin(blocks, V)
    witness.update({"dimension": u, "kernels_inside": count})
    return WellSpreadCertificate(WellSpreadMode.KERNEL_LINE, requested, False, True, s,
                                 witness, V, lhs, rhs)


def _check_covector(blocks: np.ndarray, requested: WellSpreadMode,
                    enumeration_cap: int, seed: int, samples: int) -> WellSpreadCertificate:
    s, r, c = blocks.shape
    if r != 1:
        raise InvalidMode(f"covector mode needs 1 x c blocks, got {r}x{c}")
    a = blocks[:, 0, :]
    norms = np.linalg.norm(a, axis=1)
    scale = norms.max() if s else 0.0
    zero = norms <= 1e-12 * scale if scale > 0 else np.ones(s, dtype=bool)
    z = int(np.count_nonzero(zero))
    if z > 0:
        V = np.eye(c, dtype=np.complex128)
        lhs, rhs = witness_margin(blocks, V)
        return WellSpreadCertificate(WellSpreadMode.COVECTOR, requested, False, True, s,
                                     {"zero_covectors": np.flatnonzero(zero).tolist()}, V, lhs, rhs)
    reps, mults, _ = _cluster_directions(a)
    if _subset_count(reps.shape[0], c) > enumeration_cap:
        warn(f"covector enumeration exceeds {enumeration_cap} subsets; falling back to heuristic")
        return _check_heuristic(blocks, requested, seed, samples)
    violation, best = _span_enumeration(reps, mults, z, s, c)
    witness = {"distinct_covectors": int(reps.shape[0]), "max_share": best}
    if violation is None:
        return WellSpreadCertificate(WellSpreadMode.COVECTOR, requested, True, True, s, witness)
    u, Q, count = violation
    vh = np.linalg.svd(Q, full_matrices=True)[2]
    V = vh[u:].conj().T
    lhs, rhs = witness_margin(blocks, V)
    witness.update({"annihilator_dimension": u, "covectors_inside": count})
    return WellSpreadCertificate(WellSpreadMode.COVECTOR, requested, False, True, s,
                                 witness, V, lhs, rhs)


def greedy_basis_partition(blocks: Sequence[np.ndarray], group_size: int
                           ) -> Tuple[List[List[int]], List[int]]:
    """
    Greedily cut blocks into groups of group_size whose stack is invertible.

    A block joins the current group when it raises the rank of the stack.
    Returns the completed groups and the indices left over.
    """
    blocks = [np.asarray(b) for b in blocks]
    pool = list(range(len(blocks)))
    groups: List[List[int]] = []
    while len(pool) >= group_size:
        group: List[int] = []
        stacked = None
        for idx in pool:
            cand = blocks[idx] if stacked is None else np.vstack([stacked, blocks[idx]])
            if numerical_rank(cand) == cand.shape[0]:
                group.append(idx)
                stacked = cand
                if len(group) == group_size:
                    break
        if len(group) < group_size:
            break
        groups.append(group)
        taken = set(group)
        pool = [i for i in pool if i not in taken]
    return groups, pool


def _check_partition(blocks: np.ndarray, requested: WellSpreadMode, enumeration_cap: int,
                     seed: int, samples: int) -> WellSpreadCertificate:
    s, r, c = blocks.shape
    if c % r:
        raise InvalidMode(f"partition mode needs r to divide c, got {r}x{c}")
    g = c // r
    groups, leftover = greedy_basis_partition(list(blocks), g)
    if not leftover:
        return WellSpreadCertificate(WellSpreadMode.PARTITION, requested, True, True, s,
                                     {"group_size": g, "groups": groups})
    print_step("partition incomplete, using exact check", leftover=len(leftover))
    if r == 1:
        cert = _check_covector(blocks, requested, enumeration_cap, seed, samples)
    elif r == c - 1 and all(numerical_rank(b) == r for b in blocks):
        cert = _check_kernel_line(blocks, requested, enumeration_cap, seed, samples)
    elif r == c:
        cert = _check_square(blocks, requested)
    else:
        cert = _check_heuristic(blocks, requested, seed, samples)
    cert.witness["partition_groups"] = groups
    cert.witness["partition_leftover"] = leftover
    return cert


def _check_heuristic(blocks: np.ndarray, requested: WellSpreadMode, seed: int,
                     samples: int) -> WellSpreadCertificate:
    s, r, c = blocks.shape
    rng = np.random.default_rng(seed)
    candidates: List[np.ndarray] = [np.eye(c, dtype=np.complex128)]
    kernels = []
    for b in blocks:
        K = null_space(b, rcond=IMAGE_RTOL)
        if 0 < K.shape[1] < c:
            candidates.append(K)
        kernels.append(K)
    for i, j in itertools.combinations(range(s), 2):
        Ki, Kj = kernels[i], kernels[j]
        if Ki.shape[1] and Kj.shape[1]:
            rows = _orth_rows(np.hstack([Ki, Kj]).T)
            if 0 < rows.shape[0] < c:
                candidates.append(rows.T.copy())
        inter = null_space(np.vstack([blocks[i], blocks[j]]), rcond=IMAGE_RTOL)
        if 0 < inter.shape[1] < c:
            candidates.append(inter)
    for _ in range(samples):
        ell = int(rng.integers(1, c + 1))
        G = rng.standard_normal((c, ell)) + 1j * rng.standard_normal((c, ell))
        candidates.append(np.linalg.qr(G)[0])

    min_margin = math.inf
    for V in candidates:
        lhs, rhs = witness_margin(blocks, V)
        min_margin = min(min_margin, lhs - rhs)
        if lhs < rhs - 1e-9:
            return WellSpreadCertificate(WellSpreadMode.HEURISTIC, requested, False, False, s,
                                         {"candidates_tested": len(candidates)}, V, lhs, rhs)
    return WellSpreadCertificate(WellSpreadMode.HEURISTIC, requested, True, False, s,
                                 {"candidates_tested": len(candidates), "min_margin": min_margin})


def check_well_spread(blocks, mode, seed: int = DEFAULT_SEED,
                      samples: int = DEFAULT_HEURISTIC_SAMPLES,
                      enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> WellSpreadCertificate:
    """
    Decide whether a set of r x c blocks is well-spread.

    Args:
        blocks: Sequence or (s, r, c) array of blocks
        mode: A WellSpreadMode or its name
        seed: Seed for the heuristic sampler
        samples: Number of random subspaces the heuristic tries
        enumeration_cap: Exact modes fall back to the heuristic above this many subsets

    Returns:
        A WellSpreadCertificate; heuristic passes are marked non-exhaustive
    """
    mode = WellSpreadMode.parse(mode)
    arr = np.asarray(blocks, dtype=np.complex128)
    if arr.ndim != 3:
        if arr.size == 0:
            return WellSpreadCertificate(mode, mode, True, True, 0)
        raise InvalidArgument(f"blocks must stack to shape (s, r, c), got {arr.shape}")
    if arr.shape[0] == 0:
        return WellSpreadCertificate(mode, mode, True, True, 0)
    if mode is WellSpreadMode.SQUARE:
        return _check_square(arr, mode)
    if mode is WellSpreadMode.KERNEL_LINE:
        return _check_kernel_line(arr, mode, enumeration_cap, seed, samples)
    if mode is WellSpreadMode.COVECTOR:
        return _check_covector(arr, mode, enumeration_cap, seed, samples)
    if mode is WellSpreadMode.PARTITION:
        return _check_partition(arr, mode, enumeration_cap, seed, samples)
    return _check_heuristic(arr, mode, seed, samples)


# ---------------------------------------------------------------------------
# Design verification
# ---------------------------------------------------------------------------

@dataclass
class ColumnEvidence:
    column: int
    nonzero_rows: List[int]
    selected_rows: List[int]
    certificate: WellSpreadCertificate

    @property
    def k_certified(self) -> int:
        return len(self.selected_rows)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "column": self.column,
            "nonzero_rows": self.nonzero_rows,
            "selected_rows": self.selected_rows,
            "k_certified": self.k_certified,
            "certificate": self.certificate.to_dict(),
        }


@dataclass
class DesignCertificate:
    params: DesignParams
    mode: WellSpreadMode
    q_actual: int
    k_actual: int
    t_actual: int
    columns: List[ColumnEvidence]
    exhaustive: bool = True

    @property
    def row_ok(self) -> bool:
        return self.q_actual <= self.params.q

    @property
    def column_ok(self) -> bool:
        return self.k_actual >= self.params.k

    @property
    def intersection_ok(self) -> bool:
        return self.t_actual <= self.params.t

    @property
    def passed(self) -> bool:
        return self.row_ok and self.column_ok and self.intersection_ok

    def failing_columns(self) -> List[int]:
        return [col.column for col in self.columns if col.k_certified < self.params.k]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "mode": self.mode.value,
            "passed": self.passed,
            "exhaustive": self.exhaustive,
            "actual": {"q": self.q_actual, "k": self.k_actual, "t": self.t_actual},
            "row_ok": self.row_ok,
            "column_ok": self.column_ok,
            "intersection_ok": self.intersection_ok,
            "failing_columns": self.failing_columns(),
            "columns": [col.to_dict() for col in self.columns],
        }


def _select_well_spread(blocks: np.ndarray, rows: List[int], mode: WellSpreadMode,
                        seed: int, samples: int, enumeration_cap: int
                        ) -> Tuple[List[int], WellSpreadCertificate]:
    """Largest well-spread subset found among one column's nonzero blocks."""
    kwargs = dict(seed=seed, samples=samples, enumeration_cap=enumeration_cap)
    if mode is WellSpreadMode.SQUARE:
        selected = [i for i in rows if numerical_rank(blocks[i]) == blocks.shape[2]]
        return selected, check_well_spread(blocks[selected], mode, **kwargs)
    if mode is WellSpreadMode.PARTITION:
        r, c = blocks.shape[1:]
        if c % r:
            raise InvalidMode(f"partition mode needs r to divide c, got {r}x{c}")
        groups, _ = greedy_basis_partition([blocks[i] for i in rows], c // r)
        selected = [rows[p] for g in groups for p in g]
        return selected, check_well_spread(blocks[selected], mode, **kwargs)

    current = list(rows)
    if mode is WellSpreadMode.KERNEL_LINE:
        current = [i for i in rows if numerical_rank(blocks[i]) == blocks.shape[2] - 1]
    while True:
        cert = check_well_spread(blocks[current], mode, **kwargs)
        if cert.passed or cert.violating_subspace is None:
            return (current if cert.passed else []), cert
        dims = image_dimensions(blocks[current], cert.violating_subspace)
        # drop the block most deficient on the witness, latest row on ties
        worst = min(range(len(current)), key=lambda p: (dims[p], -p))
        current.pop(worst)


def verify_design(A: BlockMatrix, params: DesignParams, mode,
                  seed: int = DEFAULT_SEED, samples: int = DEFAULT_HEURISTIC_SAMPLES,
                  enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> DesignCertificate:
    """
    Certify that A is a (q, k, t)-design.

    q and t are measured from the support; for every column the largest
    well-spread subset of its nonzero blocks that the mode can find is
    recorded, and k' is the smallest such subset over all columns.
    """
    mode = WellSpreadMode.parse(mode)
    sup = support(A)
    q_actual = int(sup.sum(axis=1).max())
    overlap = sup.T.astype(int) @ sup.astype(int)
    np.fill_diagonal(overlap, 0)
    t_actual = int(overlap.max()) if A.n > 1 else 0

    columns = []
    exhaustive = True
    for j in range(A.n):
        rows = np.flatnonzero(sup[:, j]).tolist()
        selected, cert = _select_well_spread(A.blocks[:, j], rows, mode,
                                             seed, samples, enumeration_cap)
        if mode is not WellSpreadMode.PARTITION:
            selected = sorted(selected)
        exhaustive = exhaustive and cert.exhaustive
        columns.append(ColumnEvidence(j, rows, selected, cert))
    k_actual = min(col.k_certified for col in columns)
    print_step("design verified", q=q_actual, k=k_actual, t=t_actual)
    return DesignCertificate(params, mode, q_actual, k_actual, t_actual, columns, exhaustive)


def _choose_k_rows(blocks: np.ndarray, selected: List[int], k: int, mode: WellSpreadMode,
                   seed: int, samples: int, enumeration_cap: int) -> List[int]:
    kwargs = dict(seed=seed, samples=samples, enumeration_cap=enumeration_cap)
    first = selected[:k]
    if check_well_spread(blocks[first], mode, **kwargs).passed:
        return sorted(first)
    current = list(selected)
    while len(current) > k:
        for p in reversed(range(len(current))):
            trial = current[:p] + current[p + 1:]
            if check_well_spread(blocks[trial], mode, **kwargs).passed:
                current = trial
                break
        else:
            raise CertificateMismatch(f"no well-spread subset of size {k} found among rows {selected}")
    return sorted(current)


def regularize_rows(A: BlockMatrix, params: DesignParams, mode,
                    certificate: Optional[DesignCertificate] = None,
                    seed: int = DEFAULT_SEED, samples: int = DEFAULT_HEURISTIC_SAMPLES,
                    enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> List[List[int]]:
    """For every column, k rows whose blocks in that column are well-spread."""
    mode = WellSpreadMode.parse(mode)
    if certificate is None:
        certificate = verify_design(A, params, mode, seed, samples, enumeration_cap)
    if not certificate.passed:
        raise CertificateMismatch(
            f"A is not a {params.q, params.k, params.t}-design "
            f"(certified q={certificate.q_actual}, k={certificate.k_actual}, t={certificate.t_actual})"
        )
    return [
        _choose_k_rows(A.blocks[:, col.column], col.selected_rows, params.k, mode,
                       seed, samples, enumeration_cap)
        for col in certificate.columns
    ]


def regularize(A: BlockMatrix, params: DesignParams, mode,
               certificate: Optional[DesignCertificate] = None,
               seed: int = DEFAULT_SEED, samples: int = DEFAULT_HEURISTIC_SAMPLES,
               enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> BlockMatrix:
    """
    Build the nk x n matrix B whose rows are copies of rows of A, k per column.

    Rows jk..(j+1)k-1 of B hold the k well-spread blocks chosen for column j;
    those rows may carry further nonzero blocks in other columns. B is a
    (q, k, qt)-design and rank(B) <= rank(A).
    """
    rows = regularize_rows(A, params, mode, certificate, seed, samples, enumeration_cap)
    order = [i for chosen in rows for i in chosen]
    return BlockMatrix(A.blocks[order])


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

class RankBound(NamedTuple):
    value: float
    ceiling: int


def _ceil(x: float) -> int:
    return int(math.ceil(x - CEIL_EPS))


def _positive(name: str, value) -> float:
    if isinstance(value, bool) or not np.isfinite(value) or value <= 0:
        raise InvalidArgument(f"{name} must be positive, got {value!r}")
    return float(value)


def rank_lower_bound(q, k, t, r, c, n) -> RankBound:
    """cn - cn / (1 + X) with X = k r / (c t (q - 1))."""
    q, k, t, r, c, n = (_positive(name, v) for name, v in
                        zip(("q", "k", "t", "r", "c", "n"), (q, k, t, r, c, n)))
    if q <= 1:
        raise InvalidArgument("q must be at least 2 for the design rank bound")
    X = k * r / (c * t * (q - 1))
    value = c * n - c * n / (1 + X)
    return RankBound(value, _ceil(value))


def scaled_design_rank_bound(m, n, r, c, q, t) -> RankBound:
    """Rank bound for a doubly stochastic (q, ., t) matrix: X = m r q / (c n t (q - 1))."""
    m, n, r, c, q, t = (_positive(name, v) for name, v in
                        zip(("m", "n", "r", "c", "q", "t"), (m, n, r, c, q, t)))
    if q <= 1:
        raise InvalidArgument("q must be at least 2 for the design rank bound")
    X = m * r * q / (c * n * t * (q - 1))
    value = c * n - c * n / (1 + X)
    return RankBound(value, _ceil(value))


class DiagonalDominance(NamedTuple):
    L: float
    S: float
    bound: float


def diag_dominant_bound(H) -> DiagonalDominance:
    """
    rank(H) >= L^2 n^2 / (n L^2 + S) for Hermitian H with diagonal >= L > 0,
    where S is the squared Frobenius norm of the off-diagonal part.
    """
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] == 0:
        raise InvalidArgument(f"H must be a nonempty square matrix, got shape {H.shape}")
    H = ensure_hermitian(H, tol=1e-10)
    diag = np.real(np.diag(H))
    if np.any(diag <= 0):
        raise InvalidArgument("diagonal entries of H must be positive")
    n = H.shape[0]
    L = float(diag.min())
    off = H - np.diag(np.diag(H))
    S = float(np.sum(np.abs(off) ** 2))
    return DiagonalDominance(L, S, L * L * n * n / (n * L * L + S))


def row_cross_energy(blocks) -> float:
    """sum over i != j of ||C_i^* C_j||_F^2 for the given blocks of one row."""
    C = np.asarray(blocks, dtype=np.complex128)
    if C.shape[0] == 0:
        return 0.0
    G = np.einsum("iba,jbc->ijac", C.conj(), C)
    total = np.sum(np.abs(G) ** 2)
    diag = sum(np.sum(np.abs(G[i, i]) ** 2) for i in range(C.shape[0]))
    return float(total - diag)


def block_cauchy_schwarz(blocks) -> Tuple[float, float]:
    """(||sum_i A_i||^2, t * sum_i ||A_i||^2) for t blocks."""
    A = np.asarray(blocks, dtype=np.complex128)
    lhs = float(np.sum(np.abs(A.sum(axis=0)) ** 2))
    rhs = float(A.shape[0] * np.sum(np.abs(A) ** 2))
    return lhs, rhs


def _scaled_analysis(A: BlockMatrix, params: DesignParams, mode: WellSpreadMode,
                     cert: DesignCertificate, tol: float, max_iter: int,
                     seed: int, samples: int, rank_rtol: float) -> Dict[str, Any]:
    B = regularize(A, params, mode, certificate=cert, seed=seed, samples=samples)
    state, rep = sinkhorn_scale(B, tol=tol, max_iter=max_iter)
    out: Dict[str, Any] = {"regularized_shape": list(B.shape), "scaling": rep.to_dict()}
    if not rep.converged:
        out["converged"] = False
        return out
    M = row_normalize(state.current).matrix
    F = flatten(M)
    H = F.conj().T @ F
    dd = diag_dominant_bound(H)
    rank_h = numerical_rank(H, rtol=rank_rtol)
    formula = scaled_design_rank_bound(B.m, B.n, B.r, B.c, params.q, params.t * params.q)
    sup = support(M)
    cross = max(row_cross_energy(M.blocks[i, sup[i]]) for i in range(M.m))
    out.update({
        "converged": True,
        "L": dd.L,
        "S": dd.S,
        "dominance_bound": dd.bound,
        "rank_H": rank_h,
        "dominance_ok": rank_h >= _ceil(dd.bound - 1e-6),
        "scaled_formula_bound": formula.value,
        "max_row_cross_energy": cross,
        "row_cross_limit": B.r * (1 - 1 / params.q),
    })
    return out


def design_rank_check(A: BlockMatrix, params: DesignParams, mode, scale: bool = False,
                      tol: float = DEFAULT_DS_TOL, max_iter: int = DEFAULT_MAX_ITER,
                      rank_rtol: float = DEFAULT_RANK_RTOL, seed: int = DEFAULT_SEED,
                      samples: int = DEFAULT_HEURISTIC_SAMPLES,
                      enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> BoundReport:
    """
    Verify that A is a (q, k, t)-design and compare its measured rank with
    the design rank lower bound.

    With scale=True the regularized matrix is also scaled and the
    diagonal-dominance bound of its Gram matrix is reported.
    """
    mode = WellSpreadMode.parse(mode)
    cert = verify_design(A, params, mode, seed, samples, enumeration_cap)
    bound = rank_lower_bound(params.q, params.k, params.t, A.r, A.c, A.n)
    measured = numerical_rank(flatten(A), rtol=rank_rtol)
    details: Dict[str, Any] = {
        "certified": {"q": cert.q_actual, "k": cert.k_actual, "t": cert.t_actual},
        "exhaustive": cert.exhaustive,
    }
    if cert.q_actual >= 2 and cert.k_actual >= 1:
        actual = rank_lower_bound(cert.q_actual, cert.k_actual, max(cert.t_actual, 1), A.r, A.c, A.n)
        details["certified_bound"] = actual.value
    if scale and cert.passed:
        details["scaled"] = _scaled_analysis(A, params, mode, cert, tol, max_iter,
                                             seed, samples, rank_rtol)
    return BoundReport(
        name="design-rank",
        bound=bound.value,
        bound_int=bound.ceiling,
        measured=measured,
        relation=">=",
        hypotheses={
            "rows_at_most_q": cert.row_ok,
            "columns_well_spread_k": cert.column_ok,
            "column_overlap_at_most_t": cert.intersection_ok,
        },
        details=details,
        certificate=cert.to_dict(),
    )
