"""
Incidence bounds for lines and low-degree curves.

A set of lines in which every line meets at least k others, at no point
more than k/2 of them, spans an affine space of dimension at most
floor(4n/(k+2)) - 1. Curves of degree at most r meeting under the analogous
condition span at most 2(r+1)^4 n / k dimensions. Both bounds are certified
by building the block matrix of incidence relations, which annihilates the
matrix of spanning vectors, and checking it is a design.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from blockmat import BlockMatrix, flatten, numerical_rank
from bound_report import BoundReport
from config import DEFAULT_RANK_RTOL, DEFAULT_SEED
from console import print_step, warn
from design import (
    DesignParams,
    WellSpreadMode,
    greedy_basis_partition,
    rank_lower_bound,
    verify_design,
)
from errors import (
    DegeneratePair,
    HypothesisFailure,
    InvalidArgument,
    NumericalFailure,
)

PAIR_RTOL = 1e-9
CURVE_TOL = 1e-8


def _crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


# ---------------------------------------------------------------------------
# Lines
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LineSet:
    """n lines p_i + C u_i in C^d."""

    points: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=np.complex128)
        u = np.array(self.directions, dtype=np.complex128)
        if p.ndim != 2 or p.shape != u.shape or p.shape[0] < 1 or p.shape[1] < 1:
            raise InvalidArgument(f"points and directions must share a shape (n, d), got {p.shape} and {u.shape}")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(u))):
            raise InvalidArgument("lines contain non-finite coordinates")
        zero = np.flatnonzero(np.linalg.norm(u, axis=1) == 0)
        if zero.size:
            raise InvalidArgument(f"line {int(zero[0])} has a zero direction")
        p.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "directions", u)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def subspace_bases(self, homogeneous: bool = False) -> np.ndarray:
        """
        (n, 2, D) bases: span{p_i, u_i} in C^d when homogeneous, otherwise
        the lifted span{(p_i, 1), (u_i, 0)} in C^{d+1}.
        """
        if homogeneous:
            return np.stack([self.points, self.directions], axis=1)
        one = np.ones((self.n, 1), dtype=np.complex128)
        zero = np.zeros((self.n, 1), dtype=np.complex128)
        return np.stack([np.hstack([self.points, one]), np.hstack([self.directions, zero])], axis=1)

    def induced_subspaces(self) -> "LineSet":
        """The lines as 2-dimensional linear subspaces of C^{d+1}, stored homogeneously."""
        b = self.subspace_bases(homogeneous=False)
        return LineSet(b[:, 0], b[:, 1])


def slice_with_hyperplane(L: LineSet, seed: int = DEFAULT_SEED) -> LineSet:
    """
    Intersect the 2-dimensional subspaces span{p_i, u_i} with a random
    affine hyperplane h.x = 1, giving affine lines of C^d.
    """
    rng = np.random.default_rng(seed)
    h = _crandn(rng, L.d)
    points, dirs = [], []
    for a, b in zip(L.points, L.directions):
        ha, hb = h @ a, h @ b
        if abs(ha) < abs(hb):
            a, b, ha, hb = b, a, hb, ha
        if abs(ha) < 1e-12 * max(np.linalg.norm(a), 1.0):
            raise DegeneratePair("subspace lies in the slicing hyperplane's direction")
        points.append(a / ha)
        dirs.append(b - (hb / ha) * a)
    return LineSet(np.array(points), np.array(dirs))


def pair_relation(Bi: np.ndarray, Bj: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    The coefficients (a_i, b_i), (a_j, b_j) of the relation
    a_i u_i + b_i v_i + a_j u_j + b_j v_j = 0 between two 2-dimensional
    subspaces, or None when they intersect trivially.
    """
    M = np.vstack([Bi, Bj]).T
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    sig = np.zeros(4)
    sig[:s.size] = s
    rank = int(np.count_nonzero(sig > PAIR_RTOL * sig[0]))
    if rank <= 2:
        raise DegeneratePair("two lines coincide")
    if rank == 4:
        return None
    kernel = vh[-1].conj()
    xi, xj = kernel[:2], kernel[2:]
    if np.linalg.norm(xi) <= PAIR_RTOL or np.linalg.norm(xj) <= PAIR_RTOL:
        raise DegeneratePair("a line's spanning vectors are dependent")
    return xi, xj


def _parallel_groups(vectors: Sequence[np.ndarray]) -> List[List[int]]:
    groups: List[List[int]] = []
    reps: List[np.ndarray] = []
    for idx, v in enumerate(vectors):
        u = v / np.linalg.norm(v)
        for g, rep in enumerate(reps):
            if np.linalg.norm(u - np.vdot(rep, u) * rep) <= 1e-8:
                groups[g].append(idx)
                break
        else:
            reps.append(u)
            groups.append([idx])
    return groups


def _capped_mass(groups: Sequence[Sequence], cap: int) -> int:
    return sum(min(len(g), cap) for g in groups)


class LineAnalysis(NamedTuple):
    A_C: BlockMatrix
    A_V: np.ndarray
    report: BoundReport


def line_analysis(L: LineSet, homogeneous: bool = False, k: Optional[int] = None,
                  rank_rtol: float = DEFAULT_RANK_RTOL) -> LineAnalysis:
    """
    Certify the dimension bound for a set of lines.

    Every intersecting pair contributes one row of 1 x 2 blocks holding its
    relation coefficients. Intersections at infinity count. In affine mode
    the bound and the measured rank both drop by one.
    """
    n = L.n
    bases = L.subspace_bases(homogeneous)
    rows: List[Tuple[int, int, np.ndarray, np.ndarray]] = []
    for i, j in itertools.combinations(range(n), 2):
        rel = pair_relation(bases[i], bases[j])
        if rel is not None:
            rows.append((i, j, rel[0], rel[1]))
    if not rows:
        raise HypothesisFailure("no two lines intersect")

    meets: List[List[np.ndarray]] = [[] for _ in range(n)]
    for i, j, xi, xj in rows:
        meets[i].append(xi)
        meets[j].append(xj)
    counts = np.array([len(m) for m in meets])
    k = int(counts.min()) if k is None else int(k)
    if k < 1:
        raise HypothesisFailure("some line meets no other line",
                                {"lines": np.flatnonzero(counts == 0).tolist()})
    short = np.flatnonzero(counts < k).tolist()
    crowded = [i for i in range(n) if _capped_mass(_parallel_groups(meets[i]), k // 2) < k]
    if short or crowded:
        raise HypothesisFailure(
            f"lines fail the incidence hypothesis with k={k}",
            {"fewer_than_k_meets": short, "too_many_meets_at_one_point": crowded},
        )

    blocks = np.zeros((len(rows), n, 1, 2), dtype=np.complex128)
    for row, (i, j, xi, xj) in enumerate(rows):
        blocks[row, i, 0] = xi
        blocks[row, j, 0] = xj
    A_C = BlockMatrix(blocks)
    A_V = bases.reshape(2 * n, bases.shape[2])
    F = flatten(A_C)
    orth = np.linalg.norm(F @ A_V)
    if orth > 1e-6 * max(np.linalg.norm(F) * np.linalg.norm(A_V), np.finfo(float).tiny):
        raise NumericalFailure(f"A_C A_V is not zero (norm {orth:.3e})")

    cert = verify_design(A_C, DesignParams(2, k, 1), WellSpreadMode.COVECTOR)
    shift = 0 if homogeneous else 1
    bound = 4 * n // (k + 2) - shift
    measured = numerical_rank(A_V, rtol=rank_rtol) - shift
    rank_c = numerical_rank(F, rtol=rank_rtol)
    design = rank_lower_bound(2, k, 1, 1, 2, n)
    print_step("lines", n=n, k=k, rows=len(rows), dimension=measured)
    report = BoundReport(
        name="lines",
        bound=4 * n / (k + 2) - shift,
        bound_int=bound,
        measured=measured,
        relation="<=",
        hypotheses={"incidence_design": cert.passed},
        details={
            "n": n, "k": k, "homogeneous": homogeneous,
            "intersecting_pairs": len(rows),
            "rank_A_C": rank_c,
            "design_rank_bound": design.ceiling,
            "design_rank_ok": rank_c >= design.ceiling,
        },
        certificate=cert.to_dict(),
    )
    return LineAnalysis(A_C, A_V, report)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CurveSet:
    """
    n polynomial curves t -> sum_m coeffs[i, m] t^m in C^d of degree at most r;
    coeffs has shape (n, r + 1, d).
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 2 or arr.shape[2] < 1:
            raise InvalidArgument(f"coeffs must have shape (n, r+1, d) with r >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("curve coefficients are not finite")
        for i in range(arr.shape[0]):
            scale = max(float(np.max(np.abs(arr[i]))), 1.0)
            if np.max(np.abs(arr[i, 1:])) <= 1e-14 * scale:
                raise InvalidArgument(f"curve {i} is constant")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def d(self) -> int:
        return self.coeffs.shape[2]

    @classmethod
    def from_lines(cls, L: LineSet) -> "CurveSet":
        return cls(np.stack([L.points, L.directions], axis=1))

    def gamma_matrix(self) -> np.ndarray:
        """The n(r+1) x d matrix of stacked coefficient vectors."""
        return self.coeffs.reshape(self.n * (self.degree + 1), self.d)


def curve_eval(coeffs: np.ndarray, t) -> np.ndarray:
    return P.polyval(t, np.asarray(coeffs))


def moment_vector(t, r: int) -> np.ndarray:
    return np.asarray(t, dtype=np.complex128) ** np.arange(r + 1)


@dataclass
class IncidenceRecord:
    """gamma_i(t) = gamma_j(t_prime); indices are zero-based."""

    i: int
    j: int
    t: complex
    t_prime: complex
    point: Optional[np.ndarray] = None
    residual: float = float("nan")

    def to_dict(self) -> Dict:
        return {"i": self.i, "j": self.j, "t": self.t, "t_prime": self.t_prime,
                "point": self.point, "residual": self.residual}


def _degree(p: np.ndarray) -> int:
    nz = np.flatnonzero(np.abs(p) > 1e-12 * max(np.max(np.abs(p)), np.finfo(float).tiny))
    return int(nz[-1]) if nz.size else -1


def _sylvester_det(p_coeffs: np.ndarray, q_coeffs: np.ndarray) -> Tuple[complex, float]:
    """Resultant of two polynomials given low-to-high, with the Hadamard bound of its matrix."""
    dp, dq = len(p_coeffs) - 1, len(q_coeffs) - 1
    size = dp + dq
    S = np.zeros((size, size), dtype=np.complex128)
    ph, qh = p_coeffs[::-1], q_coeffs[::-1]
    for row in range(dq):
        S[row, row:row + dp + 1] = ph
    for row in range(dp):
        S[dq + row, row:row + dq + 1] = qh
    return np.linalg.det(S), float(np.prod(np.linalg.norm(S, axis=1)))


def _resultant_coefficients(Pi, Pj, Qi, Qj, deg_p: int, deg_q: int) -> Optional[np.ndarray]:
    """
    Coefficients in t of Res_{t'}(Pi(t) - Pj(t'), Qi(t) - Qj(t')), recovered
    from values on roots of unity. None when identically zero.
    """
    D = deg_q * _degree(Pi) + deg_p * _degree(Qi)
    N = D + 1
    ts = np.exp(2j * np.pi * np.arange(N) / N)
    values = np.zeros(N, dtype=np.complex128)
    hadamard = 0.0
    for idx, t in enumerate(ts):
        p = -Pj[:deg_p + 1].astype(np.complex128)
        p[0] += P.polyval(t, Pi)
        q = -Qj[:deg_q + 1].astype(np.complex128)
        q[0] += P.polyval(t, Qi)
        values[idx], h = _sylvester_det(p, q)
        hadamard = max(hadamard, h)
    coeffs = np.fft.fft(values) / N
    if np.max(np.abs(coeffs)) <= 1e-10 * max(hadamard, np.finfo(float).tiny):
        return None
    top = np.max(np.abs(coeffs))
    while len(coeffs) > 1 and abs(coeffs[-1]) <= 1e-10 * top:
        coeffs = coeffs[:-1]
    return coeffs


def _refine(gi: np.ndarray, gj: np.ndarray, t: complex, tp: complex, iters: int = 8):
    di, dj = P.polyder(gi, axis=0), P.polyder(gj, axis=0)
    for _ in range(iters):
        F = curve_eval(gi, t) - curve_eval(gj, tp)
        J = np.stack([curve_eval(di, t), -curve_eval(dj, tp)], axis=1)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        t, tp = t + step[0], tp + step[1]
        if np.linalg.norm(step) < 1e-15 * (1 + abs(t) + abs(tp)):
            break
    return complex(t), complex(tp)


def _projections(d: int, seed: int) -> List[np.ndarray]:
    out = []
    for a, b in itertools.combinations(range(d), 2):
        proj = np.zeros((d, 2), dtype=np.complex128)
        proj[a, 0] = proj[b, 1] = 1
        out.append(proj)
    rng = np.random.default_rng(seed)
    out.extend(_crandn(rng, d, 2) for _ in range(3))
    return out


def curve_intersections(gi: np.ndarray, gj: np.ndarray, i: int = 0, j: int = 1,
                        tol: float = CURVE_TOL, seed: int = DEFAULT_SEED) -> List[IncidenceRecord]:
    """
    All parameter pairs (t, t') with gamma_i(t) = gamma_j(t').

    Both curves are projected to the plane; the resultant in t' of the
    projected system is a polynomial in t whose roots give the candidate t,
    and every candidate is refined against all coordinates.
    """
    gi = np.asarray(gi, dtype=np.complex128)
    gj = np.asarray(gj, dtype=np.complex128)
    r = max(gi.shape[0], gj.shape[0]) - 1
    d = gi.shape[1]
    if d == 1:
        gi = np.hstack([gi, np.zeros_like(gi)])
        gj = np.hstack([gj, np.zeros_like(gj)])
        d = 2
    zero_hits = 0
    for proj in _projections(d, seed):
        Pi, Qi = (gi @ proj).T
        Pj, Qj = (gj @ proj).T
        deg_p, deg_q = _degree(Pj), _degree(Qj)
        if min(deg_p, deg_q, _degree(Pi), _degree(Qi)) < 1:
            continue
        coeffs = _resultant_coefficients(Pi, Pj, Qi, Qj, deg_p, deg_q)
        if coeffs is None:
            zero_hits += 1
            continue
        records = _solve_from_resultant(gi, gj, Pi, Pj, deg_p, coeffs, i, j, tol)
        distinct = _distinct_points([rec.point for rec in records], tol)
        if distinct > r * r:
            raise NumericalFailure(
                f"curves {i} and {j} meet in {distinct} points, more than the degree allows"
            )
        if zero_hits:
            warn(f"curves {i} and {j}: resultant vanished on {zero_hits} projection(s), used another")
        return records
    if zero_hits:
        raise InvalidArgument(f"curves {i} and {j} share a component")
    return []


def _solve_from_resultant(gi, gj, Pi, Pj, deg_p, coeffs, i, j, tol) -> List[IncidenceRecord]:
    roots = P.polyroots(coeffs) if len(coeffs) > 1 else np.zeros(0)
    records: List[IncidenceRecord] = []
    for t0 in roots:
        p = -Pj[:deg_p + 1].astype(np.complex128)
        p[0] += P.polyval(t0, Pi)
        for tp0 in P.polyroots(p):
            t, tp = _refine(gi, gj, t0, tp0)
            xi = curve_eval(gi, t)
            res = float(np.linalg.norm(xi - curve_eval(gj, tp)))
            scale = max(1.0, float(np.max(np.abs(xi))))
            if res > tol * scale:
                continue
            if any(abs(t - rec.t) + abs(tp - rec.t_prime) <= 1e-6 * (1 + abs(t) + abs(tp))
                   for rec in records):
                continue
            records.append(IncidenceRecord(i, j, t, tp, xi, res / scale))
    records.sort(key=lambda rec: (rec.t.real, rec.t.imag, rec.t_prime.real, rec.t_prime.imag))
    return records


def _distinct_points(points: Sequence[np.ndarray], tol: float) -> int:
    reps: List[np.ndarray] = []
    for x in points:
        scale = max(1.0, float(np.max(np.abs(x))))
        if not any(np.linalg.norm(x - y) <= 1e-6 * scale for y in reps):
            reps.append(x)
    return len(reps)


def validate_incidence(curves: CurveSet, record: IncidenceRecord,
                       tol: float = CURVE_TOL) -> IncidenceRecord:
    """Check a user-supplied incidence and fill in its point and residual."""
    if not (0 <= record.i < curves.n and 0 <= record.j < curves.n) or record.i == record.j:
        raise InvalidArgument(f"incidence ({record.i}, {record.j}) does not name two distinct curves")
    xi = curve_eval(curves.coeffs[record.i], record.t)
    xj = curve_eval(curves.coeffs[record.j], record.t_prime)
    scale = max(1.0, float(np.max(np.abs(xi))))
    res = float(np.linalg.norm(xi - xj)) / scale
    if res > tol:
        raise InvalidArgument(
            f"curves {record.i} and {record.j} do not meet at t={record.t}, t'={record.t_prime} "
            f"(residual {res:.3e})"
        )
    return IncidenceRecord(record.i, record.j, complex(record.t), complex(record.t_prime), xi, res)


class CurveAnalysis(NamedTuple):
    A: BlockMatrix
    incidences: List[IncidenceRecord]
    report: BoundReport


def _parameter_groups(params: Sequence[complex]) -> List[List[int]]:
    groups: List[List[int]] = []
    reps: List[complex] = []
    for idx, t in enumerate(params):
        for g, s in enumerate(reps):
            if abs(t - s) <= 1e-6 * (1 + abs(t)):
                groups[g].append(idx)
                break
        else:
            reps.append(t)
            groups.append([idx])
    return groups


def curve_analysis(curves: CurveSet, incidences: Optional[Sequence[IncidenceRecord]] = None,
                   k: Optional[int] = None, rank_rtol: float = DEFAULT_RANK_RTOL,
                   tol: float = CURVE_TOL, seed: int = DEFAULT_SEED) -> CurveAnalysis:
    """
    Certify dim span(curves) <= 2 (r+1)^4 n / k.

    Each incidence gamma_i(t) = gamma_j(t') gives one row with the moment
    vector m(t) in column i and -m(t') in column j; the rows annihilate the
    stacked coefficient matrix.
    """
    n, r = curves.n, curves.degree
    if incidences is None:
        records: List[IncidenceRecord] = []
        for i, j in itertools.combinations(range(n), 2):
            records.extend(curve_intersections(curves.coeffs[i], curves.coeffs[j], i, j, tol, seed))
    else:
        records = [validate_incidence(curves, rec, tol) for rec in incidences]
    if not records:
        raise HypothesisFailure("no two curves intersect")

    params: List[List[complex]] = [[] for _ in range(n)]
    for rec in records:
        params[rec.i].append(rec.t)
        params[rec.j].append(rec.t_prime)
    counts = np.array([len(p) for p in params])
    k = int(counts.min()) if k is None else int(k)
    if k < 1:
        raise HypothesisFailure("some curve meets no other curve",
                                {"curves": np.flatnonzero(counts == 0).tolist()})
    cap = k // (2 * r)
    short = np.flatnonzero(counts < k).tolist()
    crowded = [i for i in range(n) if _capped_mass(_parameter_groups(params[i]), cap) < k]
    if short or crowded:
        raise HypothesisFailure(
            f"curves fail the incidence hypothesis with k={k}",
            {"fewer_than_k_incidences": short, "too_many_at_one_point": crowded},
        )

    blocks = np.zeros((len(records), n, 1, r + 1), dtype=np.complex128)
    for row, rec in enumerate(records):
        blocks[row, rec.i, 0] += moment_vector(rec.t, r)
        blocks[row, rec.j, 0] -= moment_vector(rec.t_prime, r)
    A = BlockMatrix(blocks)
    Gamma = curves.gamma_matrix()
    F = flatten(A)
    orth = np.linalg.norm(F @ Gamma)
    if orth > 1e-6 * max(np.linalg.norm(F) * np.linalg.norm(Gamma), np.finfo(float).tiny):
        raise NumericalFailure(f"incidence matrix does not annihilate the curves (norm {orth:.3e})")

    k_parts = []
    for col in range(n):
        rows = np.flatnonzero(np.linalg.norm(A.blocks[:, col, 0], axis=1) > 0)
        groups, _ = greedy_basis_partition([A.blocks[i, col] for i in rows], r + 1)
        k_parts.append(len(groups) * (r + 1))
    weak = [col for col, kp in enumerate(k_parts) if 2 * kp < k]
    if weak:
        raise HypothesisFailure(
            "too few well-spread incidences on some curves",
            {"curves": weak, "well_spread": [k_parts[c] for c in weak]},
        )
    k_prime = min(k_parts)
    cert = verify_design(A, DesignParams(2, max(k_prime, 1), r * r), WellSpreadMode.PARTITION)
    rank_a = numerical_rank(F, rtol=rank_rtol)
    design = rank_lower_bound(2, max(cert.k_actual, 1), max(cert.t_actual, 1), 1, r + 1, n)

    raw = 2 * (r + 1) ** 4 * n / k
    measured = numerical_rank(Gamma, rtol=rank_rtol)
    print_step("curves", n=n, degree=r, incidences=len(records), dimension=measured)
    report = BoundReport(
        name="curves",
        bound=raw,
        bound_int=int(math.floor(raw + 1e-9)),
        measured=measured,
        relation="<=",
        hypotheses={"incidence_design": cert.passed},
        details={
            "n": n, "degree": r, "k": k, "incidences": len(records),
            "well_spread_per_curve": k_parts,
            "rank_A": rank_a,
            "design_rank_bound": design.ceiling,
            "design_rank_ok": rank_a >= design.ceiling,
        },
        certificate=cert.to_dict(),
    )
    return CurveAnalysis(A, records, report)
