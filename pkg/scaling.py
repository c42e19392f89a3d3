"""
Alternating block Sinkhorn scaling and capacity bookkeeping.

The scaler iterates A_0 = Col(A), A_{k+1} = Col(Row(A_k)). Each normalization
multiplies the capacity by a factor computable from the normalizers'
determinants; the running log of that factor gives an upper bound on
log cap(A), because a column-normalized matrix has capacity at most 1.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from blockmat import (
    BlockMatrix,
    Normalization,
    ScalingCoefficients,
    adjoint,
    col_grams,
    col_normalize,
    column_factor,
    ds_from_grams,
    ensure_hermitian,
    hermitian_part,
    row_grams,
    row_normalize,
)
from config import DEFAULT_DS_TOL, DEFAULT_LOG_FACTOR_CEILING, DEFAULT_MAX_ITER
from console import print_step
from errors import InvalidArgument, SingularGram


@dataclass
class StepRecord:
    """Determinant contributions of one full Row/Col iteration."""

    iteration: int
    log_h_row: float
    log_h_col: float
    ds_before_col: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "log_h_row": self.log_h_row,
            "log_h_col": self.log_h_col,
            "ds_before_col": self.ds_before_col,
        }


@dataclass
class ScalingState:
    """
    Single-owner record of a scaling run.

    current always equals apply_scaling(original, accumulated) up to roundoff,
    and log_factor is the sum of the per-step capacity factors in log form.
    """

    original: BlockMatrix
    current: BlockMatrix
    accumulated: ScalingCoefficients
    iterations: int = 0
    ds_trace: List[float] = field(default_factory=list)
    log_factor: float = 0.0
    initial_log_factor: float = 0.0
    step_log: List[StepRecord] = field(default_factory=list)
    bound_trace: List[float] = field(default_factory=list)

    @classmethod
    def start(cls, A: BlockMatrix) -> "ScalingState":
        return cls(A, A, ScalingCoefficients.identity(A.m, A.n, A.r, A.c))

    def apply_row_step(self, norm: Normalization) -> float:
        log_h = -column_factor(self.original) * float(np.sum(norm.gram_log_dets))
        self.current = norm.matrix
        self.accumulated = self.accumulated.compose(row_step=norm.coefficients)
        self.log_factor += log_h
        return log_h

    def apply_col_step(self, norm: Normalization) -> float:
        log_h = -float(np.sum(norm.gram_log_dets))
        self.current = norm.matrix
        self.accumulated = self.accumulated.compose(col_step=norm.coefficients)
        self.log_factor += log_h
        return log_h


@dataclass
class ScalingReport:
    converged: bool
    final_ds: float
    iterations: int
    capacity_upper_bound_log: float
    ds_trace: List[float]
    failure: Optional[SingularGram] = None
    non_scalable_evidence: bool = False
    reason: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_ds": self.final_ds,
            "log_capacity_upper_bound": self.capacity_upper_bound_log,
            "ds_trace": list(self.ds_trace),
            "non_scalable_evidence": self.non_scalable_evidence,
            "reason": self.reason,
            "failure": self.failure.to_dict() if self.failure is not None else None,
        }


def capacity_upper_bound(state: ScalingState) -> float:
    """Upper bound on log cap(A) carried by a state whose current matrix is column-normalized."""
    return -state.log_factor


def sinkhorn_scale(A: BlockMatrix, tol: float = DEFAULT_DS_TOL,
                   max_iter: int = DEFAULT_MAX_ITER,
                   log_factor_ceiling: float = DEFAULT_LOG_FACTOR_CEILING
                   ) -> Tuple[ScalingState, ScalingReport]:
    """
    Scale A towards a doubly stochastic block matrix.

    Args:
        A: Matrix to scale
        tol: Stop once ds of the column-normalized iterate is at most tol
        max_iter: Maximum number of Row/Col iterations after the initial Col step
        log_factor_ceiling: Abort with non-scalable evidence once the
            accumulated log factor exceeds this value

    Returns:
        The final ScalingState and a ScalingReport
    """
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise InvalidArgument(f"max_iter must be at least 1, got {max_iter}")

    state = ScalingState.start(A)

    def report(failure: Optional[SingularGram] = None, evidence: bool = False,
               reason: str = "") -> ScalingReport:
        final_ds = state.ds_trace[-1] if state.ds_trace else math.inf
        converged = failure is None and final_ds <= tol
        if failure is not None:
            evidence = True
            reason = reason or str(failure)
        return ScalingReport(converged, final_ds, state.iterations,
                             capacity_upper_bound(state), list(state.ds_trace),
                             failure, evidence, reason)

    try:
        state.apply_col_step(col_normalize(A, step=0))
    except SingularGram as e:
        return state, report(failure=e)
    state.initial_log_factor = state.log_factor

    row_g = row_grams(state.current)
    current_ds = ds_from_grams(row_g, col_grams(state.current))
    state.ds_trace.append(current_ds)
    state.bound_trace.append(capacity_upper_bound(state))

    while current_ds > tol and state.iterations < max_iter:
        if state.log_factor > log_factor_ceiling:
            return state, report(evidence=True,
                                 reason=f"log factor {state.log_factor:.6g} exceeded ceiling")
        step = state.iterations + 1
        try:
            row_norm = row_normalize(state.current, grams=row_g, step=step)
            intermediate_cols = col_grams(row_norm.matrix)
            epsilon = ds_from_grams(row_grams(row_norm.matrix), intermediate_cols)
            col_norm = col_normalize(row_norm.matrix, grams=intermediate_cols, step=step)
        except SingularGram as e:
            return state, report(failure=e)
        log_h_row = state.apply_row_step(row_norm)
        log_h_col = state.apply_col_step(col_norm)
        state.iterations = step
        state.step_log.append(StepRecord(step, log_h_row, log_h_col, epsilon))

        row_g = row_grams(state.current)
        current_ds = ds_from_grams(row_g, col_grams(state.current))
        state.ds_trace.append(current_ds)
        state.bound_trace.append(capacity_upper_bound(state))
        if step % 500 == 0:
            print_step("sinkhorn", iteration=step, ds=f"{current_ds:.3e}")

    if current_ds > tol:
        return state, report(reason="iteration budget exhausted")
    return state, report()


def _pd_stack(Xs, count: int, dim: int) -> np.ndarray:
    Xs = np.asarray(Xs, dtype=np.complex128)
    if Xs.shape != (count, dim, dim):
        raise InvalidArgument(f"expected {count} matrices of size {dim}x{dim}, got shape {Xs.shape}")
    Xs = ensure_hermitian(Xs)
    if np.min(np.linalg.eigvalsh(Xs)) <= 0:
        raise InvalidArgument("every X_i must be positive definite")
    return Xs


def _log_dets_pd(stack: np.ndarray, what: str) -> np.ndarray:
    w = np.linalg.eigvalsh(hermitian_part(stack))
    if np.any(w <= 1e-14 * max(np.max(np.abs(w)), np.finfo(float).tiny)):
        raise InvalidArgument(f"{what} is singular")
    return np.sum(np.log(w), axis=-1)


def _weighted_column_sums(A: BlockMatrix, Xs: np.ndarray) -> np.ndarray:
    """sum_i A_ij^* X_i A_ij for every column j."""
    return np.einsum("ijba,ibd,ijdc->jac", A.blocks.conj(), Xs, A.blocks)


def capacity_objective(A: BlockMatrix, Xs) -> float:
    """
    Log of prod_j det((nc/mr) sum_i A_ij^* X_i A_ij).

    Returns -inf when some inner matrix is singular.
    """
    Xs = _pd_stack(Xs, A.m, A.r)
    inner = hermitian_part(column_factor(A) * _weighted_column_sums(A, Xs))
    w = np.linalg.eigvalsh(inner)
    if np.any(w <= 1e-14 * max(np.max(np.abs(w)), np.finfo(float).tiny)):
        return -math.inf
    return float(np.sum(np.log(w)))


def rescale_to_mean_one(xs: Sequence[float]) -> np.ndarray:
    x = np.asarray(xs, dtype=float)
    return x * (x.size / x.sum())


def amgm_bound(xs: Sequence[float]) -> float:
    """
    Quantitative AM-GM: for positive x_i summing to s = len(xs),
    prod x_i <= max(exp(-eps/6), exp(-1/6)) with eps = sum (x_i - 1)^2.
    """
    x = np.asarray(xs, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidArgument("amgm_bound expects a nonempty sequence")
    if np.any(x <= 0):
        raise InvalidArgument("all entries must be positive")
    s = x.size
    if abs(x.sum() - s) > 1e-9 * s:
        raise InvalidArgument(f"entries must sum to {s}; rescale first (got {x.sum():.12g})")
    eps = float(np.sum((x - 1.0) ** 2))
    return max(math.exp(-eps / 6), math.exp(-1 / 6))


def duality_check(A: BlockMatrix, Xs) -> Tuple[float, float]:
    """
    Both sides of the AM-GM step relating cap(A) and cap(A*).

    With Y_j = (sum_i A_ij^* X_i A_ij)^{-1} the returned pair is
    lhs = (1/nc) sum_j [log det((nc/mr) sum_i A_ij^* X_i A_ij) + log det Y_j]
    rhs = (1/mr) sum_i [log det((mr/nc) sum_j A_ij Y_j A_ij^*) + log det X_i] + log(nc/mr)
    and lhs >= rhs for every positive definite choice of X.
    """
    Xs = _pd_stack(Xs, A.m, A.r)
    f = column_factor(A)
    inner = hermitian_part(_weighted_column_sums(A, Xs))
    inner_log_dets = _log_dets_pd(inner, "sum_i A_ij^* X_i A_ij")
    Ys = hermitian_part(np.linalg.inv(inner))
    outer = hermitian_part(np.einsum("ijab,jbc,ijdc->iad", A.blocks, Ys, A.blocks.conj()))
    outer_log_dets = _log_dets_pd(outer, "sum_j A_ij Y_j A_ij^*")

    nc, mr = A.n * A.c, A.m * A.r
    lhs = (np.sum(A.c * math.log(f) + inner_log_dets) + np.sum(_log_dets_pd(Ys, "Y_j"))) / nc
    rhs = (np.sum(outer_log_dets - A.r * math.log(f)) + np.sum(_log_dets_pd(Xs, "X_i"))) / mr
    return float(lhs), float(rhs + math.log(f))


def transpose_capacity_diagnostic(A: BlockMatrix, tol: float = DEFAULT_DS_TOL,
                                  max_iter: int = DEFAULT_MAX_ITER) -> Dict[str, Any]:
    """
    Compare the capacity upper bounds of A and A*.

    For scalable matrices the bounds approach the capacities and should
    satisfy log cap(A)/nc = log(nc/mr) + log cap(A*)/mr; the gap is reported
    as a diagnostic only.
    """
    _, rep = sinkhorn_scale(A, tol=tol, max_iter=max_iter)
    _, rep_adj = sinkhorn_scale(adjoint(A), tol=tol, max_iter=max_iter)
    nc, mr = A.n * A.c, A.m * A.r
    gap = None
    if rep.converged and rep_adj.converged:
        gap = (rep.capacity_upper_bound_log / nc
               - math.log(nc / mr) - rep_adj.capacity_upper_bound_log / mr)
    return {
        "log_capacity_upper_bound": rep.capacity_upper_bound_log,
        "adjoint_log_capacity_upper_bound": rep_adj.capacity_upper_bound_log,
        "converged": rep.converged,
        "adjoint_converged": rep_adj.converged,
        "duality_gap": gap,
    }
