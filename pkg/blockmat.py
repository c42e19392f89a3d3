"""
Block matrices and the normalization primitives built on them.

A BlockMatrix in M_{m,n}(r,c) is an m x n grid whose entries are r x c complex
matrices. It is stored densely as a read-only (m, n, r, c) complex array; all
indices are zero-based.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from config import DEFAULT_RANK_RTOL
from errors import InvalidArgument, InvalidScaling, NumericalFailure, SingularGram


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """An m x n grid of r x c complex blocks."""

    blocks: np.ndarray

    def __post_init__(self):
        arr = np.array(self.blocks, dtype=np.complex128)
        if arr.ndim != 4 or min(arr.shape) < 1:
            raise InvalidArgument(
                f"blocks must have shape (m, n, r, c) with positive sizes, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("blocks contain non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "blocks", arr)

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    @property
    def n(self) -> int:
        return self.blocks.shape[1]

    @property
    def r(self) -> int:
        return self.blocks.shape[2]

    @property
    def c(self) -> int:
        return self.blocks.shape[3]

    @property
    def shape(self):
        return self.blocks.shape

    @classmethod
    def zeros(cls, m: int, n: int, r: int, c: int) -> "BlockMatrix":
        return cls(np.zeros((m, n, r, c), dtype=np.complex128))

    @classmethod
    def from_dense(cls, M: np.ndarray, r: int, c: int) -> "BlockMatrix":
        """Cut a dense (rm x cn) matrix into r x c blocks."""
        M = np.asarray(M, dtype=np.complex128)
        if M.ndim != 2 or M.shape[0] % r or M.shape[1] % c:
            raise InvalidArgument(f"cannot cut a {M.shape} matrix into {r}x{c} blocks")
        m, n = M.shape[0] // r, M.shape[1] // c
        return cls(M.reshape(m, r, n, c).transpose(0, 2, 1, 3))

    def block(self, i: int, j: int) -> np.ndarray:
        return self.blocks[i, j]

    def column_blocks(self, j: int, rows: Optional[Sequence[int]] = None) -> List[np.ndarray]:
        rows = range(self.m) if rows is None else rows
        return [self.blocks[i, j] for i in rows]

    def with_blocks(self, blocks: np.ndarray) -> "BlockMatrix":
        return BlockMatrix(blocks)


@dataclass(frozen=True, eq=False)
class ScalingCoefficients:
    """Row coefficients R_i (r x r) and column coefficients C_j (c x c)."""

    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.complex128)
        cols = np.array(self.cols, dtype=np.complex128)
        if rows.ndim != 3 or rows.shape[1] != rows.shape[2]:
            raise InvalidScaling(f"row coefficients must be square matrices, got {rows.shape}")
        if cols.ndim != 3 or cols.shape[1] != cols.shape[2]:
            raise InvalidScaling(f"column coefficients must be square matrices, got {cols.shape}")
        rows.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def identity(cls, m: int, n: int, r: int, c: int) -> "ScalingCoefficients":
        return cls(np.broadcast_to(np.eye(r), (m, r, r)), np.broadcast_to(np.eye(c), (n, c, c)))

    def validate(self) -> None:
        """Reject coefficients whose determinant magnitude is below 1e-300."""
        for name, coeffs in (("row", self.rows), ("column", self.cols)):
            if not np.all(np.isfinite(coeffs)):
                raise InvalidScaling(f"{name} coefficients contain non-finite entries")
            sign, logabs = np.linalg.slogdet(coeffs)
            bad = np.flatnonzero((sign == 0) | (logabs < np.log(1e-300)))
            if bad.size:
                raise InvalidScaling(f"{name} coefficient {int(bad[0])} is singular")

    def condition_numbers(self) -> dict:
        return {
            "rows": [float(x) for x in np.linalg.cond(self.rows)],
            "cols": [float(x) for x in np.linalg.cond(self.cols)],
        }

    def compose(self, row_step: Optional[np.ndarray] = None,
                col_step: Optional[np.ndarray] = None) -> "ScalingCoefficients":
        """Coefficients of scaling by self first and then by the step."""
        rows = self.rows if row_step is None else np.matmul(row_step, self.rows)
        cols = self.cols if col_step is None else np.matmul(self.cols, col_step)
        return ScalingCoefficients(rows, cols)


class Normalization(NamedTuple):
    matrix: BlockMatrix
    coefficients: np.ndarray
    gram_log_dets: np.ndarray


def flatten(A: BlockMatrix) -> np.ndarray:
    """The rm x cn scalar matrix obtained by ignoring block boundaries."""
    return A.blocks.transpose(0, 2, 1, 3).reshape(A.m * A.r, A.n * A.c)


def numerical_rank(M: np.ndarray, tol: Optional[float] = None,
                   rtol: float = DEFAULT_RANK_RTOL) -> int:
    """
    Count singular values strictly above a threshold.

    Args:
        M: Dense matrix
        tol: Absolute threshold; defaults to max(rows, cols) * sigma_max * rtol
        rtol: Relative factor used when tol is None

    Returns:
        Numerical rank of M
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise InvalidArgument(f"numerical_rank expects a matrix, got shape {M.shape}")
    if M.size == 0:
        return 0
    if tol is not None and tol < 0:
        raise InvalidArgument(f"tol must be nonnegative, got {tol}")
    if not np.all(np.isfinite(M)):
        raise NumericalFailure("matrix contains non-finite entries")
    try:
        s = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"singular value decomposition failed: {e}")
    if tol is None:
        tol = max(M.shape) * s[0] * rtol
    return int(np.count_nonzero(s > tol))


def hermitian_part(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X)
    return (X + np.swapaxes(X, -1, -2).conj()) / 2


def ensure_hermitian(X: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Check conjugate symmetry relative to the largest entry and symmetrize."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise InvalidArgument(f"expected square matrices, got shape {X.shape}")
    scale = np.max(np.abs(X)) if X.size else 0.0
    skew = np.max(np.abs(X - np.swapaxes(X, -1, -2).conj())) if X.size else 0.0
    if skew > tol * max(scale, np.finfo(float).tiny):
        raise InvalidArgument(f"matrix is not Hermitian (asymmetry {skew:.3e})")
    return hermitian_part(X)


def frobenius_sq(X: np.ndarray) -> float:
    """tr(X X*)."""
    X = np.asarray(X)
    return float(np.vdot(X, X).real)


def _inv_sqrt_batch(grams: np.ndarray, eps: Optional[float] = None):
    """
    Inverse square roots of a stack of Hermitian matrices.

    Returns the stack of inverse square roots and the log-determinants of the
    inputs. Raises SingularGram (with position = stack index) when an
    eigenvalue does not exceed eps, which defaults to 1e-12 * trace / dim.
    """
    H = hermitian_part(grams)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"Hermitian eigendecomposition failed: {e}")
    dim = H.shape[-1]
    if eps is None:
        thresholds = 1e-12 * np.trace(H, axis1=-2, axis2=-1).real / dim
    else:
        thresholds = np.full(H.shape[0], float(eps))
    bad = w <= thresholds[:, None]
    if bad.any():
        position = int(np.argmax(bad.any(axis=1)))
        index = int(np.argmax(bad[position]))
        raise SingularGram(w[position, index], index, position=position)
    inv = np.einsum("kab,kb,kcb->kac", V, w ** -0.5, V.conj())
    return inv, np.sum(np.log(w), axis=1)


def inv_sqrt_psd(X: np.ndarray, eps: Optional[float] = None) -> np.ndarray:
    """X^{-1/2} of a positive definite Hermitian matrix via eigh."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {X.shape}")
    try:
        inv, _ = _inv_sqrt_batch(X[None], eps)
    except SingularGram as e:
        raise SingularGram(e.eigenvalue, e.eigen_index)
    return inv[0]


def column_factor(A: BlockMatrix) -> float:
    """The nc/mr weight of the column grams."""
    return (A.n * A.c) / (A.m * A.r)


def row_grams(A: BlockMatrix) -> np.ndarray:
    """All R_i(A) = sum_j A_ij A_ij^*, shape (m, r, r), exactly Hermitian."""
    return hermitian_part(np.einsum("ijab,ijcb->iac", A.blocks, A.blocks.conj()))


def col_grams(A: BlockMatrix) -> np.ndarray:
    """All C_j(A) = (nc/mr) sum_i A_ij^* A_ij, shape (n, c, c), exactly Hermitian."""
    return hermitian_part(column_factor(A) * np.einsum("ijba,ijbc->jac", A.blocks.conj(), A.blocks))


def row_gram(A: BlockMatrix, i: int) -> np.ndarray:
    if not 0 <= i < A.m:
        raise InvalidArgument(f"row index {i} out of range for m={A.m}")
    row = A.blocks[i]
    return hermitian_part(np.einsum("jab,jcb->ac", row, row.conj()))


def col_gram(A: BlockMatrix, j: int) -> np.ndarray:
    if not 0 <= j < A.n:
        raise InvalidArgument(f"column index {j} out of range for n={A.n}")
    col = A.blocks[:, j]
    return hermitian_part(column_factor(A) * np.einsum("iba,ibc->ac", col.conj(), col))


def row_normalize(A: BlockMatrix, grams: Optional[np.ndarray] = None,
                  step: Optional[int] = None) -> Normalization:
    """
    Row(A) = R(A) * A with coefficients R_i(A)^{-1/2}.

    Args:
        A: Matrix to normalize
        grams: Precomputed row grams (recomputed when omitted)
        step: Iteration index recorded on a SingularGram

    Returns:
        Normalization(matrix, coefficients, gram_log_dets)
    """
    grams = row_grams(A) if grams is None else grams
    try:
        coeffs, log_dets = _inv_sqrt_batch(grams)
    except SingularGram as e:
        raise e.located("row", e.position, step)
    matrix = BlockMatrix(np.einsum("iab,ijbc->ijac", coeffs, A.blocks))
    return Normalization(matrix, coeffs, log_dets)


def col_normalize(A: BlockMatrix, grams: Optional[np.ndarray] = None,
                  step: Optional[int] = None) -> Normalization:
    """Col(A) = A * C(A) with coefficients C_j(A)^{-1/2}."""
    grams = col_grams(A) if grams is None else grams
    try:
        coeffs, log_dets = _inv_sqrt_batch(grams)
    except SingularGram as e:
        raise e.located("column", e.position, step)
    matrix = BlockMatrix(np.einsum("ijab,jbc->ijac", A.blocks, coeffs))
    return Normalization(matrix, coeffs, log_dets)


def ds_from_grams(row_g: np.ndarray, col_g: np.ndarray) -> float:
    r = row_g.shape[-1]
    c = col_g.shape[-1]
    row_part = np.sum(np.abs(row_g - np.eye(r)) ** 2)
    col_part = np.sum(np.abs(col_g - np.eye(c)) ** 2)
    return float(row_part + col_part)


def ds(A: BlockMatrix) -> float:
    """Squared Frobenius distance of A from being doubly stochastic."""
    return ds_from_grams(row_grams(A), col_grams(A))


def apply_scaling(A: BlockMatrix, S: ScalingCoefficients) -> BlockMatrix:
    """B_ij = R_i A_ij C_j."""
    if S.rows.shape != (A.m, A.r, A.r) or S.cols.shape != (A.n, A.c, A.c):
        raise InvalidScaling(
            f"coefficients of shape {S.rows.shape}/{S.cols.shape} do not fit "
            f"a block matrix of shape {A.shape}"
        )
    S.validate()
    return BlockMatrix(np.einsum("iab,ijbc,jcd->ijad", S.rows, A.blocks, S.cols))


def adjoint(A: BlockMatrix) -> BlockMatrix:
    """A* in M_{n,m}(c,r): block (j,i) is A_ij^*."""
    return BlockMatrix(A.blocks.transpose(1, 0, 3, 2).conj())


def block_norms(A: BlockMatrix) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(A.blocks) ** 2, axis=(2, 3)))


def support(A: BlockMatrix, rel_tol: float = 1e-12) -> np.ndarray:
    """Boolean (m, n) mask of blocks whose norm exceeds rel_tol times the largest block norm."""
    norms = block_norms(A)
    scale = norms.max()
    if scale == 0:
        return np.zeros(norms.shape, dtype=bool)
    return norms > rel_tol * scale


def block_diagonal(*parts: BlockMatrix) -> BlockMatrix:
    """Place block matrices with equal block shape along the diagonal."""
    if not parts:
        raise InvalidArgument("block_diagonal needs at least one part")
    r, c = parts[0].r, parts[0].c
    if any(p.r != r or p.c != c for p in parts):
        raise InvalidArgument("all parts must share the block shape r x c")
    m = sum(p.m for p in parts)
    n = sum(p.n for p in parts)
    out = np.zeros((m, n, r, c), dtype=np.complex128)
    i0 = j0 = 0
    for p in parts:
        out[i0:i0 + p.m, j0:j0 + p.n] = p.blocks
        i0 += p.m
        j0 += p.n
    return BlockMatrix(out)


def zero_blocks(A: BlockMatrix, mask: np.ndarray) -> BlockMatrix:
    """Copy of A with the blocks selected by the (m, n) mask set to zero."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (A.m, A.n):
        raise InvalidArgument(f"mask shape {mask.shape} does not match grid ({A.m}, {A.n})")
    out = A.blocks.copy()
    out[mask] = 0
    return BlockMatrix(out)
