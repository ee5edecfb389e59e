"""Dense real linear algebra for the bordered saddle-point systems.

Matrices are plain 2-D ``float64`` numpy arrays in row-major order. The
systems solved here are symmetric indefinite (a positive semi-definite block
bordered by a single equality-constraint row/column), so factorization uses
row-pivoted Gaussian elimination (LAPACK ``getrf``) rather than Cholesky.
Solutions get up to two steps of iterative refinement in working precision,
which keeps the infinity-norm residual near machine level on well-scaled
systems.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularMatrix

# Relative pivot threshold: a pivot below PIVOT_RTOL * max|A| flags the
# system as singular. Relative so behavior is scale-invariant.
PIVOT_RTOL = 1e-12

_REFINEMENT_STEPS = 2


@dataclass(frozen=True)
class SolveReport:
    """Quality certificate for one dense solve.

    condition_estimate is the ratio of the largest to the smallest absolute
    pivot of the row-pivoted elimination: a cheap surrogate, reported but
    never used for correctness decisions. ``None`` means "not computed".
    """

    residual_inf_norm: float
    condition_estimate: float | None
    singular: bool


def _check_matrix(a: np.ndarray, name: str = "A") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return a


def _check_vector(v: np.ndarray, length: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return v


def residual_inf_norm(a: np.ndarray, x: np.ndarray, rhs: np.ndarray) -> float:
    """max_i |(A x - rhs)_i|."""
    a = _check_matrix(a)
    x = _check_vector(x, a.shape[1], "x")
    rhs = _check_vector(rhs, a.shape[0], "rhs")
    return float(np.max(np.abs(a @ x - rhs)))


def solve_dense(a: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, SolveReport]:
    """Solve A x = rhs by row-pivoted LU with iterative refinement.

    Raises SingularMatrix (with the report attached) when any pivot falls
    below ``PIVOT_RTOL * max|A|``; no solution vector is returned in that
    case.
    """
    a = _check_matrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    rhs = _check_vector(rhs, n, "rhs")

    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        report = SolveReport(residual_inf_norm=float("inf"), condition_estimate=None, singular=True)
        raise SingularMatrix("matrix is identically zero", report=report)

    with warnings.catch_warnings():
        # singularity is detected below via the pivot threshold
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    smallest = float(np.min(pivots))
    largest = float(np.max(pivots))
    if smallest < PIVOT_RTOL * scale:
        cond = largest / smallest if smallest > 0.0 else float("inf")
        report = SolveReport(residual_inf_norm=float("inf"), condition_estimate=cond, singular=True)
        raise SingularMatrix(
            f"pivot {smallest:.3e} below threshold {PIVOT_RTOL * scale:.3e}",
            report=report,
        )
    cond = largest / smallest

    x = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    if not np.all(np.isfinite(x)):
        report = SolveReport(residual_inf_norm=float("inf"), condition_estimate=cond, singular=True)
        raise SingularMatrix("solution overflowed to non-finite values", report=report)
    best_res = float(np.max(np.abs(a @ x - rhs)))
    for _ in range(_REFINEMENT_STEPS):
        if best_res == 0.0:
            break
        r = rhs - a @ x
        x_new = x + scipy.linalg.lu_solve((lu, piv), r, check_finite=False)
        res_new = float(np.max(np.abs(a @ x_new - rhs)))
        if res_new < best_res:
            x, best_res = x_new, res_new
        else:
            break

    report = SolveReport(residual_inf_norm=best_res, condition_estimate=cond, singular=False)
    return x, report


def symmetric_square(a: np.ndarray) -> np.ndarray:
    """a @ a.T computed as a symmetric rank-k update (half the flops of a
    general product) and mirrored so the result is exactly symmetric."""
    a = _check_matrix(a, "A")
    c = scipy.linalg.blas.dsyrk(1.0, a)  # upper triangle of a a^T
    return np.triu(c) + np.triu(c, 1).T


def assemble_bordered(h: np.ndarray, border: np.ndarray) -> np.ndarray:
    """Build [[H, border], [border^T, 0]] from a square H and a border vector."""
    h = _check_matrix(h, "H")
    m = h.shape[0]
    if h.shape[1] != m:
        raise DimensionMismatch(f"H must be square, got {h.shape}")
    border = _check_vector(border, m, "border")
    out = np.empty((m + 1, m + 1), dtype=np.float64)
    out[:m, :m] = h
    out[:m, m] = border
    out[m, :m] = border
    out[m, m] = 0.0
    return out
