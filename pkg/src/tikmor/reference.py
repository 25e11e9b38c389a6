"""Comparison solvers: secant-updated bidiagonal Tikhonov (GBiT),
simultaneous iterative reconstruction (SIRT), and conjugate-gradient
least squares with priorconditioning and discrepancy stopping (CGLS-PC).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve

from .bidiag import BidiagFactorization, init_bidiag
from .errors import DegenerateRhsError, ZeroSumError
from .linop import PriorconditionedOperator, as_operator
from .ntm import _check_discrepancy_feasible, stacked_norm
from .problems import InverseProblem
from .trace import CGLS_COLUMNS, GBIT_COLUMNS, SIRT_COLUMNS, SolveTrace

logger = logging.getLogger(__name__)


# -- GBiT ---------------------------------------------------------------------


@dataclass
class GbitConfig:
    alpha0: float = 1.0
    tol: float = 1e-3
    max_iter: int = 100

    def __post_init__(self):
        if self.alpha0 <= 0 or self.tol <= 0 or self.max_iter < 1:
            raise ValueError("alpha0 and tol must be positive, max_iter >= 1")


@dataclass
class GbitResult:
    x: np.ndarray
    alpha: float
    trace: SolveTrace
    converged: bool
    n_outer: int
    residual_norm: float
    F_norm: float
    y: np.ndarray
    factorization: BidiagFactorization


def _projected_tikhonov(G, g, alpha, dim):
    if alpha == 0.0:
        # secant update can in principle hit zero; fall back to least squares
        return np.linalg.lstsq(G, g, rcond=None)[0]
    return cho_solve(cho_factor(G + alpha * np.eye(dim)), g)


def secant_alpha_update(eps, res_unreg, res_reg, alpha_prev):
    """One secant step of alpha toward the discrepancy level.

    ``res_unreg`` and ``res_reg`` are the projected residual norms of the
    unregularized and regularized solutions. A degenerate denominator
    (equal residuals) holds alpha for one iteration.
    """
    if res_reg == res_unreg:
        return alpha_prev
    return abs((eps - res_unreg) / (res_reg - res_unreg)) * alpha_prev


def gbit_solve(problem: InverseProblem, config: Optional[GbitConfig] = None) -> GbitResult:
    """Alternate projected Tikhonov solves with secant updates of alpha.

    Per Krylov iteration the subspace grows by one, the unregularized
    projected solution (the LSQR iterate) and the regularized one are
    computed, and alpha moves by one secant step toward the discrepancy
    level. Stops when the projected residual norm is small and alpha has
    stagnated.
    """
    if config is None:
        config = GbitConfig()
    A = as_operator(problem.operator)
    b = problem.b
    eps = problem.discrepancy_target
    _check_discrepancy_feasible(b, eps)

    f = init_bidiag(A, b)
    trace = SolveTrace(columns=GBIT_COLUMNS)
    alpha_prev = config.alpha0
    converged = False
    y = np.zeros(0)
    alpha = alpha_prev
    Fnorm = np.inf
    n_outer = 0

    for k in range(1, config.max_iter + 1):
        n_outer = k
        if f.can_expand():
            f.expand()
        if f.k == 0:
            raise DegenerateRhsError(
                "A^T b is numerically zero: no Krylov direction exists"
            )
        B, c = f.B, f.c
        dim = f.k
        G = B.T @ B
        g = B.T @ c

        z = np.linalg.lstsq(B, c, rcond=None)[0]
        y = _projected_tikhonov(G, g, alpha_prev, dim)
        res_z = float(np.linalg.norm(B @ z - c))
        res_y = float(np.linalg.norm(B @ y - c))
        if res_y == res_z:
            logger.warning(
                "secant update degenerate at iteration %d (r(y) == r(z) == %.6g); "
                "holding alpha", k, res_y,
            )
        alpha = secant_alpha_update(eps, res_z, res_y, alpha_prev)

        # y solves the normal equations at alpha_prev, so F1 collapses
        F1 = (alpha - alpha_prev) * y
        F2 = 0.5 * (res_y * res_y - eps * eps)
        Fnorm = stacked_norm(F1, F2)
        trace.append(k, alpha, res_y, Fnorm, dim, res_z)

        if Fnorm < config.tol and abs(alpha - alpha_prev) / alpha_prev < config.tol:
            converged = True
            break
        alpha_prev = alpha

    x = f.lift(y)
    return GbitResult(
        x=x,
        alpha=float(alpha),
        trace=trace,
        converged=converged,
        n_outer=n_outer,
        residual_norm=float(np.linalg.norm(A.matvec(x) - b)),
        F_norm=float(Fnorm),
        y=y,
        factorization=f,
    )


# -- SIRT ---------------------------------------------------------------------


@dataclass
class SirtOperators:
    """Cached inverse row/column sum scalings."""

    row_scale: np.ndarray  # diagonal of R
    col_scale: np.ndarray  # diagonal of C
    used_absolute_sums: bool


def sirt_operators(A) -> SirtOperators:
    """Inverse row and column sums of A.

    Raw sums are used as written for nonnegative matrices; any negative
    entry switches both sums to absolute values (logged), since raw sums
    can then vanish or change sign.
    """
    A = as_operator(A)
    M = A.sparse if hasattr(A, "sparse") else A.to_dense()
    if sp.issparse(M):
        has_negative = bool((M.data < 0).any())
        basis = abs(M) if has_negative else M
        row_sums = np.asarray(basis.sum(axis=1)).ravel()
        col_sums = np.asarray(basis.sum(axis=0)).ravel()
    else:
        has_negative = bool((M < 0).any())
        basis = np.abs(M) if has_negative else M
        row_sums = basis.sum(axis=1)
        col_sums = basis.sum(axis=0)
    if has_negative:
        logger.warning(
            "matrix has negative entries; SIRT scalings use absolute-value sums"
        )
    for kind, sums in (("row", row_sums), ("column", col_sums)):
        bad = np.flatnonzero(sums == 0.0)
        if bad.size:
            raise ZeroSumError(kind, int(bad[0]))
    return SirtOperators(
        row_scale=1.0 / row_sums,
        col_scale=1.0 / col_sums,
        used_absolute_sums=has_negative,
    )


@dataclass
class SirtResult:
    x: np.ndarray
    trace: SolveTrace
    reached_discrepancy: bool
    n_iter: int
    residual_norm: float


def sirt_solve(
    problem: InverseProblem, max_iter, stop_at_discrepancy=True
) -> SirtResult:
    """Stationary iteration x <- x + C A^T R (b - A x) from x = 0."""
    A = as_operator(problem.operator)
    b = problem.b
    eps = problem.discrepancy_target
    ops = sirt_operators(A)

    trace = SolveTrace(columns=SIRT_COLUMNS)
    x = np.zeros(A.cols)
    reached = False
    n_iter = 0
    res = float(np.linalg.norm(b))
    for k in range(1, max_iter + 1):
        r = b - A.matvec(x)
        x = x + ops.col_scale * A.rmatvec(ops.row_scale * r)
        res = float(np.linalg.norm(b - A.matvec(x)))
        n_iter = k
        trace.append(k, None, res)
        if stop_at_discrepancy and res <= eps:
            reached = True
            break
    return SirtResult(
        x=x, trace=trace, reached_discrepancy=reached, n_iter=n_iter,
        residual_norm=res,
    )


# -- CGLS ---------------------------------------------------------------------


@dataclass
class CglsResult:
    x: np.ndarray
    trace: SolveTrace
    converged: bool
    n_iter: int
    residual_norm: float
    z: Optional[np.ndarray] = None


def cgls(A, b, eps, max_iter=1000, x0=None) -> CglsResult:
    """Conjugate-gradient least squares with discrepancy stopping.

    Iterates on min ||A x - b|| and stops at the first iterate whose
    residual norm is at or below eps.
    """
    A = as_operator(A)
    b = np.asarray(b, dtype=float)
    x = np.zeros(A.cols) if x0 is None else np.asarray(x0, dtype=float).copy()
    r = b - A.matvec(x)
    s = A.rmatvec(r)
    p = s.copy()
    gamma = float(s @ s)
    trace = SolveTrace(columns=CGLS_COLUMNS)
    res = float(np.linalg.norm(r))
    trace.append(0, None, res)
    converged = res <= eps
    n_iter = 0
    for k in range(1, max_iter + 1):
        if converged or gamma == 0.0:
            break
        q = A.matvec(p)
        delta = float(q @ q)
        if delta == 0.0:
            break
        step = gamma / delta
        x = x + step * p
        r = r - step * q
        res = float(np.linalg.norm(r))
        n_iter = k
        trace.append(k, None, res)
        if res <= eps:
            converged = True
            break
        s = A.rmatvec(r)
        gamma_new = float(s @ s)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return CglsResult(
        x=x, trace=trace, converged=converged, n_iter=n_iter, residual_norm=res
    )


def cgls_priorconditioned(
    problem: InverseProblem, reg, x0=None, max_iter=1000
) -> CglsResult:
    """CGLS on the right-preconditioned system A inv(L) z = b - A x0.

    The regularizer acts as a smoothness prior rather than a convergence
    accelerator; the returned x is recovered as x0 + inv(L) z.
    """
    A = as_operator(problem.operator)
    eps = problem.discrepancy_target
    if eps <= 0:
        raise ValueError("discrepancy level must be positive")
    op = PriorconditionedOperator(A, reg, x0)
    rhs = op.effective_rhs(problem.b)
    inner = cgls(op, rhs, eps, max_iter=max_iter)
    x = op.recover(inner.x)
    return CglsResult(
        x=x,
        trace=inner.trace,
        converged=inner.converged,
        n_iter=inner.n_iter,
        residual_norm=inner.residual_norm,
        z=inner.x,
    )
