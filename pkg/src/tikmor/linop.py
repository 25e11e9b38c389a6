"""Linear operators, Matrix Market ingestion and standard-form transformation.

Operators expose ``matvec``/``rmatvec`` plus exact dimensions. Three
representations are supported: dense (ndarray), sparse (CSR) and the
composite right-preconditioned product ``A @ inv(L)`` used to reduce
general-form Tikhonov problems to standard form.

Everything is float64; operators are immutable after construction.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    ConvergenceFailure,
    DimensionError,
    MatrixMarketError,
    UnsupportedFormatError,
)

DENSE_SOLVE_MAX_N = 2000


class LinearOperator:
    """Base class: an m-by-n real linear map with an exact transpose."""

    rows: int
    cols: int

    @property
    def shape(self):
        return (self.rows, self.cols)

    def matvec(self, v):
        raise NotImplementedError

    def rmatvec(self, w):
        raise NotImplementedError

    def to_dense(self):
        raise NotImplementedError

    def frobenius_norm(self):
        raise NotImplementedError

    def gram(self):
        """Dense A^T A, used by full-space Newton solves."""
        A = self.to_dense()
        return A.T @ A

    def _check_in(self, v, length, name):
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.shape[0] != length:
            raise DimensionError(
                f"{name} expects a vector of length {length}, got shape {v.shape}"
            )
        return v


class DenseOperator(LinearOperator):
    def __init__(self, matrix):
        A = np.array(matrix, dtype=float)  # own copy: operators are immutable
        if A.ndim != 2:
            raise DimensionError(f"dense operator needs a 2-d array, got ndim={A.ndim}")
        A.setflags(write=False)
        self._A = A
        self.rows, self.cols = A.shape

    def matvec(self, v):
        return self._A @ self._check_in(v, self.cols, "matvec")

    def rmatvec(self, w):
        return self._A.T @ self._check_in(w, self.rows, "rmatvec")

    def to_dense(self):
        return self._A

    def frobenius_norm(self):
        return float(np.linalg.norm(self._A, "fro"))


class SparseOperator(LinearOperator):
    def __init__(self, matrix):
        A = sp.csr_matrix(matrix).astype(float)
        self._A = A
        self._At = A.T.tocsr()
        self.rows, self.cols = A.shape

    def matvec(self, v):
        return self._A @ self._check_in(v, self.cols, "matvec")

    def rmatvec(self, w):
        return self._At @ self._check_in(w, self.rows, "rmatvec")

    def to_dense(self):
        return self._A.toarray()

    def frobenius_norm(self):
        return float(np.sqrt((self._A.data**2).sum()))

    @property
    def sparse(self):
        return self._A


class RegularizationMatrix:
    """Upper bidiagonal smoothing matrix: -1 on the diagonal, +1 above it.

    Square and invertible by construction; applying the inverse is a
    back substitution, which for this stencil collapses to a reversed
    cumulative sum. The explicit inverse is never formed by the solvers.
    """

    def __init__(self, dim):
        if dim < 1:
            raise DimensionError("regularization matrix needs dim >= 1")
        self.dim = int(dim)

    def matvec(self, z):
        z = np.asarray(z, dtype=float)
        out = -z.copy()
        out[:-1] += z[1:]
        return out

    def rmatvec(self, z):
        z = np.asarray(z, dtype=float)
        out = -z.copy()
        out[1:] += z[:-1]
        return out

    def solve(self, w):
        """z with L z = w (back substitution, O(n))."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise DimensionError(f"expected length {self.dim}, got {w.shape}")
        return -np.cumsum(w[::-1])[::-1]

    def solve_transpose(self, w):
        """z with L^T z = w (forward substitution, O(n))."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise DimensionError(f"expected length {self.dim}, got {w.shape}")
        return -np.cumsum(w)

    def to_dense(self):
        n = self.dim
        return -np.eye(n) + np.diag(np.ones(n - 1), 1)

    def inverse_dense(self):
        # inv(L) = -triu(ones): column j of the inverse is -1 on rows <= j
        return -np.triu(np.ones((self.dim, self.dim)))


class PriorconditionedOperator(LinearOperator):
    """Composite operator A @ inv(L) with shift bookkeeping.

    Solving the transformed system in z and mapping back through
    ``recover`` embeds the smoothness prior carried by L.
    """

    def __init__(self, base: LinearOperator, reg, shift=None):
        if reg.dim != base.cols:
            raise DimensionError(
                f"regularizer dim {reg.dim} does not match operator cols {base.cols}"
            )
        self.base = base
        self.reg = reg
        self.shift = (
            np.zeros(base.cols) if shift is None else np.asarray(shift, dtype=float)
        )
        if self.shift.shape != (base.cols,):
            raise DimensionError("shift length must equal operator cols")
        self.rows, self.cols = base.rows, base.cols

    def matvec(self, z):
        return self.base.matvec(self.reg.solve(self._check_in(z, self.cols, "matvec")))

    def rmatvec(self, w):
        return self.reg.solve_transpose(self.base.rmatvec(w))

    def recover(self, z):
        """Map a transformed solution z back to the original variable."""
        return self.shift + self.reg.solve(z)

    def effective_rhs(self, b):
        return np.asarray(b, dtype=float) - self.base.matvec(self.shift)

    def to_dense(self):
        return self.base.to_dense() @ self.reg.inverse_dense()

    def frobenius_norm(self):
        # column sweep: ||A inv(L)||_F^2 = sum_j ||A inv(L) e_j||^2
        total = 0.0
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            col = self.matvec(e)
            total += float(col @ col)
            e[j] = 0.0
        return float(np.sqrt(total))


def as_operator(obj) -> LinearOperator:
    if isinstance(obj, LinearOperator):
        return obj
    if sp.issparse(obj):
        return SparseOperator(obj)
    return DenseOperator(np.asarray(obj, dtype=float))


# -- Matrix Market ----------------------------------------------------------

_MM_BANNER = "%%matrixmarket"


def load_matrix_market(path) -> LinearOperator:
    """Read a real Matrix Market file into an operator.

    Coordinate files become sparse operators, array files dense ones.
    Symmetric and skew-symmetric storage is expanded. Complex and
    pattern fields are rejected.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("empty file", line=1)

    header = lines[0].strip().lower().split()
    if len(header) != 5 or header[0] != _MM_BANNER or header[1] != "matrix":
        raise MatrixMarketError(f"bad header {lines[0].strip()!r}", line=1)
    layout, field, symmetry = header[2], header[3], header[4]
    if layout not in ("coordinate", "array"):
        raise UnsupportedFormatError(f"unsupported layout {layout!r}", line=1)
    if field not in ("real", "integer"):
        raise UnsupportedFormatError(f"unsupported field {field!r}", line=1)
    if symmetry not in ("general", "symmetric", "skew-symmetric"):
        raise UnsupportedFormatError(f"unsupported symmetry {symmetry!r}", line=1)

    # skip comments/blank lines; remember real line numbers for diagnostics
    body = [
        (i + 1, ln.strip())
        for i, ln in enumerate(lines[1:], start=1)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixMarketError("missing size line", line=len(lines))

    size_lineno, size_line = body[0]
    parts = size_line.split()
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise MatrixMarketError(f"bad size line {size_line!r}", line=size_lineno)

    if layout == "coordinate":
        if len(dims) != 3:
            raise MatrixMarketError(
                "coordinate size line needs 'rows cols nnz'", line=size_lineno
            )
        m, n, nnz = dims
        entries = body[1:]
        if len(entries) != nnz:
            raise MatrixMarketError(
                f"expected {nnz} entries, found {len(entries)}", line=size_lineno
            )
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=float)
        for idx, (lineno, ln) in enumerate(entries):
            toks = ln.split()
            if len(toks) != 3:
                raise MatrixMarketError(f"bad entry {ln!r}", line=lineno)
            try:
                i, j, v = int(toks[0]), int(toks[1]), float(toks[2])
            except ValueError:
                raise MatrixMarketError(f"bad entry {ln!r}", line=lineno)
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixMarketError(
                    f"index ({i},{j}) outside {m}x{n}", line=lineno
                )
            rows[idx], cols[idx], vals[idx] = i - 1, j - 1, v
        if symmetry in ("symmetric", "skew-symmetric"):
            if m != n:
                raise MatrixMarketError(
                    "symmetric storage requires a square matrix", line=size_lineno
                )
            off = rows != cols
            sign = -1.0 if symmetry == "skew-symmetric" else 1.0
            rows, cols, vals = (
                np.concatenate([rows, cols[off]]),
                np.concatenate([cols, rows[off]]),
                np.concatenate([vals, sign * vals[off]]),
            )
        A = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        return SparseOperator(A)

    # array layout: column-major dense values
    if len(dims) != 2:
        raise MatrixMarketError("array size line needs 'rows cols'", line=size_lineno)
    m, n = dims
    if symmetry == "general":
        expected = m * n
    else:
        if m != n:
            raise MatrixMarketError(
                "symmetric storage requires a square matrix", line=size_lineno
            )
        expected = m * (m + 1) // 2 if symmetry == "symmetric" else m * (m - 1) // 2
    entries = body[1:]
    if len(entries) != expected:
        raise MatrixMarketError(
            f"expected {expected} values, found {len(entries)}", line=size_lineno
        )
    vals = np.empty(expected, dtype=float)
    for idx, (lineno, ln) in enumerate(entries):
        toks = ln.split()
        if len(toks) != 1:
            raise MatrixMarketError(f"expected one value per line, got {ln!r}", line=lineno)
        try:
            vals[idx] = float(toks[0])
        except ValueError:
            raise MatrixMarketError(f"bad value {ln!r}", line=lineno)
    if symmetry == "general":
        A = vals.reshape((n, m)).T.copy()  # column-major order
    else:
        A = np.zeros((m, n))
        pos = 0
        sign = -1.0 if symmetry == "skew-symmetric" else 1.0
        for j in range(n):
            start = j + 1 if symmetry == "skew-symmetric" else j
            for i in range(start, m):
                A[i, j] = vals[pos]
                if i != j:
                    A[j, i] = sign * vals[pos]
                pos += 1
    return DenseOperator(A)


def save_matrix_market(path, matrix):
    """Write a dense array or sparse matrix as a real general MM file."""
    with open(path, "w", encoding="ascii") as fh:
        if sp.issparse(matrix):
            coo = sp.coo_matrix(matrix)
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
        else:
            A = np.asarray(matrix, dtype=float)
            fh.write("%%MatrixMarket matrix array real general\n")
            fh.write(f"{A.shape[0]} {A.shape[1]}\n")
            for j in range(A.shape[1]):
                for i in range(A.shape[0]):
                    fh.write(f"{float(A[i, j])!r}\n")


# -- Tikhonov normal equations ----------------------------------------------


def normal_equation_solve(
    A, b, alpha, dense_threshold=DENSE_SOLVE_MAX_N, max_iter=None, gram=None
):
    """Solve (A^T A + alpha I) x = A^T b to relative residual 1e-10.

    Small systems go through a dense Cholesky factorization; larger ones
    through conjugate gradients on the (SPD) normal equations. The
    residual bound is verified either way.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    A = as_operator(A)
    b = np.asarray(b, dtype=float)
    g = A.rmatvec(b)
    gnorm = np.linalg.norm(g)
    tol = 1e-10 * gnorm
    if gnorm == 0.0:
        return np.zeros(A.cols)

    n = A.cols
    if n <= dense_threshold:
        G = A.gram() if gram is None else gram
        K = G + alpha * np.eye(n)
        c, low = cho_factor(K)
        x = cho_solve((c, low), g)
        r = K @ x - g
        if np.linalg.norm(r) > tol:  # one refinement pass; alpha>0 keeps K SPD
            x = x - cho_solve((c, low), r)
            r = K @ x - g
        if np.linalg.norm(r) > tol:
            raise ConvergenceFailure(
                "dense normal-equation solve missed tolerance",
                achieved_residual=float(np.linalg.norm(r)),
            )
        return x

    # CG on v -> A^T(A v) + alpha v
    if max_iter is None:
        max_iter = 10 * n
    x = np.zeros(n)
    r = g.copy()
    p = r.copy()
    rho = float(r @ r)
    for _ in range(max_iter):
        if np.sqrt(rho) <= tol:
            break
        q = A.rmatvec(A.matvec(p)) + alpha * p
        a = rho / float(p @ q)
        x += a * p
        r -= a * q
        rho_new = float(r @ r)
        p = r + (rho_new / rho) * p
        rho = rho_new
    true_res = np.linalg.norm(A.rmatvec(A.matvec(x)) + alpha * x - g)
    if true_res > tol:
        raise ConvergenceFailure(
            f"CG on normal equations missed tolerance after {max_iter} iterations",
            achieved_residual=float(true_res),
        )
    return x
