"""Growable Golub-Kahan bidiagonalization with full reorthogonalization.

One expansion adds one column to V (and normally one to U), maintaining
A V_k = U_{k+1} B_{k+1,k} with orthonormal columns and lower bidiagonal B.
Exact invariant subspaces surface as breakdown; the factorization then
stays usable at its final dimension.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateRhsError
from .linop import as_operator


class BidiagBreakdown(Exception):
    """Krylov subspace became invariant; the factorization is final."""


class BidiagFactorization:
    """Holds U, B, V column blocks, growable one Krylov step at a time.

    Column storage doubles amortized; ``U``/``V``/``B`` properties expose
    contiguous views of the active columns. On a nu-breakdown the exactly
    zero trailing row of B is dropped together with the never-created
    u_{k+1}, which leaves A V = U B intact with square B.
    """

    def __init__(self, A, b):
        self.A = as_operator(A)
        b = np.asarray(b, dtype=float)
        beta = np.linalg.norm(b)
        if beta == 0.0:
            raise DegenerateRhsError("cannot bidiagonalize with b = 0")
        m, n = self.A.shape
        self._U = np.zeros((m, 8))
        self._V = np.zeros((n, 8))
        self._U[:, 0] = b / beta
        self._nu = 1  # columns in U
        self._nv = 0  # columns in V
        self.mus: list[float] = []
        self.nus: list[float] = []
        self.beta = float(beta)
        self.breakdown = False
        self.breakdown_tol = 1e-14 * self.A.frobenius_norm()

    def _grow_u(self):
        self._nu += 1
        if self._nu > self._U.shape[1]:
            self._U = np.concatenate([self._U, np.zeros_like(self._U)], axis=1)

    def _grow_v(self):
        self._nv += 1
        if self._nv > self._V.shape[1]:
            self._V = np.concatenate([self._V, np.zeros_like(self._V)], axis=1)

    @property
    def k(self) -> int:
        return self._nv

    @property
    def U(self):
        return self._U[:, : self._nu]

    @property
    def V(self):
        return self._V[:, : self._nv]

    @property
    def B(self):
        B = np.zeros((self._nu, self._nv))
        for i, mu in enumerate(self.mus):
            B[i, i] = mu
        for i, nu in enumerate(self.nus):
            B[i + 1, i] = nu
        return B

    @property
    def c(self):
        c = np.zeros(self._nu)
        c[0] = self.beta
        return c

    def _mgs(self, vec, block, count):
        # one full modified Gram-Schmidt pass against the stored columns
        for j in range(count):
            col = block[:, j]
            vec -= (col @ vec) * col
        return vec

    def expand(self) -> bool:
        """Grow the factorization by one column of V.

        Returns True on a clean expansion. Returns False when the new
        direction falls below the breakdown tolerance; the factorization
        is then final (and ``breakdown`` is set).
        """
        if self.breakdown:
            raise BidiagBreakdown("factorization already broke down")
        m, n = self.A.shape
        if self.k >= min(m, n):
            raise BidiagBreakdown(f"subspace already full at k = {self.k}")

        k = self.k
        r = self.A.rmatvec(self._U[:, k])
        if k > 0:
            r = r - self.nus[-1] * self._V[:, k - 1]
        r = self._mgs(r, self._V, self._nv)
        mu = float(np.linalg.norm(r))
        if mu <= self.breakdown_tol:
            self.breakdown = True
            return False
        self._grow_v()
        self._V[:, k] = r / mu
        self.mus.append(mu)

        p = self.A.matvec(self._V[:, k]) - mu * self._U[:, k]
        p = self._mgs(p, self._U, self._nu)
        nu = float(np.linalg.norm(p))
        if nu <= self.breakdown_tol:
            self.breakdown = True
            return False
        self._grow_u()
        self._U[:, k + 1] = p / nu
        self.nus.append(nu)
        return True

    def can_expand(self) -> bool:
        return not self.breakdown and self.k < min(self.A.shape)

    def lift(self, y):
        """Map projected coordinates to the full space: x = V y."""
        y = np.asarray(y, dtype=float)
        return self.V @ y

    def projected_residual_norm(self, y) -> float:
        """||B y - c||, which equals ||A (V y) - b|| in exact arithmetic."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.k,):
            raise ValueError(f"expected length {self.k}, got {y.shape}")
        return float(np.linalg.norm(self.B @ y - self.c))


def init_bidiag(A, b) -> BidiagFactorization:
    """k = 0 factorization holding u_1 = b / ||b||."""
    return BidiagFactorization(A, b)
