"""CSR matrices and Jacobi-preconditioned CG / BiCGStab.

The storage is plain CSR; products go through scipy's compiled CSR kernel,
which walks each row in stored order and is therefore deterministic.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import Breakdown, DimensionMismatch, NoConvergence

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        for name in ("row_offsets", "col_indices", "values"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.row_offsets[-1])

    @property
    def _csr(self):
        m = self.__dict__.get("_scipy")
        if m is None:
            m = sp.csr_matrix(
                (self.values, self.col_indices, self.row_offsets), shape=self.shape, copy=False
            )
            self.__dict__["_scipy"] = m
        return m

    def to_scipy(self):
        return self._csr

    def to_dense(self):
        return self._csr.toarray()

    def diagonal(self):
        return self._csr.diagonal()

    def __matmul__(self, x):
        return spmv(self, x)

    def transpose(self):
        return from_scipy(self._csr.T.tocsr(), symmetric=self.symmetric)

    def check_invariants(self):
        ro, ci = self.row_offsets, self.col_indices
        assert ro[0] == 0 and ro[-1] == ci.size == self.values.size
        assert np.all(np.diff(ro) >= 0)
        for i in range(self.n_rows):
            row = ci[ro[i] : ro[i + 1]]
            assert np.all(np.diff(row) > 0), f"row {i} not strictly increasing"
        assert np.all((ci >= 0) & (ci < self.n_cols))


def from_scipy(m, symmetric=False):
    m = sp.csr_matrix(m)
    m.sum_duplicates()
    m.sort_indices()
    return SparseMatrix(
        m.shape[0], m.shape[1], m.indptr.astype(np.int64), m.indices.astype(np.int64),
        m.data.astype(float), symmetric,
    )


def from_dense(a, symmetric=False):
    return from_scipy(sp.csr_matrix(np.asarray(a, dtype=float)), symmetric)


def identity(n):
    return from_scipy(sp.identity(n, format="csr"), symmetric=True)


class TripletPattern:
    """Fixed (row, col) triplet layout compressed once to CSR.

    ``assemble(values)`` sums duplicate triplets in triplet order via
    ``np.bincount`` so repeated assemblies on one mesh reuse the structure
    and stay bit-reproducible.
    """

    def __init__(self, rows, cols, shape):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        n_rows, n_cols = shape
        keys = rows * n_cols + cols
        uniq, inv = np.unique(keys, return_inverse=True)
        self.shape = shape
        self.slot = inv.ravel()
        self.nnz = uniq.size
        self.col_indices = uniq % n_cols
        r = uniq // n_cols
        self.row_offsets = np.concatenate([[0], np.cumsum(np.bincount(r, minlength=n_rows))])

    def assemble(self, values, symmetric=False):
        vals = np.bincount(self.slot, weights=np.asarray(values, dtype=float).ravel(),
                           minlength=self.nnz)
        return SparseMatrix(self.shape[0], self.shape[1], self.row_offsets, self.col_indices,
                            vals, symmetric)


def from_triplets(rows, cols, values, shape, symmetric=False):
    return TripletPattern(rows, cols, shape).assemble(values, symmetric)


def combine(terms, symmetric=None):
    """Sum of ``coef * matrix`` over ``terms``; ``None`` matrices are skipped."""
    acc = None
    sym = True
    for coef, mat in terms:
        if mat is None:
            continue
        sym = sym and mat.symmetric
        part = coef * mat.to_scipy()
        acc = part if acc is None else acc + part
    return from_scipy(acc, symmetric=sym if symmetric is None else symmetric)


def spmv(A, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.n_cols:
        raise DimensionMismatch(f"matrix {A.shape} times vector of shape {x.shape}")
    return A._csr @ x


def is_symmetric(A, rtol=1e-12):
    d = (A.to_scipy() - A.to_scipy().T).tocoo()
    scale = np.abs(A.values).max(initial=0.0)
    return d.nnz == 0 or np.abs(d.data).max() <= rtol * max(scale, 1e-300)


class SolveResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float


def _jacobi(A):
    d = A.diagonal().copy()
    d[d == 0.0] = 1.0
    return 1.0 / d


def _prepare(A, b, x0):
    b = np.asarray(b, dtype=float)
    if A.n_rows != A.n_cols or b.shape != (A.n_rows,):
        raise DimensionMismatch(f"system {A.shape} with right-hand side {b.shape}")
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    return b, x


def _rel_residual(A, x, b, bnorm):
    return float(np.linalg.norm(b - spmv(A, x)) / bnorm)


def cg_solve(A, b, tol=DEFAULT_TOL, max_iter=None, x0=None):
    """Preconditioned CG for SPD ``A``; stops when ``|b - Ax| <= tol |b|``."""
    b, x = _prepare(A, b, x0)
    n = b.size
    max_iter = 10 * n if max_iter is None else max_iter
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros_like(b), 0, 0.0)
    dinv = _jacobi(A)
    r = b - spmv(A, x)
    history = []
    it = 0
    while True:
        z = dinv * r
        p = z.copy()
        rz = r @ z
        while it < max_iter:
            rn = np.linalg.norm(r) / bnorm
            history.append(rn)
            if rn <= tol:
                break
            Ap = spmv(A, p)
            pAp = p @ Ap
            if pAp <= 0.0:
                raise NoConvergence("CG: matrix not positive definite", x, rn, it, history)
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            z = dinv * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
            it += 1
        true_res = _rel_residual(A, x, b, bnorm)
        if true_res <= tol:
            return SolveResult(x, it, true_res)
        if it >= max_iter:
            raise NoConvergence(
                f"CG: residual {true_res:.3e} > {tol:.1e} after {it} iterations",
                x, true_res, it, history,
            )
        # recurrence drifted from the true residual: restart from x
        r = b - spmv(A, x)


def bicgstab_solve(A, b, tol=DEFAULT_TOL, max_iter=None, x0=None):
    """Right-preconditioned BiCGStab with one restart on breakdown."""
    b, x = _prepare(A, b, x0)
    n = b.size
    max_iter = 10 * n if max_iter is None else max_iter
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros_like(b), 0, 0.0)
    dinv = _jacobi(A)
    history = []
    it = 0
    restarts = 0
    tiny = np.finfo(float).tiny

    r = b - spmv(A, x)
    while True:
        r_hat = r.copy()
        rho = alpha = omega = 1.0
        v = np.zeros_like(b)
        p = np.zeros_like(b)
        broke = None
        while it < max_iter:
            rn = np.linalg.norm(r) / bnorm
            history.append(rn)
            if rn <= tol:
                break
            rho_new = r_hat @ r
            if abs(rho_new) <= tiny or abs(rho_new) < 1e-30 * np.linalg.norm(r_hat) * np.linalg.norm(r):
                broke = "rho"
                break
            beta = (rho_new / rho) * (alpha / omega)
            p = r + beta * (p - omega * v)
            y = dinv * p
            v = spmv(A, y)
            rv = r_hat @ v
            if abs(rv) <= tiny:
                broke = "r_hat.v"
                break
            alpha = rho_new / rv
            s = r - alpha * v
            if np.linalg.norm(s) / bnorm <= tol:
                x += alpha * y
                r = s
                it += 1
                continue
            zs = dinv * s
            t = spmv(A, zs)
            tt = t @ t
            if tt <= tiny:
                broke = "t.t"
                break
            omega = (t @ s) / tt
            x += alpha * y + omega * zs
            r = s - omega * t
            rho = rho_new
            it += 1
            if omega == 0.0:
                broke = "omega"
                break
        if broke is None:
            true_res = _rel_residual(A, x, b, bnorm)
            if true_res <= tol:
                return SolveResult(x, it, true_res)
            if it >= max_iter:
                raise NoConvergence(
                    f"BiCGStab: residual {true_res:.3e} > {tol:.1e} after {it} iterations",
                    x, true_res, it, history,
                )
            r = b - spmv(A, x)
            continue
        if restarts >= 1:
            raise Breakdown(
                f"BiCGStab breakdown ({broke}) after restart",
                x, _rel_residual(A, x, b, bnorm), it, history,
            )
        restarts += 1
        r = b - spmv(A, x)
