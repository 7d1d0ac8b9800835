"""Minimal sparse linear algebra for the assembled systems.

Compressed-row storage built from triplets, a matrix-vector product, a
dense LU fallback for small systems and Jacobi-preconditioned restarted
GMRES for the fine grids, where the upwind matrix is nonsymmetric but
benign (the cell dependency graph of a monotone sweep is acyclic).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DIRECT_SIZE_LIMIT = 5000
DEFAULT_TOL = 1e-12


class SingularSystemError(RuntimeError):
    """The system has no unique solution; regularization (eps_reg > 0) may help."""


class IterationError(RuntimeError):
    """Iterative solver did not reach the requested tolerance."""

    def __init__(self, msg: str, x: np.ndarray, report: "SolveReport"):
        super().__init__(msg)
        self.best_iterate = x
        self.report = report


@dataclass
class SolveReport:
    method: str  # "direct" | "iterative"
    iterations: int
    residual: float
    regularization: float = 0.0


class SparseMatrix:
    """Square-agnostic CSR matrix; column indices sorted and unique per row."""

    def __init__(self, nrows: int, ncols: int, indptr, indices, values):
        self.nrows = nrows
        self.ncols = ncols
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=float)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return len(self.values)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.ncols,):
            raise ValueError(f"matvec expects a vector of length {self.ncols}")
        prod = self.values * x[self.indices]
        out = np.zeros(self.nrows)
        counts = np.diff(self.indptr)
        nonempty = counts > 0
        if prod.size:
            sums = np.add.reduceat(prod, self.indptr[:-1][nonempty])
            out[nonempty] = sums
        return out

    def diagonal(self) -> np.ndarray:
        if self.nrows != self.ncols:
            raise ValueError("diagonal of a non-square matrix")
        d = np.zeros(self.nrows)
        for i in range(self.nrows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            cols = self.indices[lo:hi]
            k = np.searchsorted(cols, i)
            if k < len(cols) and cols[k] == i:
                d[i] = self.values[lo + k]
        return d

    def transpose_matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.nrows,):
            raise ValueError(f"transpose_matvec expects a vector of length {self.nrows}")
        rows = np.repeat(np.arange(self.nrows), np.diff(self.indptr))
        out = np.zeros(self.ncols)
        np.add.at(out, self.indices, self.values * x[rows])
        return out

    def todense(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        rows = np.repeat(np.arange(self.nrows), np.diff(self.indptr))
        out[rows, self.indices] = self.values
        return out

    def write_coordinate_dump(self, path: str) -> None:
        """Plain 'row col value' text dump for debugging."""
        rows = np.repeat(np.arange(self.nrows), np.diff(self.indptr))
        with open(path, "w") as fh:
            for r, c, v in zip(rows, self.indices, self.values):
                fh.write(f"{r} {c} {v:.17g}\n")


def from_triplets(n: int, entries) -> SparseMatrix:
    """Square CSR from (row, col, value) triplets; duplicates are summed."""
    entries = list(entries)
    if not entries:
        return from_triplet_arrays(n, n, [], [], [])
    arr = np.asarray(entries, dtype=float)
    return from_triplet_arrays(n, n, arr[:, 0].astype(np.int64),
                               arr[:, 1].astype(np.int64), arr[:, 2])


def from_triplet_arrays(nrows: int, ncols: int, rows, cols, vals) -> SparseMatrix:
    """Build CSR from coordinate arrays; duplicate entries are summed."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    if rows.size and (rows.min() < 0 or rows.max() >= nrows):
        raise IndexError("triplet row index out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= ncols):
        raise IndexError("triplet column index out of range")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        keep = np.empty(rows.size, dtype=bool)
        keep[0] = True
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        group = np.cumsum(keep) - 1
        summed = np.zeros(int(group[-1]) + 1)
        np.add.at(summed, group, vals)
        rows, cols, vals = rows[keep], cols[keep], summed
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return SparseMatrix(nrows, ncols, indptr, cols, vals)


def solve_direct(a: SparseMatrix, b: np.ndarray) -> np.ndarray:
    """Dense LU with partial pivoting after densification; small systems only."""
    n = a.nrows
    if n != a.ncols:
        raise ValueError("solve_direct needs a square matrix")
    if n > DIRECT_SIZE_LIMIT:
        raise ValueError(f"dense solve limited to n <= {DIRECT_SIZE_LIMIT}, got {n}")
    b = np.asarray(b, dtype=float)
    try:
        return np.linalg.solve(a.todense(), b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "direct solve failed (singular matrix); the unregularized system can be "
            "underdetermined, retry with eps_reg > 0") from exc


def solve_iterative(a: SparseMatrix, b: np.ndarray, tol: float = DEFAULT_TOL,
                    max_iter: int | None = None, restart: int = 200,
                    x0: np.ndarray | None = None):
    """Restarted GMRES with diagonal right preconditioning; returns (x, SolveReport).

    Stops when ||Ax - b|| <= tol * ||b||. GMRES suits the upwind matrix:
    after Jacobi scaling the system is identity plus a nilpotent upstream
    coupling (the cell dependency graph of a monotone sweep is acyclic), so
    convergence arrives within the flow depth, well inside one restart
    cycle. Zero diagonal entries skip the preconditioner (scale 1). Raises
    IterationError with the best iterate attached on stagnation or when the
    iteration cap is hit.
    """
    n = a.nrows
    if n != a.ncols:
        raise ValueError("solve_iterative needs a square matrix")
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains non-finite entries")
    if max_iter is None:
        max_iter = 20 * n

    diag = a.diagonal()
    scale = np.where(np.abs(diag) > 0.0, diag, 1.0)

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolveReport("iterative", 0, 0.0)

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    target = tol * bnorm
    total = 0
    prev_cycle_resid = math.inf

    while True:
        r = b - a.matvec(x)
        beta = float(np.linalg.norm(r))
        if beta <= target:
            return x, SolveReport("iterative", total, beta / bnorm)
        if beta >= prev_cycle_resid * (1.0 - 1e-12):
            raise IterationError(
                f"GMRES stagnated after {total} iterations "
                f"(relative residual {beta / bnorm:.3e})",
                x, SolveReport("iterative", total, beta / bnorm))
        prev_cycle_resid = beta

        m = min(restart, max_iter - total)
        if m <= 0:
            raise IterationError(
                f"GMRES hit the iteration cap {max_iter} "
                f"(relative residual {beta / bnorm:.3e})",
                x, SolveReport("iterative", total, beta / bnorm))
        basis = np.empty((m + 1, n))
        basis[0] = r / beta
        hess = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        j_used = 0

        for j in range(m):
            total += 1
            w = a.matvec(basis[j] / scale)
            # modified Gram-Schmidt
            for i in range(j + 1):
                hess[i, j] = float(w @ basis[i])
                w -= hess[i, j] * basis[i]
            hnorm = float(np.linalg.norm(w))
            hess[j + 1, j] = hnorm
            if hnorm > 0.0:
                basis[j + 1] = w / hnorm
            # apply accumulated Givens rotations, then a new one
            for i in range(j):
                t1 = cs[i] * hess[i, j] + sn[i] * hess[i + 1, j]
                hess[i + 1, j] = -sn[i] * hess[i, j] + cs[i] * hess[i + 1, j]
                hess[i, j] = t1
            denom = math.hypot(hess[j, j], hess[j + 1, j])
            if denom == 0.0:
                # the Krylov space stopped growing without reaching b
                raise IterationError(
                    f"GMRES breakdown at iteration {total}: matrix is singular "
                    f"(relative residual {abs(g[j]) / bnorm:.3e})",
                    x, SolveReport("iterative", total, abs(g[j]) / bnorm))
            cs[j] = hess[j, j] / denom
            sn[j] = hess[j + 1, j] / denom
            hess[j, j] = denom
            hess[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            j_used = j + 1
            if abs(g[j + 1]) <= target or hnorm == 0.0 or total >= max_iter:
                break

        y = np.zeros(j_used)
        for i in range(j_used - 1, -1, -1):
            y[i] = (g[i] - hess[i, i + 1:j_used] @ y[i + 1:]) / hess[i, i]
        x = x + (y @ basis[:j_used]) / scale
