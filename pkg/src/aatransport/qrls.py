"""Incremental dense QR factorization for small least-squares problems.

Maintains an economy QR of a tall matrix of history columns, supporting
appending a new column on the right and deleting the oldest column on the
left (sliding window). Column counts are small (the acceleration depth,
typically <= 15) so everything is stored dense.
"""

import numpy as np
from scipy.linalg import solve_triangular

# Relative threshold below which a diagonal entry of R marks its column as
# numerically dependent on the preceding ones.
RANK_TOL = 1e-14


class RankDeficiencyError(Exception):
    """Least-squares solve hit a numerically singular R.

    The offending column index is reported so the caller can decide how to
    repair the history (e.g. drop the oldest column and retry).
    """

    def __init__(self, col_index: int):
        self.col_index = col_index
        super().__init__(f"rank-deficient history column {col_index}")


class QrFactor:
    """Economy QR (q: n_rows x n_cols, r: n_cols x n_cols upper triangular)
    of a sliding window of columns.

    Append uses Gram-Schmidt with a single reorthogonalization pass; the
    front-column delete is a Givens downdate of the remaining Hessenberg R.
    """

    def __init__(self, n_rows: int, max_cols: int):
        if n_rows < 1 or max_cols < 1:
            raise ValueError("n_rows and max_cols must be positive")
        self.n_rows = n_rows
        self.max_cols = max_cols
        self.q = np.zeros((n_rows, 0))
        self.r = np.zeros((0, 0))

    @property
    def n_cols(self) -> int:
        return self.r.shape[0]

    def append(self, column) -> None:
        """Append `column` as the newest (rightmost) column.

        A column that is numerically dependent on the existing ones is still
        appended but flagged; query first_deficient_column() or let
        solve_lsq raise.
        """
        column = np.asarray(column, dtype=float)
        if column.shape != (self.n_rows,):
            raise ValueError(
                f"column has shape {column.shape}, expected ({self.n_rows},)")
        if self.n_cols >= self.max_cols:
            raise ValueError("factor is at its maximum column count")
        if self.n_cols >= self.n_rows:
            # a full orthonormal basis cannot be extended; the appended
            # column would have no orthogonal component
            raise ValueError("factor already spans the row space")

        v = column.copy()
        h = self.q.T @ v
        v -= self.q @ h
        # one DGKS reorthogonalization pass keeps q'q near identity over
        # long append/pop sequences
        dh = self.q.T @ v
        v -= self.q @ dh
        h += dh
        rho = float(np.linalg.norm(v))

        m = self.n_cols
        r_new = np.zeros((m + 1, m + 1))
        r_new[:m, :m] = self.r
        r_new[:m, m] = h
        r_new[m, m] = rho
        q_col = v / rho if rho > 0.0 else np.zeros(self.n_rows)
        self.q = np.column_stack([self.q, q_col])
        self.r = r_new

    def pop_front(self) -> None:
        """Remove the oldest (leftmost) column and re-triangularize."""
        m = self.n_cols
        if m == 0:
            raise ValueError("cannot pop from an empty factor")
        # dropping column 0 of R leaves an m x (m-1) upper Hessenberg matrix;
        # Givens rotations restore triangular form and update Q accordingly
        r = self.r[:, 1:].copy()
        q = self.q.copy()
        for i in range(m - 1):
            a, b = r[i, i], r[i + 1, i]
            rad = np.hypot(a, b)
            if rad == 0.0:
                c, s = 1.0, 0.0
            else:
                c, s = a / rad, b / rad
            row_i = r[i, :].copy()
            r[i, :] = c * row_i + s * r[i + 1, :]
            r[i + 1, :] = -s * row_i + c * r[i + 1, :]
            col_i = q[:, i].copy()
            q[:, i] = c * col_i + s * q[:, i + 1]
            q[:, i + 1] = -s * col_i + c * q[:, i + 1]
        self.r = r[: m - 1, :]
        self.q = q[:, : m - 1]

    def first_deficient_column(self):
        """Index of the first column whose R diagonal is below the relative
        rank threshold, or None if the factor is numerically full rank."""
        for i in range(self.n_cols):
            col_norm = float(np.linalg.norm(self.r[:, i]))
            if abs(self.r[i, i]) <= RANK_TOL * col_norm or col_norm == 0.0:
                return i
        return None

    def solve_lsq(self, rhs) -> np.ndarray:
        """Minimize ||rhs - F g||_2 over g, where F is the represented
        column set; solved as r g = q' rhs by back substitution."""
        rhs = np.asarray(rhs, dtype=float)
        if self.n_cols == 0:
            raise ValueError("factor has no columns")
        if rhs.shape != (self.n_rows,):
            raise ValueError(
                f"rhs has shape {rhs.shape}, expected ({self.n_rows},)")
        bad = self.first_deficient_column()
        if bad is not None:
            raise RankDeficiencyError(bad)
        return solve_triangular(self.r, self.q.T @ rhs, lower=False)
