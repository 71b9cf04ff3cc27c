"""Snapshot containers, rank-revealing basis selection, and generalized inverses.

All downstream modules (reduction, stabilization, steering) work exclusively
with the types defined here; none of them ever sees the true system matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import (
    DataError,
    DegenerateDataError,
    DimensionError,
    ParseError,
    RankError,
)

DEFAULT_RANK_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SnapshotRecord:
    """One batch of input/state snapshot data: states, inputs, successors."""

    X: np.ndarray
    U: np.ndarray
    Xplus: np.ndarray
    n: int
    m: int
    N: int


@dataclass(frozen=True)
class BasisSelection:
    """Independent snapshot columns spanning the data subspace.

    ``Xbar`` stacks the selected state columns, ``Ubar`` the matching input
    columns, ``E`` the 0/1 column selector with ``[Xbar; Ubar] = [X; U] E``.
    """

    Xbar: np.ndarray
    Ubar: np.ndarray
    indices: tuple[int, ...]
    E: np.ndarray
    s: int
    rank_tol: float

    def left_inverse(self) -> np.ndarray:
        """Pseudoinverse of ``Xbar``; the canonical left inverse used throughout."""
        return left_inverse(self.Xbar, self.rank_tol)


@dataclass(frozen=True)
class SubspaceBasis:
    """A subspace of R^d given by a (not necessarily orthonormal) basis matrix."""

    B: np.ndarray
    tol: float

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    def orthonormal(self) -> np.ndarray:
        if self.B.size == 0:
            return np.zeros((self.B.shape[0], 0))
        return linalg.orth(self.B)


def load_matrix(path, expected_rows: int | None = None) -> np.ndarray:
    """Read a headerless CSV of decimal literals into a 2-D array."""
    text = Path(path).read_text()
    rows: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: non-numeric field") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{path}: ragged rows")
    if expected_rows is not None and len(rows) != expected_rows:
        raise DimensionError(
            f"{path}: expected {expected_rows} rows, found {len(rows)}"
        )
    return np.array(rows, dtype=float)


def validate_snapshots(X, U, Xplus) -> SnapshotRecord:
    """Check shapes and finiteness and wrap the triple in a SnapshotRecord."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    Xplus = np.atleast_2d(np.asarray(Xplus, dtype=float))
    n, N = X.shape
    if Xplus.shape != (n, N):
        raise DimensionError(
            f"successor snapshots have shape {Xplus.shape}, expected {(n, N)}"
        )
    if U.shape[1] != N:
        raise DimensionError(
            f"input snapshots have {U.shape[1]} columns, states have {N}"
        )
    m = U.shape[0]
    for name, M in (("X", X), ("U", U), ("Xplus", Xplus)):
        if not np.all(np.isfinite(M)):
            raise DataError(f"{name} contains NaN or Inf entries")
    return SnapshotRecord(_frozen(X), _frozen(U), _frozen(Xplus), n, m, N)


def select_basis(record: SnapshotRecord, rank_tol: float = DEFAULT_RANK_TOL) -> BasisSelection:
    """Pick the lexicographically smallest maximal independent column set of X.

    Greedy lowest-index selection against the numerical-rank threshold
    ``rank_tol * sigma_max(X)``; by the matroid exchange property this yields
    the lexicographically smallest index set among all max-rank subsets.
    """
    if not 0.0 < rank_tol < 1.0:
        raise ValueError(f"rank_tol must lie in (0, 1), got {rank_tol}")
    X = record.X
    svals = linalg.svdvals(X)
    smax = float(svals[0]) if svals.size else 0.0
    s = int(np.count_nonzero(svals >= rank_tol * smax)) if smax > 0 else 0
    if s == 0:
        raise DegenerateDataError("state snapshot matrix is numerically zero")

    threshold = rank_tol * smax
    indices: list[int] = []
    Q = np.zeros((record.n, 0))
    for j in range(record.N):
        r = X[:, j] - Q @ (Q.T @ X[:, j])
        r -= Q @ (Q.T @ r)  # second pass for orthogonality at tight tolerances
        norm = np.linalg.norm(r)
        if norm > threshold:
            Q = np.hstack([Q, (r / norm)[:, None]])
            indices.append(j)
            if len(indices) == s:
                break
    if len(indices) != s:
        # Greedy threshold disagreed with the SVD rank count on a borderline
        # instance; trust the greedy basis, it is independent by construction.
        s = len(indices)

    E = np.zeros((record.N, s))
    E[indices, np.arange(s)] = 1.0
    Xbar = record.X[:, indices]
    Ubar = record.U[:, indices]
    return BasisSelection(
        _frozen(Xbar), _frozen(Ubar), tuple(indices), _frozen(E), s, rank_tol
    )


def left_inverse(M: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose left inverse of a full-column-rank matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    svals = linalg.svdvals(M)
    if M.shape[1] > M.shape[0] or svals.size == 0 or svals[-1] < tol * max(svals[0], 1e-300):
        raise RankError(f"matrix of shape {M.shape} is not full column rank")
    return np.linalg.pinv(M)


def right_inverse(M: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose right inverse of a full-row-rank matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    svals = linalg.svdvals(M)
    if M.shape[0] > M.shape[1] or svals.size == 0 or svals[-1] < tol * max(svals[0], 1e-300):
        raise RankError(f"matrix of shape {M.shape} is not full row rank")
    return np.linalg.pinv(M)


def subspace_contains(
    basis: SubspaceBasis, vectors: np.ndarray, tol: float
) -> tuple[bool, float]:
    """Test whether all columns of ``vectors`` lie in the span of ``basis``.

    Returns the verdict together with the projection-defect residual
    ``||(I - Pi) V||_F / max(1, ||V||_F)``.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.shape[0] != basis.B.shape[0]:
        raise DimensionError(
            f"vectors live in R^{V.shape[0]}, basis in R^{basis.B.shape[0]}"
        )
    Q = basis.orthonormal()
    defect = V - Q @ (Q.T @ V)
    residual = float(np.linalg.norm(defect) / max(1.0, np.linalg.norm(V)))
    return residual <= tol, residual


def nullspace_basis(M: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    """Orthonormal basis of the numerical kernel of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise DataError("matrix contains NaN or Inf entries")
    K = linalg.null_space(M, rcond=tol)
    return SubspaceBasis(_frozen(K), tol)
