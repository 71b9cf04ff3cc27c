"""Ground-truth simulator for synthetic experiments and model-based checks.

This module is the only place allowed to touch the true system matrices. The
data-driven modules never import it; the dependency points strictly this way,
which is what makes the data-driven claims credible.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .data_model import (
    BasisSelection,
    SnapshotRecord,
    SubspaceBasis,
    subspace_contains,
    validate_snapshots,
)
from .errors import DimensionError, RankError
from .reduction import ReducedModel, lift_trajectory, project_trajectory


@dataclass(frozen=True)
class TrueSystem:
    """Known (A, B) of the discrete-time plant; oracle use only."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A of shape {A.shape} is not square")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B has {B.shape[0]} rows, A has {A.shape[0]}")
        svals = linalg.svdvals(B)
        if svals.size == 0 or svals[-1] < 1e-9 * svals[0] or B.shape[1] > B.shape[0]:
            raise RankError("input matrix must have full column rank")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def simulate_full(sys: TrueSystem, x0: np.ndarray, u_seq: np.ndarray) -> np.ndarray:
    """Roll out the true dynamics; returns n x (T+1) states for T inputs."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    U = np.atleast_2d(np.asarray(u_seq, dtype=float))
    if U.size == 0:
        U = U.reshape(sys.m, 0)
    if x0.shape != (sys.n,) or U.shape[0] != sys.m:
        raise DimensionError("initial state or input sequence does not match the system")
    T = U.shape[1]
    X = np.zeros((sys.n, T + 1))
    X[:, 0] = x0
    for k in range(T):
        X[:, k + 1] = sys.A @ X[:, k] + sys.B @ U[:, k]
    return X


def simulate_reduced(A_theta: np.ndarray, xbar0: np.ndarray, ubar_seq: np.ndarray) -> np.ndarray:
    """Roll out a reduced model; returns s x (T+1) reduced states."""
    A = np.atleast_2d(np.asarray(A_theta, dtype=float))
    xbar0 = np.asarray(xbar0, dtype=float).reshape(-1)
    Ub = np.atleast_2d(np.asarray(ubar_seq, dtype=float))
    if Ub.size == 0:
        Ub = Ub.reshape(A.shape[0], 0)
    if A.shape[0] != A.shape[1] or xbar0.shape != (A.shape[0],) or Ub.shape[0] != A.shape[0]:
        raise DimensionError("reduced state, matrix, and inputs are inconsistent")
    T = Ub.shape[1]
    Xb = np.zeros((A.shape[0], T + 1))
    Xb[:, 0] = xbar0
    for k in range(T):
        Xb[:, k + 1] = A @ Xb[:, k] + Ub[:, k]
    return Xb


def generate_data(
    sys: TrueSystem,
    x0s: np.ndarray | list[np.ndarray],
    u_seqs: np.ndarray | list[np.ndarray],
) -> SnapshotRecord:
    """Collect snapshot triples from one or more simulated runs.

    ``x0s``/``u_seqs`` may be single run arguments or equal-length lists;
    multi-run snapshots are concatenated column-wise, so the record need not
    come from a single trajectory.
    """
    if not isinstance(x0s, list):
        x0s, u_seqs = [x0s], [u_seqs]
    if len(x0s) != len(u_seqs):
        raise DimensionError("need one input sequence per initial state")
    X_cols, U_cols, Xp_cols = [], [], []
    for x0, u_seq in zip(x0s, u_seqs):
        traj = simulate_full(sys, x0, u_seq)
        U = np.atleast_2d(np.asarray(u_seq, dtype=float))
        if U.size == 0:
            continue
        X_cols.append(traj[:, :-1])
        U_cols.append(U)
        Xp_cols.append(traj[:, 1:])
    if not X_cols:
        raise DimensionError("no snapshots generated; all runs were empty")
    return validate_snapshots(np.hstack(X_cols), np.hstack(U_cols), np.hstack(Xp_cols))


def random_system(
    n: int, m: int, rng: np.random.Generator, radius: float = 0.9
) -> TrueSystem:
    """Random system with the state matrix scaled to a target spectral radius."""
    A = rng.standard_normal((n, n))
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    if rho > 0:
        A *= radius / rho
    for _ in range(50):
        B = rng.standard_normal((n, m))
        if np.linalg.matrix_rank(B) == m:
            return TrueSystem(A, B)
    raise RankError("failed to draw a full-column-rank input matrix")


def random_invariant_instance(
    n: int,
    s: int,
    m: int,
    rng: np.random.Generator,
    radius: float = 0.8,
    steps: int = 4,
    runs: int = 2,
    input_scale: float = 1.0,
) -> tuple[TrueSystem, SnapshotRecord, np.ndarray]:
    """System with an s-dimensional invariant subspace containing the input image,
    plus snapshot data collected inside it.

    The restricted dynamics are scaled to the requested spectral radius, the
    input image sits inside the subspace, and all runs start there, so the data
    subspace has dimension s and the invariance condition holds by construction.
    Returns the system, the record, and an orthonormal subspace basis.
    """
    if not 1 <= s <= n or m > s:
        raise DimensionError("need 1 <= s <= n and m <= s for the construction")
    A11 = rng.standard_normal((s, s))
    rho = float(np.max(np.abs(np.linalg.eigvals(A11))))
    if rho > 0:
        A11 *= radius / rho
    A12 = rng.standard_normal((s, n - s))
    A22 = rng.standard_normal((n - s, n - s))
    if n > s:
        rho22 = float(np.max(np.abs(np.linalg.eigvals(A22))))
        if rho22 > 0:
            A22 *= radius / rho22
    A_block = np.block(
        [[A11, A12], [np.zeros((n - s, s)), A22]]
    )
    while True:
        B1 = rng.standard_normal((s, m))
        if np.linalg.matrix_rank(B1) == m:
            break
    B_block = np.vstack([B1, np.zeros((n - s, m))])
    T, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sys = TrueSystem(T @ A_block @ T.T, T @ B_block)
    subspace = T[:, :s]

    for _ in range(50):
        x0s = [subspace @ rng.standard_normal(s) for _ in range(runs)]
        u_seqs = [input_scale * rng.standard_normal((m, steps)) for _ in range(runs)]
        record = generate_data(sys, x0s, u_seqs)
        if np.linalg.matrix_rank(record.X, tol=1e-8) == s:
            return sys, record, subspace
    raise RankError("restricted excitation failed to span the invariant subspace")


def verify_identities(
    sys: TrueSystem,
    record: SnapshotRecord,
    basis: BasisSelection,
    model: ReducedModel,
) -> dict[str, float]:
    """Residuals of every model-based identity the data-driven path cannot check.

    Covers: the snapshot relation, the input-matrix-dependent reduced matrix
    collapsing to the data-only one, the intertwining relation, eigenvalue
    inclusion, trajectory projection/lift round-trips, and closed-loop
    invariance of the data subspace.
    """
    A, B = sys.A, sys.B
    K, theta, A_theta = model.K, model.theta, model.A_theta
    Xl = basis.left_inverse()

    residuals: dict[str, float] = {}
    residuals["snapshot_relation"] = float(
        np.linalg.norm(record.Xplus - (A @ record.X + B @ record.U))
    )
    # Input-matrix-dependent reduced matrix; its correction term vanishes when
    # the gain equation holds, collapsing it to the data-only expression.
    A_B = Xl @ record.Xplus @ theta - Xl @ B @ (record.U @ theta - K @ basis.Xbar)
    residuals["reduced_matrix_collapse"] = float(np.linalg.norm(A_B - A_theta))
    residuals["intertwining"] = float(
        np.linalg.norm((A + B @ K) @ basis.Xbar - basis.Xbar @ A_theta)
    )
    eig_cl = np.linalg.eigvals(A + B @ K)
    eig_red = np.linalg.eigvals(A_theta)
    residuals["eigenvalue_inclusion"] = float(
        max(np.min(np.abs(eig_cl - lam)) for lam in eig_red)
    )

    # Closed-loop run with zero feedforward, projected and lifted back.
    rng = np.random.default_rng(0)
    x0 = basis.Xbar @ rng.standard_normal(basis.s)
    cl = TrueSystem(A + B @ K, B)
    traj = simulate_full(cl, x0, np.zeros((sys.m, 20)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        xbar = project_trajectory(basis, traj)
    reduced = simulate_reduced(A_theta, xbar[:, 0], np.zeros((basis.s, 20)))
    # Relative per step: closed-loop trajectories may grow under the data gain.
    scale = 1.0 + np.linalg.norm(reduced, axis=0)
    residuals["projection_consistency"] = float(
        np.max(np.linalg.norm(xbar - reduced, axis=0) / scale)
    )
    lifted = lift_trajectory(basis, reduced)
    lift_defect = lifted[:, 1:] - ((A + B @ K) @ lifted[:, :-1])
    residuals["lift_consistency"] = float(
        np.max(np.linalg.norm(lift_defect, axis=0) / (1.0 + np.linalg.norm(lifted[:, 1:], axis=0)))
    )

    _, residuals["closed_loop_invariance"] = subspace_contains(
        SubspaceBasis(basis.Xbar, basis.rank_tol), (A + B @ K) @ basis.Xbar, 1e-8
    )
    return residuals
