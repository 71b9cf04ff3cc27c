"""Stabilizing-gain synthesis over the reduced-model family.

The search for a stable family member is a semidefinite feasibility problem in
a Lyapunov matrix P and the bilinearity-resolving variable Z = theta P. A found
candidate is polished (exact affine constraint, fresh Lyapunov certificate)
before being packaged, so every certificate invariant holds to high accuracy
independent of solver sloppiness.
"""
from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np
from scipy import linalg

from .data_model import BasisSelection, SnapshotRecord, left_inverse, right_inverse
from .errors import DimensionError, RankError, SolverError
from .reduction import DEFAULT_INV_TOL, check_invariance
from .solver_interface import DEFAULT_SOLVER, Infeasible, solve_feasibility

DEFAULT_MARGIN = 1e-6


@dataclass(frozen=True)
class StabilizationCertificate:
    """Feasible point of the stability search plus the recovered gain."""

    theta: np.ndarray
    P: np.ndarray
    Z: np.ndarray
    K: np.ndarray
    spectral_radius: float
    lmi_margin: float
    invariance_residual: float
    gain_residual: float
    solver_status: str


@dataclass(frozen=True)
class FullRankGain:
    """Output of the rank-n shortcut: gain, parameter, reduced matrix, radius."""

    K: np.ndarray
    theta: np.ndarray
    A_theta: np.ndarray
    spectral_radius: float


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"matrix of shape {M.shape} is not square")
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def stabilize(
    record: SnapshotRecord,
    basis: BasisSelection,
    margin: float = DEFAULT_MARGIN,
    inv_tol: float = DEFAULT_INV_TOL,
    deadline: float | None = None,
    solver: str = DEFAULT_SOLVER,
) -> StabilizationCertificate | Infeasible:
    """Search the family for a stable reduced model and recover its gain.

    Feasibility alone certifies stability, not invariance; the invariance
    residual for the recovered theta is re-evaluated and reported alongside.
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    s, N = basis.s, record.N
    Xl = basis.left_inverse()
    M = Xl @ record.Xplus  # propagation map applied to column combinations

    P = cp.Variable((s, s), symmetric=True)
    Z = cp.Variable((N, s))
    G = M @ Z
    constraints = [
        P >> margin * np.eye(s),
        cp.bmat([[P, G], [G.T, P]]) >> margin * np.eye(2 * s),
        basis.Xbar @ P - record.X @ Z == 0,
        cp.trace(P) == float(s),  # fixes the free scaling of (P, Z)
    ]
    result = solve_feasibility(
        constraints,
        {"P": P, "Z": Z},
        objective=cp.sum_squares(Z),
        deadline=deadline,
        solver=solver,
    )
    if isinstance(result, Infeasible):
        return result

    P_raw, Z_raw = result["P"], result["Z"]
    theta = Z_raw @ np.linalg.inv(P_raw)
    # Enforce X theta = Xbar exactly; the defect lies in the row space of X.
    theta = theta - np.linalg.pinv(record.X) @ (record.X @ theta - basis.Xbar)
    A_theta = Xl @ record.Xplus @ theta
    rho = spectral_radius(A_theta)
    if rho >= 1.0:
        raise SolverError(
            f"solver claimed feasibility but the recovered model has radius {rho:.6f}"
        )

    # Fresh, well-conditioned certificate for the polished theta.
    P_new = linalg.solve_discrete_lyapunov(A_theta, np.eye(s))
    P_new = 0.5 * (P_new + P_new.T)
    P_new *= s / np.trace(P_new)
    Z_new = theta @ P_new
    K = (record.U @ Z_new) @ left_inverse(basis.Xbar @ P_new)
    gain_residual = float(
        np.linalg.norm(record.U @ Z_new - K @ basis.Xbar @ P_new)
        / max(1.0, np.linalg.norm(record.U @ Z_new))
    )
    block = np.block([[P_new, A_theta @ P_new], [P_new @ A_theta.T, P_new]])
    achieved = min(
        float(np.min(linalg.eigvalsh(P_new))),
        float(np.min(linalg.eigvalsh(0.5 * (block + block.T)))),
    )
    if achieved <= 0:
        raise SolverError("polish step failed to produce a positive-definite certificate")
    _, inv_residual = check_invariance(record, basis, theta, inv_tol)
    return StabilizationCertificate(
        theta=theta,
        P=P_new,
        Z=Z_new,
        K=K,
        spectral_radius=rho,
        lmi_margin=achieved,
        invariance_residual=inv_residual,
        gain_residual=gain_residual,
        solver_status="optimal",
    )


def full_rank_gain(record: SnapshotRecord, rank_tol: float = 1e-9) -> FullRankGain:
    """Shortcut when the state snapshots span the whole state space.

    The gain is the input snapshots times a right inverse of the state
    snapshots, and the reduced matrix is similar to ``Xplus Xr``.
    """
    from .data_model import select_basis

    svals = linalg.svdvals(record.X)
    rank = int(np.count_nonzero(svals >= rank_tol * svals[0])) if svals.size else 0
    if rank < record.n:
        raise RankError(f"state snapshots have rank {rank} < n = {record.n}")
    Xr = right_inverse(record.X, rank_tol)
    K = record.U @ Xr
    basis = select_basis(record, rank_tol)
    theta = Xr @ basis.Xbar
    Xbar_inv = np.linalg.inv(basis.Xbar)
    A_theta = Xbar_inv @ record.Xplus @ Xr @ basis.Xbar
    return FullRankGain(K, theta, A_theta, spectral_radius(record.Xplus @ Xr))
