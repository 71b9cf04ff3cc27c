"""Data-expressed reduced models, their parametrized family, and invariance checks.

The reduced state matrix is obtained by projecting the snapshot update onto the
data subspace; the whole family of order-s models is parametrized by an affine
set of column-combination matrices, all computed from data alone.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data_model import (
    BasisSelection,
    SnapshotRecord,
    SubspaceBasis,
    nullspace_basis,
    subspace_contains,
)
from .errors import DimensionError, ParameterError

DEFAULT_INV_TOL = 1e-7
THETA_CONSTRAINT_TOL = 1e-8


@dataclass(frozen=True)
class ReducedModel:
    """A member of the reduced-model family together with its feedback gain."""

    theta: np.ndarray
    A_theta: np.ndarray
    K: np.ndarray
    basis: BasisSelection
    invariance_residual: float
    gain_residual: float


@dataclass(frozen=True)
class ThetaFamily:
    """Affine family of admissible parameters: selector plus kernel directions.

    Every member is ``E + Nker @ C`` for coefficient matrices C, where the
    columns of ``Etilde_basis.B`` span the kernel of the state snapshot matrix.
    """

    E: np.ndarray
    Etilde_basis: SubspaceBasis

    @property
    def kernel_dim(self) -> int:
        return self.Etilde_basis.dim

    def sample(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Draw one random family member; coefficients are iid normal."""
        q = self.kernel_dim
        s = self.E.shape[1]
        if q == 0:
            return self.E.copy()
        C = scale * rng.standard_normal((q, s))
        return self.E + self.Etilde_basis.B @ C


def _check_theta(record: SnapshotRecord, basis: BasisSelection, theta: np.ndarray) -> np.ndarray:
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if theta.shape != (record.N, basis.s):
        raise DimensionError(
            f"theta has shape {theta.shape}, expected {(record.N, basis.s)}"
        )
    defect = np.linalg.norm(record.X @ theta - basis.Xbar)
    if defect > THETA_CONSTRAINT_TOL * max(1.0, np.linalg.norm(basis.Xbar)):
        raise ParameterError(
            f"X @ theta deviates from Xbar by {defect:.3e}; not a family member"
        )
    return theta


def reduced_state_matrix(record: SnapshotRecord, basis: BasisSelection) -> np.ndarray:
    """Reduced state matrix for the plain column-selector parameter."""
    if basis.E.shape[0] != record.N:
        raise DimensionError("basis was built from data of a different length")
    return basis.left_inverse() @ record.Xplus @ basis.E


def reduced_state_matrix_theta(
    record: SnapshotRecord, basis: BasisSelection, theta: np.ndarray
) -> np.ndarray:
    """Reduced state matrix for an arbitrary family member."""
    theta = _check_theta(record, basis, theta)
    return basis.left_inverse() @ record.Xplus @ theta


def solve_feedback_gain(
    record: SnapshotRecord,
    basis: BasisSelection,
    theta: np.ndarray | None = None,
    R: np.ndarray | None = None,
) -> np.ndarray:
    """Gain K matching the selected input columns on the data subspace.

    Returns ``(U theta) Xbar^+ + R (I - Xbar Xbar^+)``; the free term R only
    acts on the orthogonal complement of the data subspace and defaults to 0.
    """
    if theta is None:
        theta = basis.E
    theta = _check_theta(record, basis, theta)
    Xl = basis.left_inverse()
    K = (record.U @ theta) @ Xl
    if R is not None:
        R = np.atleast_2d(np.asarray(R, dtype=float))
        if R.shape != (record.m, record.n):
            raise DimensionError(f"R has shape {R.shape}, expected {(record.m, record.n)}")
        K = K + R @ (np.eye(record.n) - basis.Xbar @ Xl)
    return K


def check_invariance(
    record: SnapshotRecord,
    basis: BasisSelection,
    theta: np.ndarray | None = None,
    tol: float = DEFAULT_INV_TOL,
) -> tuple[bool, float]:
    """Data-only sufficient test that the data subspace is controlled invariant.

    True iff the propagated columns ``Xplus theta`` stay inside the span of the
    selected state columns at the given tolerance.
    """
    if theta is None:
        theta = basis.E
    theta = _check_theta(record, basis, theta)
    span = SubspaceBasis(basis.Xbar, basis.rank_tol)
    return subspace_contains(span, record.Xplus @ theta, tol)


def theta_family(record: SnapshotRecord, basis: BasisSelection) -> ThetaFamily:
    """Parametrize all admissible theta as selector plus kernel-of-X directions."""
    kernel = nullspace_basis(record.X, basis.rank_tol)
    return ThetaFamily(basis.E, kernel)


def build_reduced_model(
    record: SnapshotRecord,
    basis: BasisSelection,
    theta: np.ndarray | None = None,
    R: np.ndarray | None = None,
    inv_tol: float = DEFAULT_INV_TOL,
) -> ReducedModel:
    """Assemble a ReducedModel with its gain and diagnostic residuals."""
    if theta is None:
        theta = basis.E
    theta = _check_theta(record, basis, theta)
    A_theta = reduced_state_matrix_theta(record, basis, theta)
    K = solve_feedback_gain(record, basis, theta, R)
    _, inv_res = check_invariance(record, basis, theta, inv_tol)
    gain_res = float(np.linalg.norm(record.U @ theta - K @ basis.Xbar))
    return ReducedModel(theta, A_theta, K, basis, inv_res, gain_res)


def project_trajectory(
    basis: BasisSelection, x_traj: np.ndarray, tol: float = DEFAULT_INV_TOL
) -> np.ndarray:
    """Project full states onto the reduced coordinates, column per time step.

    States outside the data subspace are projected anyway but trigger a warning;
    the reduced trajectory is then only an approximation.
    """
    X = np.atleast_2d(np.asarray(x_traj, dtype=float))
    if X.shape[0] != basis.Xbar.shape[0]:
        raise DimensionError(
            f"states live in R^{X.shape[0]}, basis in R^{basis.Xbar.shape[0]}"
        )
    inside, residual = subspace_contains(SubspaceBasis(basis.Xbar, basis.rank_tol), X, tol)
    if not inside:
        warnings.warn(
            f"trajectory leaves the data subspace (residual {residual:.3e})",
            stacklevel=2,
        )
    return basis.left_inverse() @ X


def lift_trajectory(basis: BasisSelection, xbar_traj: np.ndarray) -> np.ndarray:
    """Map reduced states back to full states, column per time step."""
    Xb = np.atleast_2d(np.asarray(xbar_traj, dtype=float))
    if Xb.shape[0] != basis.s:
        raise DimensionError(f"reduced states live in R^{Xb.shape[0]}, expected R^{basis.s}")
    return basis.Xbar @ Xb
