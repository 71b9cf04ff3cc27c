"""Finite-time steering between states of the data subspace.

Admissible reduced-input directions come from partial knowledge of the input
matrix (user-asserted columns and kernel-propagated snapshot directions). A
reachability check on the reduced pair guarantees an s-step plan; the physical
law mixes the invariance-enforcing feedback with a feedforward term.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .data_model import (
    BasisSelection,
    SnapshotRecord,
    SubspaceBasis,
    nullspace_basis,
    subspace_contains,
)
from .errors import (
    DimensionError,
    EmptyWError,
    KnowledgeError,
    ReachabilityError,
    SubspaceError,
)
from .reduction import DEFAULT_INV_TOL, ReducedModel, check_invariance

DEFAULT_W_TOL = 1e-8


@dataclass(frozen=True)
class InputKnowledge:
    """User-asserted partial knowledge of the unknown input matrix.

    ``Bstar`` columns are asserted to lie in the image of the input matrix;
    ``Bleft`` is an asserted left inverse of it, needed only to realize
    physical inputs. Neither is verifiable without the oracle.
    """

    Bstar: np.ndarray | None = None
    Bleft: np.ndarray | None = None


@dataclass(frozen=True)
class SteeringPlan:
    """s-step steering law: reduced inputs, feedforward terms, feedback gain."""

    ubar_seq: np.ndarray  # s x horizon, column k is the reduced input at step k
    v_seq: np.ndarray  # m x horizon, column k is the feedforward at step k
    K: np.ndarray
    horizon: int
    endpoint_residual: float | None = None

    def with_endpoint_residual(self, residual: float) -> "SteeringPlan":
        return replace(self, endpoint_residual=float(residual))


def data_input_directions(
    record: SnapshotRecord, rank_tol: float = 1e-9
) -> np.ndarray:
    """Directions in the image of the input matrix derivable from data alone.

    Propagating any kernel vector of the state snapshots isolates the input
    contribution, so these columns need no user assertion.
    """
    kernel = nullspace_basis(record.X, rank_tol)
    if kernel.dim == 0:
        return np.zeros((record.n, 0))
    return record.Xplus @ kernel.B


def candidate_W(
    record: SnapshotRecord,
    basis: BasisSelection,
    knowledge: InputKnowledge,
    tol: float = DEFAULT_W_TOL,
) -> np.ndarray:
    """Admissible reduced-input directions from all knowledge sources.

    Keeps candidate directions that lie both in the asserted/derived input
    image and in the data subspace, orthonormalizes them, and maps them to
    reduced coordinates. With full-rank state data this spans the same set as
    mapping the asserted columns directly through the basis inverse.
    """
    sources = [data_input_directions(record, basis.rank_tol)]
    if knowledge.Bstar is not None:
        Bstar = np.atleast_2d(np.asarray(knowledge.Bstar, dtype=float))
        if Bstar.shape[0] != record.n:
            raise DimensionError(
                f"asserted input columns live in R^{Bstar.shape[0]}, states in R^{record.n}"
            )
        sources.append(Bstar)
    candidates = np.hstack(sources)
    if candidates.shape[1] == 0:
        raise EmptyWError("no input-matrix knowledge available")

    span = SubspaceBasis(basis.Xbar, basis.rank_tol)
    kept = []
    for j in range(candidates.shape[1]):
        b = candidates[:, j]
        norm = np.linalg.norm(b)
        if norm <= tol:
            continue
        inside, _ = subspace_contains(span, b[:, None], tol)
        if inside:
            kept.append(b)
    if not kept:
        raise EmptyWError("no admissible direction lies in the data subspace")
    Q = linalg.orth(np.column_stack(kept), rcond=tol)
    if Q.shape[1] == 0:
        raise EmptyWError("admissible directions collapse to zero")
    return basis.left_inverse() @ Q


def reachability_matrix(A_theta: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Stacked powers ``[W, A W, ..., A^{s-1} W]``."""
    A = np.atleast_2d(np.asarray(A_theta, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"reduced matrix of shape {A.shape} is not square")
    if W.shape[0] != A.shape[0]:
        raise DimensionError(
            f"input directions live in R^{W.shape[0]}, reduced states in R^{A.shape[0]}"
        )
    s = A.shape[0]
    blocks = []
    Ak_W = W
    for _ in range(s):
        blocks.append(Ak_W)
        Ak_W = A @ Ak_W
    return np.hstack(blocks)


def check_reachable(A_theta: np.ndarray, W: np.ndarray, tol: float = DEFAULT_W_TOL) -> bool:
    """True iff the reachability matrix has full numerical row rank."""
    R = reachability_matrix(A_theta, W)
    svals = linalg.svdvals(R)
    if svals.size == 0 or svals[0] == 0:
        return False
    return int(np.count_nonzero(svals >= tol * svals[0])) == R.shape[0]


def steering_inputs(
    A_theta: np.ndarray,
    W: np.ndarray,
    xbar0: np.ndarray,
    xbarf: np.ndarray,
    tol: float = DEFAULT_W_TOL,
) -> np.ndarray:
    """Minimum-norm reduced inputs driving xbar0 to xbarf in s steps.

    Returns an s x s array whose column k is the reduced input applied at step
    k (time order). Internally the stacked unknown follows the reversed-time
    convention col(u(s-1), ..., u(0)); the reachability-matrix right inverse is
    the pseudoinverse, and the input directions are orthonormalized first so
    the stacked solution has minimal Euclidean norm among all admissible ones.
    """
    A = np.atleast_2d(np.asarray(A_theta, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    xbar0 = np.asarray(xbar0, dtype=float).reshape(-1)
    xbarf = np.asarray(xbarf, dtype=float).reshape(-1)
    s = A.shape[0]
    if xbar0.shape != (s,) or xbarf.shape != (s,):
        raise DimensionError("endpoint states do not match the reduced dimension")
    Wo = linalg.orth(W) if W.size else np.zeros((s, 0))
    if not check_reachable(A, Wo, tol):
        raise ReachabilityError("reduced pair is not reachable from the admissible directions")
    R = reachability_matrix(A, Wo)
    y = xbarf - np.linalg.matrix_power(A, s) @ xbar0
    uhat_col = np.linalg.pinv(R) @ y
    w = Wo.shape[1]
    ubar = np.zeros((s, s))
    for block in range(s):  # block 0 of the stacked unknown is u(s-1)
        k = s - 1 - block
        ubar[:, k] = Wo @ uhat_col[block * w : (block + 1) * w]
    return ubar


def steering_inputs_direct(
    A_theta: np.ndarray,
    xbar0: np.ndarray,
    xbarf: np.ndarray,
) -> np.ndarray:
    """Unconstrained minimum-norm reduced inputs; admissibility checked later.

    Fallback that solves the s-step equation with free directions instead of
    an explicit admissible set; each returned input must afterwards be checked
    against a known subset of admissible directions.
    """
    A = np.atleast_2d(np.asarray(A_theta, dtype=float))
    s = A.shape[0]
    return steering_inputs(A, np.eye(s), xbar0, xbarf)


def synthesize_plan(
    record: SnapshotRecord,
    basis: BasisSelection,
    model: ReducedModel,
    knowledge: InputKnowledge,
    x0: np.ndarray,
    xf: np.ndarray,
    tol: float = DEFAULT_INV_TOL,
    direct_solve: bool = False,
) -> SteeringPlan:
    """Full steering law between two states of the data subspace.

    The physical input at step k is ``K x(k) + v(k)``; the endpoint contract
    can only be verified by simulation, so the endpoint residual is left for
    the caller to fill.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    xf = np.asarray(xf, dtype=float).reshape(-1)
    span = SubspaceBasis(basis.Xbar, basis.rank_tol)
    for name, x in (("x0", x0), ("xf", xf)):
        inside, residual = subspace_contains(span, x[:, None], tol)
        if not inside:
            raise SubspaceError(
                f"{name} lies outside the data subspace (residual {residual:.3e})"
            )
    invariant, residual = check_invariance(record, basis, model.theta, tol)
    if not invariant:
        raise SubspaceError(
            f"model parameter fails the invariance condition (residual {residual:.3e})"
        )
    if knowledge.Bleft is None:
        raise KnowledgeError("a left inverse of the input matrix is required for physical inputs")
    Bleft = np.atleast_2d(np.asarray(knowledge.Bleft, dtype=float))
    if Bleft.shape != (record.m, record.n):
        raise DimensionError(f"Bleft has shape {Bleft.shape}, expected {(record.m, record.n)}")

    Xl = basis.left_inverse()
    xbar0, xbarf = Xl @ x0, Xl @ xf
    W = candidate_W(record, basis, knowledge)
    if direct_solve:
        ubar = steering_inputs_direct(model.A_theta, xbar0, xbarf)
        lifted = basis.Xbar @ ubar
        admissible_span = SubspaceBasis(basis.Xbar @ W, basis.rank_tol)
        inside, w_residual = subspace_contains(admissible_span, lifted, tol)
        if not inside:
            raise SubspaceError(
                f"direct solution leaves the admissible input set (residual {w_residual:.3e})"
            )
    else:
        ubar = steering_inputs(model.A_theta, W, xbar0, xbarf)
    v = Bleft @ basis.Xbar @ ubar
    return SteeringPlan(ubar_seq=ubar, v_seq=v, K=model.K, horizon=basis.s)
