"""Pluggable semidefinite feasibility solver behind a minimal contract.

Callers hand over cvxpy constraints and named variables; they get back either
a value assignment or an Infeasible verdict. Solver crashes, timeouts, and
indeterminate statuses surface as SolverError so they are never mistaken for
a genuine infeasibility answer.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .errors import SolverError

DEFAULT_SOLVER = "CLARABEL"


@dataclass(frozen=True)
class Infeasible:
    """Verdict that the feasibility problem has no solution."""

    solver_status: str


def solve_feasibility(
    constraints: list,
    variables: dict[str, cp.Variable],
    objective: cp.Expression | None = None,
    deadline: float | None = None,
    solver: str = DEFAULT_SOLVER,
) -> dict[str, np.ndarray] | Infeasible:
    """Solve a semidefinite feasibility problem.

    ``objective`` (minimized) may be used to regularize the selected point;
    feasibility is the contract. ``deadline`` is a wall-clock budget in
    seconds; a non-positive budget fails immediately with SolverError.
    """
    if deadline is not None and deadline <= 0:
        raise SolverError("deadline expired before the solve started")
    obj = cp.Minimize(objective if objective is not None else 0)
    problem = cp.Problem(obj, constraints)
    kwargs: dict = {}
    if deadline is not None and solver == "CLARABEL":
        kwargs["time_limit"] = float(deadline)
    start = time.monotonic()
    try:
        problem.solve(solver=solver, **kwargs)
    except cp.error.SolverError as exc:
        raise SolverError(f"solver backend failed: {exc}") from exc
    if deadline is not None and time.monotonic() - start > deadline:
        raise SolverError("solver exceeded the wall-clock deadline")
    status = problem.status
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return Infeasible(status)
    if status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        values = {}
        for name, var in variables.items():
            if var.value is None:
                raise SolverError(f"solver returned status {status} but no value for {name}")
            values[name] = np.atleast_2d(np.asarray(var.value, dtype=float))
        return values
    raise SolverError(f"solver returned indeterminate status {status!r}")
