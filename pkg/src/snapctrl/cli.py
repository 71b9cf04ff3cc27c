"""Command-line front end: data ingestion, reduction, synthesis, and reports.

Exit codes are a stable contract: 0 success, 1 input problem, 2 degenerate
data, 3 infeasible, 4 solver failure, 5 subspace violation, 6 unreachable.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, oracle
from .data_model import load_matrix, select_basis, validate_snapshots
from .errors import (
    DataError,
    DegenerateDataError,
    DimensionError,
    EmptyWError,
    KnowledgeError,
    ParseError,
    ReachabilityError,
    SolverError,
    SubspaceError,
)
from .reduction import build_reduced_model, check_invariance
from .solver_interface import Infeasible
from .stabilization import stabilize
from .steering import InputKnowledge, synthesize_plan

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4
EXIT_SUBSPACE = 5
EXIT_UNREACHABLE = 6

_INPUT_ERRORS = (ParseError, DimensionError, DataError, KnowledgeError, FileNotFoundError)


def _mat(M) -> list:
    return np.asarray(M, dtype=float).tolist()


def _write_report(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, M: np.ndarray) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [",".join(repr(float(v)) for v in row) for row in M]
    path.write_text("\n".join(lines) + "\n")


def _config_echo(args: argparse.Namespace) -> dict:
    echo = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        echo[key] = str(value) if isinstance(value, Path) else value
    return echo


def _base_report(args: argparse.Namespace) -> dict:
    return {
        "tool_version": __version__,
        "config": _config_echo(args),
        "tolerances": {
            "rank_tol": getattr(args, "rank_tol", None),
            "inv_tol": getattr(args, "inv_tol", None),
            "margin": getattr(args, "margin", None),
        },
        "seed": getattr(args, "seed", None),
    }


def _load_record(args: argparse.Namespace):
    data_dir = Path(args.data_dir)
    X = load_matrix(data_dir / "X.csv")
    U = load_matrix(data_dir / "U.csv")
    Xplus = load_matrix(data_dir / "Xplus.csv", expected_rows=X.shape[0])
    return validate_snapshots(X, U, Xplus)


def _load_oracle(path) -> oracle.TrueSystem:
    M = load_matrix(path)
    n = M.shape[0]
    if M.shape[1] <= n:
        raise DimensionError(f"oracle file must be n x (n+m), got {M.shape}")
    return oracle.TrueSystem(M[:, :n], M[:, n:])


def cmd_reduce(args: argparse.Namespace) -> int:
    record = _load_record(args)
    basis = select_basis(record, args.rank_tol)
    model = build_reduced_model(record, basis, inv_tol=args.inv_tol)
    verdict, residual = check_invariance(record, basis, tol=args.inv_tol)
    report = _base_report(args)
    report.update(
        {
            "s": basis.s,
            "indices": list(basis.indices),
            "A_bar": _mat(model.A_theta),
            "K": _mat(model.K),
            "gain_residual": model.gain_residual,
            "invariance": {"verdict": verdict, "residual": residual},
        }
    )
    _write_report(Path(args.data_dir) / "reduce.json", report)
    return EXIT_OK


def cmd_stabilize(args: argparse.Namespace) -> int:
    record = _load_record(args)
    basis = select_basis(record, args.rank_tol)
    out = Path(args.data_dir) / "stabilize.json"
    result = stabilize(
        record, basis, margin=args.margin, inv_tol=args.inv_tol, deadline=args.deadline
    )
    report = _base_report(args)
    if isinstance(result, Infeasible):
        report.update({"status": "infeasible", "solver_status": result.solver_status})
        _write_report(out, report)
        return EXIT_INFEASIBLE
    report.update(
        {
            "status": "feasible",
            "theta": _mat(result.theta),
            "P": _mat(result.P),
            "Z": _mat(result.Z),
            "K": _mat(result.K),
            "spectral_radius": result.spectral_radius,
            "lmi_margin": result.lmi_margin,
            "invariance_residual": result.invariance_residual,
            "gain_residual": result.gain_residual,
            "solver_status": result.solver_status,
        }
    )
    _write_report(out, report)
    return EXIT_OK


def cmd_steer(args: argparse.Namespace) -> int:
    record = _load_record(args)
    basis = select_basis(record, args.rank_tol)
    model = build_reduced_model(record, basis, inv_tol=args.inv_tol)
    knowledge = InputKnowledge(
        Bstar=load_matrix(args.bstar) if args.bstar else None,
        Bleft=load_matrix(args.bleft) if args.bleft else None,
    )
    x0 = load_matrix(args.x0).reshape(-1)
    xf = load_matrix(args.xf).reshape(-1)
    plan = synthesize_plan(
        record, basis, model, knowledge, x0, xf,
        tol=args.inv_tol, direct_solve=args.direct_solve,
    )
    if args.oracle:
        sys_true = _load_oracle(args.oracle)
        traj = np.zeros((record.n, plan.horizon + 1))
        traj[:, 0] = x0
        for k in range(plan.horizon):
            u = plan.K @ traj[:, k] + plan.v_seq[:, k]
            traj[:, k + 1] = sys_true.A @ traj[:, k] + sys_true.B @ u
        plan = plan.with_endpoint_residual(np.linalg.norm(traj[:, -1] - xf))
    report = _base_report(args)
    ordering = list(range(plan.horizon - 1, -1, -1))  # reversed-time stacking
    report.update(
        {
            "ubar": _mat(plan.ubar_seq[:, ordering].T),
            "v": _mat(plan.v_seq[:, ordering].T),
            "K": _mat(plan.K),
            "horizon": plan.horizon,
            "convention": "col(u(s-1)..u(0))",
            "endpoint_residual": plan.endpoint_residual,
        }
    )
    _write_report(Path(args.data_dir) / "steer.json", report)
    return EXIT_OK


def cmd_synth_data(args: argparse.Namespace) -> int:
    if args.steps <= 0 or args.runs <= 0:
        raise DimensionError("need a positive number of steps and runs")
    rng = np.random.default_rng(args.seed)
    s = args.subspace_dim if args.subspace_dim else args.n
    sys_true, record, _ = oracle.random_invariant_instance(
        args.n, s, args.m, rng, radius=args.radius, steps=args.steps, runs=args.runs
    )
    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(data_dir / "X.csv", record.X)
    _write_csv(data_dir / "U.csv", record.U)
    _write_csv(data_dir / "Xplus.csv", record.Xplus)
    _write_csv(data_dir / "sys.csv", np.hstack([sys_true.A, sys_true.B]))
    return EXIT_OK


def _parse_campaign_config(path) -> dict:
    defaults = {
        "n": 4, "m": 2, "subspace_dim": 3, "steps": 4, "runs": 2,
        "trials": 10, "seed": 0, "radius": 0.8,
        "rank_tol": 1e-9, "inv_tol": 1e-7,
    }
    int_keys = {"n", "m", "subspace_dim", "steps", "runs", "trials", "seed"}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}: line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in defaults:
            raise ParseError(f"{path}: line {lineno}: unknown key {key!r}")
        defaults[key] = int(value) if key in int_keys else float(value)
    return defaults


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _parse_campaign_config(args.config)
    trials = []
    for trial in range(cfg["trials"]):
        seed = cfg["seed"] + trial
        rng = np.random.default_rng(seed)
        sys_true, record, _ = oracle.random_invariant_instance(
            cfg["n"], cfg["subspace_dim"], cfg["m"], rng,
            radius=cfg["radius"], steps=cfg["steps"], runs=cfg["runs"],
        )
        basis = select_basis(record, cfg["rank_tol"])
        model = build_reduced_model(record, basis, inv_tol=cfg["inv_tol"])
        residuals = oracle.verify_identities(sys_true, record, basis, model)
        trials.append({"seed": seed, "s": basis.s, "residuals": residuals})
    trials.sort(key=lambda t: t["seed"])
    report = _base_report(args)
    report.update({"campaign": cfg, "trials": trials})
    _write_report(Path(args.out), report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snapctrl", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data-dir", default=".", help="directory with X.csv, U.csv, Xplus.csv")
        p.add_argument("--rank-tol", type=float, default=1e-9)
        p.add_argument("--inv-tol", type=float, default=1e-7)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("reduce", help="build the data-driven reduced model")
    common(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("stabilize", help="search the family for a stable model")
    common(p)
    p.add_argument("--margin", type=float, default=1e-6)
    p.add_argument("--deadline", type=float, default=None, help="solver budget in seconds")
    p.set_defaults(func=cmd_stabilize)

    p = sub.add_parser("steer", help="synthesize an s-step steering law")
    common(p)
    p.add_argument("--x0", required=True, help="CSV file with the initial state")
    p.add_argument("--xf", required=True, help="CSV file with the target state")
    p.add_argument("--bstar", default=None, help="CSV with known input-image columns")
    p.add_argument("--bleft", default=None, help="CSV with a left inverse of the input matrix")
    p.add_argument("--oracle", default=None, help="CSV with [A B]; runs closed-loop verification")
    p.add_argument("--direct-solve", action="store_true",
                   help="solve the steering equation directly and test admissibility afterwards")
    p.set_defaults(func=cmd_steer)

    p = sub.add_parser("synth-data", help="generate synthetic snapshot fixtures")
    common(p)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--steps", type=int, default=4)
    p.add_argument("--runs", type=int, default=2)
    p.add_argument("--subspace-dim", type=int, default=0, help="0 means full state space")
    p.add_argument("--radius", type=float, default=0.8)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("verify", help="run an oracle verification campaign")
    common(p)
    p.add_argument("--config", required=True, help="key = value campaign configuration file")
    p.add_argument("--out", default="verify.json")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (EmptyWError, ReachabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except SubspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SUBSPACE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
