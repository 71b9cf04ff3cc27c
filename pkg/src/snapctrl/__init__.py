"""snapctrl: snapshot-based reduced-order modeling and control of linear systems."""

__version__ = "0.1.0"

from .data_model import (
    BasisSelection,
    SnapshotRecord,
    SubspaceBasis,
    load_matrix,
    select_basis,
    validate_snapshots,
)
from .reduction import ReducedModel, ThetaFamily, build_reduced_model
from .solver_interface import Infeasible
from .stabilization import StabilizationCertificate, full_rank_gain, stabilize
from .steering import InputKnowledge, SteeringPlan, synthesize_plan

__all__ = [
    "BasisSelection",
    "InputKnowledge",
    "Infeasible",
    "ReducedModel",
    "SnapshotRecord",
    "StabilizationCertificate",
    "SteeringPlan",
    "SubspaceBasis",
    "ThetaFamily",
    "build_reduced_model",
    "full_rank_gain",
    "load_matrix",
    "select_basis",
    "stabilize",
    "synthesize_plan",
    "validate_snapshots",
]
