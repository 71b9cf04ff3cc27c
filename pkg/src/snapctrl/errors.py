"""Exception hierarchy shared by all snapctrl modules."""


class SnapctrlError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SnapctrlError):
    """A matrix file could not be parsed (ragged rows, non-numeric fields)."""


class DimensionError(SnapctrlError):
    """Matrix shapes are inconsistent with each other or with a contract."""


class DataError(SnapctrlError):
    """Matrix entries are invalid (NaN or Inf)."""


class DegenerateDataError(SnapctrlError):
    """The state snapshot matrix is numerically zero; there is no data subspace."""


class RankError(SnapctrlError):
    """A matrix does not have the full rank required by the operation."""


class ParameterError(SnapctrlError):
    """A model parameter violates its defining constraint."""


class SolverError(SnapctrlError):
    """The semidefinite solver failed, timed out, or returned garbage.

    Distinct from an infeasibility verdict, which is a valid answer.
    """


class EmptyWError(SnapctrlError):
    """No admissible reduced-input direction survives the subspace filters."""


class ReachabilityError(SnapctrlError):
    """The reduced pair is not reachable; no finite-time steering law exists."""


class SubspaceError(SnapctrlError):
    """A vector required to lie in the data subspace does not."""


class KnowledgeError(SnapctrlError):
    """Required partial knowledge of the input matrix is missing."""
