"""Exception and warning types shared across the library."""


class GeometryError(Exception):
    """Base class for errors raised by manifold primitives."""


class ManifoldMismatch(GeometryError):
    """Two points that should live on the same manifold do not."""


class UnsupportedMetric(GeometryError):
    """The requested metric is not defined on this manifold."""


class InvalidTangent(GeometryError):
    """A tangent vector violates the tangency invariants of its base point."""


class CutLocus(GeometryError):
    """The log map is undefined: the target is at or beyond the cut locus."""


class BasePointMismatch(GeometryError):
    """Two tangent vectors are attached to different base points."""


class DimensionMismatch(GeometryError):
    """An ambient vector has the wrong dimension for the manifold."""


class DegenerateInput(GeometryError):
    """Input cannot be projected to the manifold (zero vector, non-PD matrix)."""


class OutOfBall(GeometryError):
    """A point lies outside the ball on which a Lipschitz bound is stated."""


class EstimationError(Exception):
    """Base class for estimator failures."""


class NotConverged(EstimationError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvalidGroupCount(EstimationError):
    """Requested number of groups is outside 1..n."""


class ProjectionUndefined(EstimationError):
    """The Euclidean mean of the embedded sample cannot be projected."""


class GroupTooSmall(EstimationError):
    """A partition produces groups too small for the requested statistic."""


class SubsetEstimatorError(EstimationError):
    """A subset estimator failed; carries the index of the failing group."""

    def __init__(self, group_index, message):
        super().__init__(f"group {group_index}: {message}")
        self.group_index = group_index


class DomainError(ValueError):
    """An argument of a bound or density is outside its mathematical domain."""


class InadmissibleAlpha(DomainError):
    """alpha is outside the admissible range of the deviation constant."""


class RejectionBudgetExceeded(Exception):
    """Rejection sampling used up its proposal budget."""


class DataError(Exception):
    """Base class for dataset ingestion failures."""


class ParseError(DataError):
    """A landmark file could not be parsed; carries row/column location."""

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.row = row
        self.column = column


class DegenerateShape(DataError):
    """A landmark configuration collapses to a point."""


class HemisphereViolation(UserWarning):
    """Sample is not verifiably inside an open hemisphere; uniqueness of the
    spherical mean is not guaranteed."""


class DegenerateCovariance(UserWarning):
    """Trailing covariance eigenvalues are numerically zero."""


class VacuousBound(UserWarning):
    """A probability bound was clamped at one and carries no information."""
