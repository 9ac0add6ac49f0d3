"""Exception types shared across the toolkit."""


class RmtportError(Exception):
    """Base class for all toolkit errors."""


class ParseError(RmtportError, ValueError):
    """A cell failed to parse; message names the file location."""


class ShapeError(RmtportError, ValueError):
    """Dimensions of an input do not fit the operation."""


class DomainError(RmtportError, ValueError):
    """A value lies outside the mathematically valid domain."""


class DegenerateSeries(RmtportError, ValueError):
    """A series is constant where nonzero variance is required."""


class ConvergenceError(RmtportError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class InfeasibleTarget(RmtportError, ValueError):
    """A target return lies outside the attainable long-only range."""


class NumericalFailure(RmtportError, RuntimeError):
    """The optimizer failed to reach its optimality tolerance."""


class InsufficientPoints(RmtportError, ValueError):
    """Too few usable points for a fit."""


class DegenerateAbscissa(RmtportError, ValueError):
    """All abscissa values coincide; the fit is undetermined."""


class AlignmentError(RmtportError, ValueError):
    """Timestamps of two series do not line up."""


class ConfigError(RmtportError, ValueError):
    """A run configuration is invalid; message names the field."""
