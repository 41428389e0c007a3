"""Exception hierarchy shared by the estimators, the inference engine and the CLI."""


class CredalCfrError(Exception):
    """Base class for errors raised by this package."""


class DomainError(CredalCfrError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EstimatorInapplicableError(CredalCfrError):
    """The estimator cannot produce an interval for the given data."""


class EmptyCredalSetError(CredalCfrError, ValueError):
    """Interval bounds admit no probability mass function (sum constraint violated)."""


class NetworkError(CredalCfrError, ValueError):
    """Malformed network definition or invalid evidence."""


class InconsistentEvidenceError(CredalCfrError):
    """The evidence has zero probability under every admissible model."""


class CombinatorialBudgetError(CredalCfrError):
    """Exact credal inference would exceed the configured number of vertex combinations."""


class ConfigError(CredalCfrError, ValueError):
    """Invalid configuration file or parameters."""
