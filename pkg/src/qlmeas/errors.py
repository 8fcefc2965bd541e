"""Exception types raised across the package.

All errors derive from QlmeasError so callers can catch everything from
this package with one except clause.  Validation errors double as
ValueError, runtime failures as RuntimeError.
"""


class QlmeasError(Exception):
    pass


class InvalidStateError(QlmeasError, ValueError):
    """A Bloch vector or density matrix violates positivity/normalization."""


class InvalidOperatorError(QlmeasError, ValueError):
    """An operator fails a required structural check (hermiticity, trace)."""


class DegenerateObservableError(QlmeasError, ValueError):
    """Observable magnitude is zero; no spectral split exists."""


class DomainError(QlmeasError, ValueError):
    """Argument outside the mathematical domain (e.g. negative time)."""


class ConfigError(QlmeasError, ValueError):
    """Bad run configuration: unknown key, missing field, invalid value."""


class IntegrationError(QlmeasError, RuntimeError):
    """Adaptive integration failed; carries the last good state."""

    def __init__(self, message, t_last=None, y_last=None):
        super().__init__(message)
        self.t_last = t_last
        self.y_last = y_last


class BranchExtinctionError(QlmeasError, RuntimeError):
    """Normalization denominator underflowed: the branch has zero weight."""


class ZeroProbabilityBranchError(QlmeasError, ValueError):
    """Projective update requested on a branch with vanishing probability."""
