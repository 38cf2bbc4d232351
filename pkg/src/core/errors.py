"""
Risk Attitude - Error Hierarchy

Every failure the library raises derives from RiskAttitudeError and carries
a symbolic ``code`` plus the process ``exit_code`` the CLI maps it to:

  1  input / validation problems (bad files, bad parameters, bad config)
  2  numerical degeneracy (zero curvature information, no optimum, no convergence)
  3  internal invariant breach
"""

from typing import Optional


class RiskAttitudeError(Exception):
    """Base class for all library errors."""

    code = "ERROR"
    exit_code = 1


class DomainError(RiskAttitudeError):
    """Wealth (or a utility parameter) lies outside a utility family's valid domain."""

    code = "DOMAIN"


class RangeError(RiskAttitudeError):
    """Target utility value lies outside the range of U over its domain."""

    code = "RANGE"


class InsufficientData(RiskAttitudeError):
    """Too few observations for the requested estimator or split."""

    code = "INSUFFICIENT"


class AlignmentError(RiskAttitudeError):
    """Two dated series do not share the required dates."""

    code = "ALIGNMENT"


class ParseError(RiskAttitudeError):
    """Malformed input text. ``line`` is the 1-based line number when known."""

    code = "PARSE"

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(RiskAttitudeError):
    """Missing or unexpected columns."""

    code = "SCHEMA"


class ValidationError(RiskAttitudeError):
    """A value parsed fine but breaks a type invariant."""

    code = "VALIDATION"


class ConfigError(RiskAttitudeError):
    code = "CONFIG"


class IoError(RiskAttitudeError):
    code = "IO"


class UsageError(RiskAttitudeError):
    """Bad command-line flags or values."""

    code = "USAGE"


class DegenerateError(RiskAttitudeError):
    """Input carries no curvature information (zero second moment, constant series)."""

    code = "DEGENERATE"
    exit_code = 2


class ConvergenceError(RiskAttitudeError):
    code = "CONVERGENCE"
    exit_code = 2


class NoInteriorOptimum(RiskAttitudeError):
    """First-order condition has no sign change inside the feasible bracket."""

    code = "NO_OPTIMUM"
    exit_code = 2


class InvariantError(RiskAttitudeError):
    """An identity the library guarantees by construction does not hold."""

    code = "INVARIANT"
    exit_code = 3
