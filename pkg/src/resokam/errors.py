"""Exception types shared across the package.

The CLI maps these onto exit codes: parameter/domain problems exit 2,
violated mathematical invariants exit 3, anything else exit 1.
"""


class ResokamError(Exception):
    """Base class for all package errors."""


class DomainError(ResokamError, ValueError):
    """Malformed or out-of-range input (bad n, K, point outside B, ...)."""


class ParameterError(ResokamError, ValueError):
    """Inconsistent run parameters, e.g. a violated K-chain inequality."""


class CertificationError(ResokamError, RuntimeError):
    """An exact integer certificate failed; the message names the bound."""


class BracketError(ResokamError, RuntimeError):
    """No sign change in a root-search interval."""


class ModelAssumptionError(ResokamError, RuntimeError):
    """Sampled data contradicts a declared model property (convexity, ...)."""


class InvariantViolation(ResokamError, RuntimeError):
    """A checked invariant failed.  Carries a witness payload for reports."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnsupportedPlotError(ResokamError, ValueError):
    """Requested plot kind is not available for the given data."""
