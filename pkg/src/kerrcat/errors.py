"""Exception types shared across the package."""


class KerrCatError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(KerrCatError, ValueError):
    pass


class TruncationError(KerrCatError, ValueError):
    """Fock truncation too small for the requested displacement or state."""


class ContractError(KerrCatError, ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian H)."""


class StiffnessError(KerrCatError, RuntimeError):
    """Adaptive step size underflowed; carries the offending time window."""

    def __init__(self, message, t=None, h=None, segment=None):
        super().__init__(message)
        self.t = t
        self.h = h
        self.segment = segment


class FitError(KerrCatError, RuntimeError):
    """Nonlinear least-squares fit failed to converge or is unidentifiable."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class SearchBracketError(KerrCatError, RuntimeError):
    pass


class ConfigError(KerrCatError, ValueError):
    """Invalid configuration file or override (bad key, value or syntax)."""


class AdiabaticityWarning(UserWarning):
    """Requested drive strength approaches the energy gap."""
