"""Error taxonomy shared across the package.

Each class maps onto one failure mode of the solver pipeline; the CLI
translates them into process exit codes.
"""

from __future__ import annotations


class MildPrandtlError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MildPrandtlError):
    """Invalid grid/solver/scenario configuration (bad counts, signs, CFL)."""


class DomainError(MildPrandtlError):
    """An argument is outside an operator's mathematical domain (t <= 0,
    missing history snapshots, gauge mismatch, ...)."""


class CompatibilityError(MildPrandtlError):
    """Initial data and boundary data disagree at t = 0."""


class DecayViolationError(MildPrandtlError):
    """A gauged field fails the exponential-decay requirement (e^Y * u
    overflowed the guard)."""


class InstabilityError(MildPrandtlError):
    """A time-stepped solution blew up (sup-norm guard exceeded)."""


class SolverError(MildPrandtlError):
    """Fixed-point iteration failed to converge; carries the residual history."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class VerificationError(MildPrandtlError):
    """A verification-suite identity exceeded its tolerance."""
