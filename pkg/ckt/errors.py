"""Error types raised by the ckt modules.

Every error derives from :class:`CKTError` so the CLI can map the whole
family onto exit code 1. Each one also subclasses the closest builtin so
plain ``except ValueError`` call sites keep working.
"""

from __future__ import annotations


class CKTError(Exception):
    """Base class for numerical and domain failures."""


class SpinValueError(CKTError, ValueError):
    """j is not a positive half-integer."""


class DimensionError(CKTError, ValueError):
    """Operator or state has the wrong shape."""


class NotHermitianError(CKTError, ValueError):
    pass


class NotUnitaryError(CKTError, ValueError):
    pass


class ParameterError(CKTError, ValueError):
    """Invalid model, kicked or sweep parameters."""


class PoleError(CKTError, ArithmeticError):
    """Canonical coordinates evaluated too close to Z = +-1."""


class IntegrationError(CKTError, ArithmeticError):
    """Trajectory produced non-finite values."""


class BranchDomainError(CKTError, ValueError):
    """Coupling lies outside the region where an energy branch exists."""


class PhaseWrapError(CKTError, ArithmeticError):
    """Eigenphases of exp(-iHT) cannot be compared unambiguously."""


__all__ = [
    "CKTError",
    "SpinValueError",
    "DimensionError",
    "NotHermitianError",
    "NotUnitaryError",
    "ParameterError",
    "PoleError",
    "IntegrationError",
    "BranchDomainError",
    "PhaseWrapError",
]
