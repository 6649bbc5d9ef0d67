"""Exception taxonomy shared across the package.

Every class derives from ValueError so callers may catch broadly. Errors that
measure a violation expose it as the ``violation`` attribute (a float, or None
when no single number applies).
"""

from __future__ import annotations


class QObjectivityError(ValueError):
    """Base class for validation and domain errors raised by this package."""

    def __init__(self, message: str, violation: float | None = None):
        super().__init__(message)
        self.violation = violation


class DimensionCapExceeded(QObjectivityError):
    """A requested object would exceed the configured size cap."""


class ShapeError(QObjectivityError):
    """Array shape or subsystem dimensions are inconsistent with the contract."""


class NotHermitian(QObjectivityError):
    """Matrix deviates from its conjugate transpose beyond tolerance."""


class NormalizationError(QObjectivityError):
    """Vector norm or coefficient sum is not 1 within tolerance."""


class NotUnitTrace(QObjectivityError):
    """Density matrix trace differs from 1 beyond tolerance."""


class NotPSD(QObjectivityError):
    """Matrix has an eigenvalue below the positivity tolerance."""


class BasisNotOrthonormal(QObjectivityError):
    """A family of kets fails the orthonormality check required here."""


class PartitionError(QObjectivityError):
    """A subsystem cut is empty, complete, duplicated, or out of range."""


class DegenerateBranches(QObjectivityError):
    """Branch vectors are linearly dependent within tolerance; fits are ill posed."""


class NotSchmidtForm(QObjectivityError):
    """State admits no three-way branch decomposition with orthonormal factors."""
