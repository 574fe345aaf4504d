"""Exception types shared across the package."""


class CritwaveError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CritwaveError, ValueError):
    """A parameter violates its documented constraints."""


class OutOfDomainError(CritwaveError, ValueError):
    """A requested region lies outside the computational mesh."""


class InvalidDataError(CritwaveError, ValueError):
    """Input data violates a structural requirement (e.g. f0(0) != 0)."""


class DegenerateInputError(CritwaveError, ValueError):
    """The requested quantity is undefined for this input (e.g. zero energy)."""


class InvalidConfigError(CritwaveError, ValueError):
    """A run configuration is malformed or inconsistent."""
