"""Exception types raised across the package."""


class GcnnvcError(Exception):
    """Base class for all package errors."""


class InvalidArgument(GcnnvcError, ValueError):
    """An argument violates an operation's precondition."""


class UnsupportedOperation(GcnnvcError):
    """The operation is not defined for this kind of input (e.g. a non-closed group)."""


class ResourceLimit(GcnnvcError):
    """The requested work exceeds the enumeration budget."""
