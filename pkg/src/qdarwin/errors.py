class QDarwinError(Exception):
    """Base class for all errors raised by qdarwin."""


class InputError(QDarwinError, ValueError):
    """An argument violates a documented precondition."""


class ResourceError(QDarwinError, RuntimeError):
    """A dense representation would exceed the configured size cap."""


class UnsupportedPathError(QDarwinError, ValueError):
    """A specialised code path was requested for inputs it does not cover."""
