"""Exception hierarchy shared by every weakot module."""


class WeakOTError(Exception):
    """Base class for all library errors."""


class DomainError(WeakOTError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ShapeError(WeakOTError, ValueError):
    """Array arguments have incompatible lengths or dimensions."""


class ParameterError(WeakOTError, ValueError):
    """A constructor or solver parameter is out of range."""


class CapabilityError(WeakOTError):
    """The inputs lack a property the operation needs (e.g. strict convexity)."""


class ResourceError(WeakOTError):
    """The requested computation would exceed the supported problem size."""


class ParseError(WeakOTError, ValueError):
    """An input document could not be turned into a library object.

    Parameters
    ----------
    field : str
        Name of the offending field, e.g. ``"weights"``.
    message : str
        Human readable diagnostic.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
