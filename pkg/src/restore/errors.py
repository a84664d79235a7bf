"""Exception types shared across the toolkit."""


class RestoreError(Exception):
    """Base class for all toolkit errors."""


class ImageFormatError(RestoreError, ValueError):
    """Malformed or unsupported image file."""


class ShapeError(RestoreError, ValueError):
    """Array dimensions incompatible with the requested operation."""


class ParameterError(RestoreError, ValueError):
    """Invalid numeric or configuration parameter."""


class DegenerateInputError(RestoreError, ValueError):
    """Input for which a quantity is undefined (e.g. zero variance)."""


class DomainError(RestoreError, ValueError):
    """Input values outside the admissible domain."""
