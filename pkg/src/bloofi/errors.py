class ParameterError(ValueError):
    """Invalid filter or experiment parameters."""


class FilterFormatError(ValueError):
    """A filter collection file has the wrong magic number or version."""


class FilterCorruptionError(ValueError):
    """A filter collection file is truncated or carries nonzero padding bits."""


class InvariantError(AssertionError):
    """An index failed a structural self-check."""
