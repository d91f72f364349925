"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument or configuration field is outside its valid domain."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DataError(ValueError):
    """Input data is malformed or degenerate for the requested operation."""
