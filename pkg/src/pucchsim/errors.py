"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside the range accepted by an operation."""


class LayoutError(ValueError):
    """Resource-element layout is inconsistent with the data or the grid."""


class InsufficientRateError(ValueError):
    """The rate-matched length cannot carry the information bits."""


class InsufficientSamplesError(ValueError):
    """Too few samples for the requested statistic."""


class ConfigError(ValueError):
    """Scenario or preset configuration is invalid.

    ``line`` holds the 1-based line number in the source file when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            return f"line {self.line}: {msg}"
        return msg
