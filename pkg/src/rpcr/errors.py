"""Exception types shared across the package.

The CLI maps these onto process exit codes (see ``rpcr.cli``).
"""


class ArgumentError(ValueError):
    """An argument is outside the domain of the operation."""


class ScalingError(ValueError):
    """The spectrum does not satisfy the sum-of-squares normalisation."""

    def __init__(self, message, gamma=None):
        super().__init__(message)
        self.gamma = gamma


class NumericalFailure(RuntimeError):
    """An iterative numerical routine did not converge."""

    def __init__(self, message, shape=None):
        super().__init__(message if shape is None else f"{message} (matrix shape {shape[0]}x{shape[1]})")
        self.shape = shape


class ParseError(ValueError):
    """Malformed input data; carries the offending location when known."""

    def __init__(self, message, line=None, column=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.line = line
        self.column = column
