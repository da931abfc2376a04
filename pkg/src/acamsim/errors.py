"""Exception types raised across the simulator."""

import numpy as np


class OutOfRangeError(ValueError):
    """A programming input lies outside its physically valid interval."""


class DegenerateInputError(ValueError):
    """An input has no meaningful value for the requested operation (e.g. zero norm)."""


class SingularSystemError(np.linalg.LinAlgError):
    """The ridge system cannot be solved reliably."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ParseError(ValueError):
    """A data file could not be parsed.  ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line
