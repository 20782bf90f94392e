"""
Exceptions raised by the structure learning pipeline
"""


class FedBnslError(Exception):
    """Base class for all errors raised by fedbnsl."""


class ConfigError(FedBnslError):
    """Invalid or missing configuration value. The message names the offending field."""
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class SingularMatrixError(FedBnslError):
    """A linear system could not be solved because a pivot fell below tolerance."""
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class DivergenceError(FedBnslError):
    """Iterates left the representable range. `round` is filled in by the orchestrator when known."""
    def __init__(self, message, round=None):
        self.round = round
        self.detail = message
        super().__init__(message if round is None else f"round {round}: {message}")

    def at_round(self, round):
        """Return a copy of this error tagged with the ADMM round it happened in."""
        return type(self)(self.detail, round=round)


class MatrixExponentialOverflow(DivergenceError):
    """Scaling-and-squaring overflowed while evaluating e^A."""


class CyclicGraphError(FedBnslError):
    """A graph that is required to be acyclic contains a directed cycle."""


class CsvFormatError(FedBnslError):
    """Malformed numeric CSV input. `row` and `column` are 1-based positions in the file."""
    def __init__(self, path, message, row=None, column=None):
        self.path = path
        self.row = row
        self.column = column
        location = str(path)
        if row is not None:
            location += f", row {row}"
        if column is not None:
            location += f", column {column}"
        super().__init__(f"{location}: {message}")


class AttackFailure(FedBnslError):
    """Covariance reconstruction is impossible because B - I is singular."""


class DimensionMismatchError(FedBnslError):
    """Two graphs or matrices that must share a dimension do not."""
