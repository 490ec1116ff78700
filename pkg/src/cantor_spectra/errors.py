"""Exception types shared across the package."""


class CantorSpectraError(Exception):
    """Base class for all errors raised by this package."""


class ToleranceNotReached(CantorSpectraError):
    """A truncated product could not be certified to the requested width."""


class InvalidParams(CantorSpectraError):
    """A rule, digit system or configuration is malformed."""


class ParityError(InvalidParams):
    """Two edge labels at a vertex have the same parity."""


class VertexNotInTree(CantorSpectraError):
    """A digit word leaves the labeled tree."""


class BudgetExceeded(CantorSpectraError):
    """A search or enumeration would exceed its configured node budget."""


class StepBudgetExceeded(CantorSpectraError):
    """An expansion neither cycled nor failed within the step budget."""


class OrthogonalityViolation(CantorSpectraError):
    """Two frequencies in a supposedly orthogonal family are not orthogonal."""

    def __init__(self, a: int, b: int):
        super().__init__(f"e_{a} and e_{b} are not orthogonal ({a} - {b} is not a zero of the transform)")
        self.a = a
        self.b = b


class ConfigError(InvalidParams):
    """A rule configuration file could not be parsed."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
