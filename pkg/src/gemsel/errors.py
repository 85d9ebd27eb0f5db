"""Exception types shared across the package."""


class GemselError(Exception):
    """Base class for all package errors."""


class EmptyData(GemselError):
    pass


class ConstantColumn(GemselError):
    """A column has zero variance and dropping was not permitted.

    ``column`` is 0 for the outcome and j for the j-th covariate (1-based).
    """

    def __init__(self, column: int):
        self.column = column
        what = "outcome" if column == 0 else f"covariate {column}"
        super().__init__(f"zero-variance {what}; pass on_constant='drop' to remove it")


class DegenerateSplit(GemselError):
    pass


class BadK(GemselError):
    pass


class ParseError(GemselError):
    """CSV parse failure; ``line`` is the 1-based line number in the file."""

    def __init__(self, line: int, detail: str = ""):
        self.line = line
        super().__init__(f"parse error at line {line}" + (f": {detail}" if detail else ""))


class RaggedRow(GemselError):
    def __init__(self, line: int, expected: int, got: int):
        self.line = line
        super().__init__(f"line {line} has {got} fields, expected {expected}")


class Singular(GemselError):
    pass


class Underdetermined(GemselError):
    pass


class NoConvergence(GemselError):
    def __init__(self, iters: int, last_change: float = float("nan")):
        self.iters = iters
        self.last_change = last_change
        super().__init__(f"solver did not converge within {iters} iterations")


class DimensionMismatch(GemselError):
    pass


class BadTail(GemselError):
    pass


class EmptyLosses(GemselError):
    pass


class TooLarge(GemselError):
    pass


class ZeroTSS(GemselError):
    pass


class ZeroCurvature(GemselError):
    """Ordinary minimum eigenvalue is (numerically) zero; use the restricted variant."""


class BadCorrelation(GemselError):
    pass


class AllFitsFailed(GemselError):
    pass


class AllVacuous(GemselError):
    pass
