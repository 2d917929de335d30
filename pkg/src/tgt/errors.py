"""Exception types shared across the package."""


class TgtError(Exception):
    """Base class for all library errors."""


class ParameterError(TgtError, ValueError):
    """A precondition on user-supplied parameters is violated."""


class DimensionError(TgtError, ValueError):
    """Operands have incompatible lengths or shapes."""


class MatrixFormatError(TgtError, ValueError):
    """A matrix file does not conform to the GTMAT format.

    The message names the offending line number where one exists.
    """


class ConstructionError(TgtError, RuntimeError):
    """A randomized construction could not produce a verified matrix."""


class InfeasibleError(TgtError, RuntimeError):
    """An exhaustive verification would exceed the enumeration budget."""

    def __init__(self, required: int, budget: int, message: str = ""):
        self.required = required
        self.budget = budget
        text = message or (
            f"verification needs {required} enumerated subsets, budget is {budget}"
        )
        super().__init__(text)


class DecodeFailureError(TgtError, RuntimeError):
    """A decoder could not locate the structure it needs (reported, never hidden)."""


class InvariantViolationError(TgtError, RuntimeError):
    """A quantity guaranteed by the design's analysis came out wrong."""
