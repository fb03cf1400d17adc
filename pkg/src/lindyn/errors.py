"""Exception hierarchy shared by all lindyn modules."""


class LindynError(Exception):
    """Base class for every error raised by lindyn."""


class ParameterError(LindynError, ValueError):
    """A caller-supplied parameter is outside its admissible range."""


class DomainError(LindynError, ValueError):
    """An operation is undefined for the given input (e.g. an empty set)."""


class ConstructionError(LindynError, ValueError):
    """A structural invariant failed while building an object."""


class ArithmeticModeError(LindynError, ArithmeticError):
    """Exact arithmetic grew too large, or float arithmetic lost the result."""


class RankError(LindynError, ValueError):
    """A family of vectors expected to be independent is not."""


class BudgetError(LindynError, RuntimeError):
    """A computation would exceed its configured cost budget."""
