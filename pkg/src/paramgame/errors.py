"""Exception types shared across the library."""


class ParamGameError(Exception):
    """Base class for all library-specific errors."""


class EnumerationTooLargeError(ParamGameError):
    """An exact enumeration would exceed its configured bound."""


class GameParseError(ParamGameError, ValueError):
    """Game expression text cannot be parsed."""


class BudgetExceededError(ParamGameError):
    """A strategy ran past its per-move step budget.

    The strategy is rejected as not efficiently computable at this
    parameter value.
    """

    def __init__(self, name: str, n: int, limit: int):
        super().__init__(f"strategy {name!r} exceeded {limit} steps at n={n}")
        self.strategy_name = name
        self.n = n
        self.limit = limit


class TotalityError(ParamGameError):
    """A strategy refused to move where a legal reply was demanded."""


class DeadlockError(ParamGameError):
    """Interaction between two strategies stalled; one of the inputs
    violates its contract."""


class IllegalMoveError(ParamGameError):
    """A move outside the legal plays of the ambient game."""


class InfeasibleParametersError(ParamGameError, ValueError):
    """No parameter choice satisfies the requested constraints."""


class IterationCapError(ParamGameError):
    """The coordinate-fixing loop hit its iteration cap; counted as a
    failure against the run's confidence budget."""


class NoInfluentialFoundError(ParamGameError):
    """No coordinate passed the influence threshold after a re-estimate."""
