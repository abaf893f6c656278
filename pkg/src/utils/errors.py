"""Exception hierarchy for parsing, grounding, solving and reduction."""

from typing import Optional


class AspError(Exception):
    """Base class for every error raised by the toolkit."""


class ProgramSyntaxError(AspError):
    """Malformed program text."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"syntax error{where}: {message}")


class UnsupportedConstructError(AspError):
    """Aggregates, weak constraints, optimisation statements, choice bounds."""

    def __init__(self, construct: str, line: Optional[int] = None, column: Optional[int] = None):
        self.construct = construct
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"unsupported construct '{construct}'{where}")


class UnsafeRuleError(AspError):
    """A variable does not occur in a positive classical body literal."""


class InputPredicateError(AspError):
    """An input predicate occurs in a rule head of the encoding."""


class GroundingExplosionError(AspError):
    """The number of ground rules exceeds the configured cap."""


class InternalAtomError(AspError):
    """A body-representing or choice-hat atom reached ASP output."""


class IrreplaceableLiteralError(AspError):
    """No safe replacement exists for an internal literal."""


class OracleCapacityError(AspError):
    """The enumeration base exceeds the oracle's atom cap."""


class GeneralisationError(AspError):
    """Broken internal invariant during non-ground resolution."""
