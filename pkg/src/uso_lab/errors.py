"""Exception hierarchy shared by the library and mapped to CLI exit codes."""

from __future__ import annotations


class UsoLabError(Exception):
    """Base class for every error raised by uso_lab."""

    exit_code = 3


class InputError(UsoLabError, ValueError):
    """Malformed or out-of-range user input."""

    exit_code = 2


class ParseError(InputError):
    """An orientation or trace file could not be parsed."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SizeError(InputError):
    """A shape exceeds an enumeration or sampling guard."""


class PropertyViolation(UsoLabError):
    """An orientation fails a property it was required to have."""

    exit_code = 1


class CyclicityError(PropertyViolation):
    """The orientation contains a directed cycle."""

    def __init__(self, message: str, cycle=None):
        self.cycle = cycle
        super().__init__(message)


class InvalidUsoError(PropertyViolation):
    """A structure that every USO must have is missing."""


class ReachabilityError(PropertyViolation):
    """Some vertex cannot reach the requested absorbing set."""


class PivotError(InputError):
    """A pivot is not an element of the current outmap."""


class TerminalError(PivotError):
    """A move was requested with the terminal pivot."""


class SamplingError(UsoLabError):
    """A rejection sampler exhausted its attempt budget."""

    exit_code = 1

    def __init__(self, message: str, attempts: int):
        self.attempts = attempts
        super().__init__(message)


class InternalError(UsoLabError):
    """An invariant of the implementation itself was broken."""
