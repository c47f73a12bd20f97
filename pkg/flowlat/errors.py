"""Exception hierarchy shared by every flowlat module."""

from typing import Any


class FlowlatError(Exception):
    """Base class for all errors raised on bad programs, lattices or inputs."""


class ParseError(FlowlatError, ValueError):
    """Syntax error in a While program, with 1-based position."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class LatticeError(FlowlatError, ValueError):
    """The supplied order is not a finite lattice (or is malformed)."""

    def __init__(self, message: str, pair: tuple[Any, Any] | None = None) -> None:
        super().__init__(message)
        self.pair = pair


class UnknownElementError(FlowlatError, KeyError):
    def __init__(self, name: Any) -> None:
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown lattice element: {self.name}"


class UndeclaredVariableError(FlowlatError, KeyError):
    def __init__(self, name: Any) -> None:
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"undeclared variable: {self.name}"


class FixedVariableError(FlowlatError, ValueError):
    """A fixed variable turned up where only floating variables are allowed."""


class FloatingVariableError(FlowlatError, ValueError):
    """A floating variable turned up in a program that must be all-fixed."""


class EnvironmentMismatchError(FlowlatError, ValueError):
    """Two environments (or typings) do not share a lattice or variable set."""


class EmptyDomainError(FlowlatError, ValueError):
    pass


class ConfigError(FlowlatError, ValueError):
    pass


class InputError(FlowlatError, ValueError):
    """Malformed input file, reported with its source and line."""

    def __init__(self, message: str, source: str = "<input>", line: int | None = None) -> None:
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.message = message
        self.source = source
        self.line = line
