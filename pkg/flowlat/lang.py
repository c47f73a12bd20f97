"""The While language: syntax trees, parser, pretty printer and interpreter.

Programs use floating variables (``x``) and, in fixed mode, type-indexed
fixed variables (``x@H``, or ``x@{a,b}`` for powerset levels). Values are
unbounded integers; guards treat nonzero as true.
"""

from __future__ import annotations

import operator
import re
from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass
from types import MappingProxyType

from .errors import FixedVariableError, InputError, ParseError, UndeclaredVariableError

KEYWORDS = frozenset({"skip", "if", "then", "else", "end", "while", "do"})

_ARITHMETIC: dict[str, Callable[[int, int], int]] = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
}
_COMPARISON: dict[str, Callable[[int, int], bool]] = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
OPERATORS = tuple(_ARITHMETIC) + tuple(_COMPARISON)

# Higher binds tighter; all binary operators associate to the left.
_PRECEDENCE = {op: 1 for op in _COMPARISON} | {"+": 2, "-": 2, "*": 3}


# --- syntax trees -----------------------------------------------------------


@dataclass(frozen=True)
class Var:
    """A variable reference: floating when ``level`` is None, fixed otherwise.

    ``level`` is the textual name of a lattice element; resolving it against
    a concrete lattice is the typing layer's job.
    """

    name: str
    level: str | None = None

    @property
    def is_fixed(self) -> bool:
        return self.level is not None

    def __str__(self) -> str:
        return self.name if self.level is None else f"{self.name}@{self.level}"


@dataclass(frozen=True)
class Lit:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr

    def __post_init__(self) -> None:
        if self.op not in _PRECEDENCE:
            raise ValueError(f"unknown operator: {self.op!r}")

    def __str__(self) -> str:
        return pretty_print(self)


Expr = Lit | Var | BinOp


@dataclass(frozen=True)
class Skip:
    def __str__(self) -> str:
        return "skip"


@dataclass(frozen=True)
class Assign:
    target: Var
    rhs: Expr

    def __str__(self) -> str:
        return pretty_print(self)


@dataclass(frozen=True)
class Seq:
    first: Command
    second: Command

    def __str__(self) -> str:
        return pretty_print(self)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Command
    orelse: Command

    def __str__(self) -> str:
        return pretty_print(self)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Command

    def __str__(self) -> str:
        return pretty_print(self)


Command = Skip | Assign | Seq | If | While


def var_sort_key(var: Var) -> tuple[str, str]:
    return (var.name, var.level or "")


def canonical_level(text: str) -> str:
    """Normalise a level name; set literals get sorted, deduplicated members."""
    text = text.strip()
    if not text.startswith("{"):
        return text
    if not text.endswith("}"):
        raise ValueError(f"malformed set literal: {text!r}")
    members = {m.strip() for m in text[1:-1].split(",") if m.strip()}
    return "{" + ",".join(sorted(members)) + "}"


def sequence(commands: Iterable[Command | None]) -> Command:
    """Right-nested composition of the given commands; ``None`` entries are dropped."""
    parts = [c for c in commands if c is not None]
    if not parts:
        return Skip()
    result = parts[-1]
    for command in reversed(parts[:-1]):
        result = Seq(command, result)
    return result


def flatten_seq(command: Command) -> list[Command]:
    """The non-sequence commands of ``command`` in execution order."""
    parts: list[Command] = []
    pending = [command]
    while pending:
        node = pending.pop()
        if isinstance(node, Seq):
            pending.extend((node.second, node.first))
        else:
            parts.append(node)
    return parts


# --- parsing ----------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # int | ident | keyword | op | eof
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|[-+*<>;()@{},])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> Iterator[_Token]:
    line, line_start, pos = 1, 0, 0
    # end of input is reported at the end of the last non-blank line
    end_line, end_column = 1, 1
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            char = text[pos]
            if char.isalnum() or char.isspace():
                raise ParseError(f"unexpected character {char!r}", line, column)
            raise ParseError(f"unknown operator {char!r}", line, column)
        kind = match.lastgroup
        value = match.group()
        pos = match.end()
        if kind == "newline":
            line, line_start = line + 1, pos
            continue
        if kind != "space" or end_line == line:
            end_line, end_column = line, pos - line_start + 1
        if kind == "ident":
            yield _Token("keyword" if value in KEYWORDS else "ident", value, line, column)
        elif kind in ("int", "op"):
            yield _Token(kind, value, line, column)
    yield _Token("eof", "", end_line, end_column)


class _Parser:
    """Recursive-descent parser; ``;`` is right-associative."""

    def __init__(self, text: str, fixed: bool) -> None:
        self._tokens = list(_tokenize(text))
        self._pos = 0
        self._fixed = fixed

    def _peek(self, offset: int = 0) -> _Token:
        return self._tokens[min(self._pos + offset, len(self._tokens) - 1)]

    def _advance(self) -> _Token:
        token = self._peek()
        self._pos += 1
        return token

    def _at(self, text: str) -> bool:
        token = self._peek()
        return token.kind in ("op", "keyword") and token.text == text

    def _error(self, message: str, token: _Token | None = None) -> ParseError:
        token = token or self._peek()
        found = token.text or "end of input"
        return ParseError(f"{message}, found {found!r}", token.line, token.column)

    def _expect(self, text: str) -> _Token:
        if not self._at(text):
            raise self._error(f"expected {text!r}")
        return self._advance()

    def program(self) -> Command:
        command = self.command()
        if self._peek().kind != "eof":
            raise self._error("expected ';' or end of input")
        return command

    def command(self) -> Command:
        parts = [self._simple_command()]
        while self._at(";"):
            self._advance()
            parts.append(self._simple_command())
        return sequence(parts)

    def _simple_command(self) -> Command:
        token = self._peek()
        if self._at("skip"):
            self._advance()
            return Skip()
        if self._at("if"):
            self._advance()
            cond = self.expr()
            self._expect("then")
            then = self.command()
            orelse: Command = Skip()
            if self._at("else"):
                self._advance()
                orelse = self.command()
            self._expect("end")
            return If(cond, then, orelse)
        if self._at("while"):
            self._advance()
            cond = self.expr()
            self._expect("do")
            body = self.command()
            self._expect("end")
            return While(cond, body)
        if self._at("("):
            self._advance()
            inner = self.command()
            self._expect(")")
            return inner
        if token.kind == "ident":
            target = self._variable()
            self._expect(":=")
            return Assign(target, self.expr())
        raise self._error("expected a command")

    def expr(self, min_precedence: int = 1) -> Expr:
        left = self._primary()
        while True:
            token = self._peek()
            precedence = _PRECEDENCE.get(token.text) if token.kind == "op" else None
            if precedence is None or precedence < min_precedence:
                return left
            self._advance()
            left = BinOp(token.text, left, self.expr(precedence + 1))

    def _primary(self) -> Expr:
        token = self._peek()
        if token.kind == "int":
            self._advance()
            return Lit(int(token.text))
        if self._at("-") and self._peek(1).kind == "int":
            self._advance()
            return Lit(-int(self._advance().text))
        if token.kind == "ident":
            return self._variable()
        if self._at("("):
            self._advance()
            inner = self.expr()
            self._expect(")")
            return inner
        raise self._error("expected an expression")

    def _variable(self) -> Var:
        name = self._advance().text
        if not self._at("@"):
            return Var(name)
        at = self._advance()
        if not self._fixed:
            raise ParseError(
                f"fixed variable {name}@... is only allowed in fixed mode", at.line, at.column
            )
        token = self._peek()
        if token.kind == "ident":
            self._advance()
            return Var(name, token.text)
        if self._at("{"):
            self._advance()
            members: list[str] = []
            while self._peek().kind == "ident":
                members.append(self._advance().text)
                if not self._at(","):
                    break
                self._advance()
            if not self._at("}"):
                raise self._error(f"malformed fixed-variable index for {name!r}")
            self._advance()
            return Var(name, canonical_level("{" + ",".join(members) + "}"))
        raise self._error(f"malformed fixed-variable index for {name!r}")


def parse_program(text: str, fixed: bool = False) -> Command:
    """Parse concrete syntax into a command; ``fixed`` admits ``x@T`` variables."""
    return _Parser(text, fixed).program()


def parse_expr(text: str, fixed: bool = False) -> Expr:
    parser = _Parser(text, fixed)
    expr = parser.expr()
    if parser._peek().kind != "eof":
        raise parser._error("unexpected trailing input")
    return expr


# --- pretty printing --------------------------------------------------------


def _expr_text(expr: Expr, min_precedence: int) -> str:
    text = pretty_print(expr)
    if isinstance(expr, BinOp) and _PRECEDENCE[expr.op] < min_precedence:
        return f"({text})"
    return text


def pretty_print(node: Command | Expr) -> str:
    """Single-line concrete syntax that ``parse_program`` reads back unchanged."""
    match node:
        case Lit(value):
            return str(value)
        case Var():
            return str(node)
        case BinOp(op, left, right):
            precedence = _PRECEDENCE[op]
            return f"{_expr_text(left, precedence)} {op} {_expr_text(right, precedence + 1)}"
        case Skip():
            return "skip"
        case Assign(target, rhs):
            return f"{target} := {pretty_print(rhs)}"
        case Seq():
            parts: list[str] = []
            rest: Command = node
            while isinstance(rest, Seq):
                head = pretty_print(rest.first)
                parts.append(f"({head})" if isinstance(rest.first, Seq) else head)
                rest = rest.second
            parts.append(pretty_print(rest))
            return " ; ".join(parts)
        case If(cond, then, Skip()):
            return f"if {pretty_print(cond)} then {pretty_print(then)} end"
        case If(cond, then, orelse):
            return f"if {pretty_print(cond)} then {pretty_print(then)} else {pretty_print(orelse)} end"
        case While(cond, body):
            return f"while {pretty_print(cond)} do {pretty_print(body)} end"
    raise TypeError(f"not a While syntax tree: {node!r}")


# --- syntactic queries ------------------------------------------------------


def free_vars(expr: Expr) -> tuple[frozenset[str], frozenset[Var]]:
    """fv(E) as names and ffv(E) as fixed references."""
    floating: set[str] = set()
    fixed: set[Var] = set()
    for var in _expr_vars(expr):
        if var.is_fixed:
            fixed.add(var)
        else:
            floating.add(var.name)
    return frozenset(floating), frozenset(fixed)


def _expr_vars(expr: Expr) -> Iterator[Var]:
    match expr:
        case Var():
            yield expr
        case BinOp(_, left, right):
            yield from _expr_vars(left)
            yield from _expr_vars(right)


def _command_vars(command: Command) -> Iterator[Var]:
    match command:
        case Assign(target, rhs):
            yield target
            yield from _expr_vars(rhs)
        case Seq():
            for part in flatten_seq(command):
                yield from _command_vars(part)
        case If(cond, then, orelse):
            yield from _expr_vars(cond)
            yield from _command_vars(then)
            yield from _command_vars(orelse)
        case While(cond, body):
            yield from _expr_vars(cond)
            yield from _command_vars(body)


def program_variables(command: Command) -> tuple[frozenset[str], frozenset[Var]]:
    """Every variable mentioned anywhere in ``command``, split as in ``free_vars``."""
    floating: set[str] = set()
    fixed: set[Var] = set()
    for var in _command_vars(command):
        if var.is_fixed:
            fixed.add(var)
        else:
            floating.add(var.name)
    return frozenset(floating), frozenset(fixed)


def assigned_vars(command: Command) -> frozenset[Var]:
    match command:
        case Assign(target, _):
            return frozenset({target})
        case Seq():
            return frozenset().union(*(assigned_vars(part) for part in flatten_seq(command)))
        case If(_, then, orelse):
            return assigned_vars(then) | assigned_vars(orelse)
        case While(_, body):
            return assigned_vars(body)
    return frozenset()


def require_floating(command: Command) -> None:
    fixed = program_variables(command)[1]
    if fixed:
        raise FixedVariableError(
            f"fixed variable {min(fixed, key=var_sort_key)} in a floating-variable program"
        )


# --- stores and execution ---------------------------------------------------


def _as_var(key: Var | str) -> Var:
    return key if isinstance(key, Var) else Var(key)


class Store(Mapping[Var, int]):
    """Immutable total map from declared variables to integers.

    String keys stand for floating variables.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[Var | str, int] | Iterable[tuple[Var | str, int]] = ()) -> None:
        items = values.items() if isinstance(values, Mapping) else values
        normalised = {_as_var(key): int(value) for key, value in items}
        self._values = MappingProxyType(dict(sorted(normalised.items(), key=lambda kv: var_sort_key(kv[0]))))

    def __getitem__(self, key: Var | str) -> int:
        var = _as_var(key)
        try:
            return self._values[var]
        except KeyError:
            raise UndeclaredVariableError(str(var)) from None

    def __contains__(self, key: object) -> bool:
        if isinstance(key, (Var, str)):
            return _as_var(key) in self._values
        return False

    def __iter__(self) -> Iterator[Var]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        return hash(frozenset(self._values.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{var}={value}" for var, value in self._values.items())
        return f"Store({inner})"

    def updated(self, key: Var | str, value: int) -> Store:
        var = _as_var(key)
        if var not in self._values:
            raise UndeclaredVariableError(str(var))
        return Store({**self._values, var: value})


class Nontermination:
    """Result of a run that exhausted its fuel."""

    _instance: Nontermination | None = None

    def __new__(cls) -> Nontermination:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Nontermination"


NONTERMINATION = Nontermination()


class _OutOfFuel(Exception):
    pass


def evaluate(expr: Expr, store: Mapping[Var, int]) -> int:
    match expr:
        case Lit(value):
            return value
        case Var():
            try:
                return store[expr]
            except KeyError:
                raise UndeclaredVariableError(str(expr)) from None
        case BinOp(op, left, right):
            a, b = evaluate(left, store), evaluate(right, store)
            if op in _ARITHMETIC:
                return _ARITHMETIC[op](a, b)
            return int(_COMPARISON[op](a, b))
    raise TypeError(f"not an expression: {expr!r}")


def _run(command: Command, values: dict[Var, int], fuel: list[int]) -> None:
    match command:
        case Skip():
            pass
        case Assign(target, rhs):
            values[target] = evaluate(rhs, values)
        case Seq():
            for part in flatten_seq(command):
                _run(part, values, fuel)
        case If(cond, then, orelse):
            _run(then if evaluate(cond, values) != 0 else orelse, values, fuel)
        case While(cond, body):
            while evaluate(cond, values) != 0:
                if fuel[0] == 0:
                    raise _OutOfFuel
                fuel[0] -= 1
                _run(body, values, fuel)


def execute(command: Command, store: Store, fuel: int) -> Store | Nontermination:
    """Big-step execution; each loop unrolling costs one unit of ``fuel``."""
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    floating, fixed = program_variables(command)
    for var in sorted({Var(name) for name in floating} | fixed, key=var_sort_key):
        if var not in store:
            raise UndeclaredVariableError(str(var))
    values = dict(store.items())
    try:
        _run(command, values, [fuel])
    except _OutOfFuel:
        return NONTERMINATION
    return Store(values)


exec_command = execute


# --- store files ------------------------------------------------------------

_STORE_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:@(\S+?))?\s*=\s*(-?\d+)$")


def parse_store(text: str, source: str = "<store>") -> Store:
    """Read ``ident = integer`` lines (``x@T = n`` for fixed variables)."""
    values: dict[Var, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _STORE_LINE.match(line)
        if match is None:
            raise InputError(f"expected 'name = integer', got {raw.strip()!r}", source, number)
        name, level, value = match.groups()
        try:
            var = Var(name, canonical_level(level) if level else None)
        except ValueError as exc:
            raise InputError(str(exc), source, number) from None
        if var in values:
            raise InputError(f"duplicate binding for {var}", source, number)
        values[var] = int(value)
    return Store(values)


def render_store(store: Store) -> str:
    return "".join(f"{var} = {value}\n" for var, value in store.items())
