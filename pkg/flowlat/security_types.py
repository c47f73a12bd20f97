"""Flow-sensitive security types: environments, expression typing and spc.

``spc(lattice, pc, env, command)`` computes the least post-environment of
the algorithmic system; ``check_judgement`` decides derivability of a
declarative judgement ``pc ⊢ pre {command} post`` with a single spc call.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass
from types import MappingProxyType

from .errors import (
    EnvironmentMismatchError,
    FloatingVariableError,
    UndeclaredVariableError,
    UnknownElementError,
)
from .lang import Assign, Command, Expr, If, Seq, Skip, Var, While, free_vars, pretty_print
from .lang import flatten_seq, program_variables, require_floating, var_sort_key
from .lattice import Lattice, Level, join_all


class TypeEnv(Mapping[str, Level]):
    """Immutable total map from a declared variable set to lattice elements."""

    __slots__ = ("lattice", "_levels")

    def __init__(self, lattice: Lattice, levels: Mapping[str, Level] | Iterable[tuple[str, Level]]) -> None:
        items = dict(levels.items() if isinstance(levels, Mapping) else levels)
        for name, level in items.items():
            if not lattice.contains(level):
                raise UnknownElementError(level)
        self.lattice = lattice
        self._levels = MappingProxyType(dict(sorted(items.items())))

    @classmethod
    def uniform(cls, lattice: Lattice, variables: Iterable[str], level: Level | None = None) -> TypeEnv:
        """Every variable at ``level`` (bottom by default)."""
        fill = lattice.bottom if level is None else level
        return cls(lattice, {name: fill for name in variables})

    def __getitem__(self, name: str) -> Level:
        try:
            return self._levels[name]
        except KeyError:
            raise UndeclaredVariableError(name) from None

    def __contains__(self, name: object) -> bool:
        return name in self._levels

    def __iter__(self) -> Iterator[str]:
        return iter(self._levels)

    def __len__(self) -> int:
        return len(self._levels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TypeEnv):
            return NotImplemented
        return self.lattice == other.lattice and dict(self._levels) == dict(other._levels)

    def __hash__(self) -> int:
        return hash(frozenset(self._levels.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{name}:{self.lattice.render(level)}" for name, level in self._levels.items())
        return f"[{inner}]"

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self._levels)

    def updated(self, name: str, level: Level) -> TypeEnv:
        if name not in self._levels:
            raise UndeclaredVariableError(name)
        return TypeEnv(self.lattice, {**self._levels, name: level})

    def _require_compatible(self, other: TypeEnv) -> None:
        if self.lattice != other.lattice:
            raise EnvironmentMismatchError("environments range over different lattices")
        if self.variables != other.variables:
            missing = sorted(self.variables ^ other.variables)
            raise EnvironmentMismatchError(f"environments differ on variables: {', '.join(missing)}")

    def leq(self, other: TypeEnv) -> bool:
        """Pointwise order."""
        self._require_compatible(other)
        return all(self.lattice.leq(level, other[name]) for name, level in self._levels.items())

    def join(self, other: TypeEnv) -> TypeEnv:
        self._require_compatible(other)
        return TypeEnv(self.lattice, {n: self.lattice.join(l, other[n]) for n, l in self._levels.items()})

    def meet(self, other: TypeEnv) -> TypeEnv:
        self._require_compatible(other)
        return TypeEnv(self.lattice, {n: self.lattice.meet(l, other[n]) for n, l in self._levels.items()})

    def changes_from(self, before: TypeEnv) -> tuple[tuple[str, Level, Level], ...]:
        """Bindings that differ from ``before`` as (variable, old, new)."""
        return tuple(
            (name, before[name], level)
            for name, level in self._levels.items()
            if before[name] != level
        )

    def render_lines(self) -> list[str]:
        return [f"{name} : {self.lattice.render(level)}" for name, level in self._levels.items()]


@dataclass(frozen=True)
class Judgement:
    """``pc ⊢ pre {command} post``."""

    pc: Level
    pre: TypeEnv
    command: Command
    post: TypeEnv

    @property
    def lattice(self) -> Lattice:
        return self.pre.lattice


@dataclass(frozen=True)
class TraceStep:
    """Environment change at one program point of the final derivation."""

    depth: int
    statement: str
    changes: tuple[tuple[str, Level, Level], ...]
    iterations: int | None = None


def fixed_level(lattice: Lattice, var: Var) -> Level:
    """The level carried by a fixed variable's index."""
    if var.level is None:
        raise FloatingVariableError(f"{var} is a floating variable")
    return lattice.parse_element(var.level)


def expr_level(lattice: Lattice, env: TypeEnv | None, expr: Expr) -> Level:
    """Lub of Γ over fv(E) and of the indices of ffv(E); literals type to bottom."""
    floating, fixed = free_vars(expr)
    if floating and env is None:
        raise FloatingVariableError(f"floating variable {min(floating)} in a fixed-variable program")
    levels = [env[name] for name in sorted(floating)] if env is not None else []
    levels.extend(fixed_level(lattice, var) for var in sorted(fixed, key=var_sort_key))
    return join_all(lattice, levels)


def expr_type(env: TypeEnv, expr: Expr) -> Level:
    return expr_level(env.lattice, env, expr)


def require_typeable(lattice: Lattice, pc: Level, env: TypeEnv, command: Command) -> None:
    """Reject fixed variables, undeclared variables and foreign levels before typing."""
    if env.lattice != lattice:
        raise EnvironmentMismatchError(f"environment ranges over {env.lattice!r}, not {lattice!r}")
    if not lattice.contains(pc):
        raise UnknownElementError(pc)
    require_floating(command)
    for name in sorted(program_variables(command)[0]):
        if name not in env:
            raise UndeclaredVariableError(name)


def spc(
    lattice: Lattice,
    pc: Level,
    env: TypeEnv,
    command: Command,
    trace: list[TraceStep] | None = None,
) -> TypeEnv:
    """Least Γ′ with ``pc ⊢ env {command} Γ′``.

    When ``trace`` is a list, one step per program point is appended; loop
    bodies are traced at the final fixpoint iterate only.
    """
    require_typeable(lattice, pc, env, command)
    return _spc(lattice, pc, env, command, trace, 0)


def _spc(
    lattice: Lattice,
    pc: Level,
    env: TypeEnv,
    command: Command,
    trace: list[TraceStep] | None,
    depth: int,
) -> TypeEnv:
    match command:
        case Skip():
            return env
        case Assign(target, rhs):
            result = env.updated(target.name, lattice.join(pc, expr_type(env, rhs)))
            if trace is not None:
                trace.append(TraceStep(depth, pretty_print(command), result.changes_from(env)))
            return result
        case Seq():
            for part in flatten_seq(command):
                env = _spc(lattice, pc, env, part, trace, depth)
            return env
        case If(cond, then, orelse):
            inner = lattice.join(pc, expr_type(env, cond))
            then_trace: list[TraceStep] | None = [] if trace is not None else None
            else_trace: list[TraceStep] | None = [] if trace is not None else None
            post = _spc(lattice, inner, env, then, then_trace, depth + 1).join(
                _spc(lattice, inner, env, orelse, else_trace, depth + 1)
            )
            if trace is not None and then_trace is not None and else_trace is not None:
                trace.append(TraceStep(depth, f"if {pretty_print(cond)}", post.changes_from(env)))
                trace.extend(then_trace)
                if else_trace:
                    trace.append(TraceStep(depth, "else", ()))
                    trace.extend(else_trace)
            return post
        case While(cond, body):
            current, iterations = while_fixpoint(lattice, pc, env, cond, body)
            if trace is not None:
                trace.append(
                    TraceStep(depth, f"while {pretty_print(cond)}", current.changes_from(env), iterations)
                )
                inner = lattice.join(pc, expr_type(current, cond))
                _spc(lattice, inner, current, body, trace, depth + 1)
            return current
    raise TypeError(f"not a command: {command!r}")


def while_fixpoint(
    lattice: Lattice, pc: Level, env: TypeEnv, cond: Expr, body: Command
) -> tuple[TypeEnv, int]:
    """Γ′₀ = Γ, Γ′ᵢ₊₁ = spc(pc ⊔ tᵢ, Γ′ᵢ, body) ⊔ Γ up to the first repeat.

    Returns the limit and the number of iterations taken.
    """
    limit = lattice.height() * max(len(env), 1) + 1
    current = env
    for iteration in range(1, limit + 1):
        inner = lattice.join(pc, expr_type(current, cond))
        following = _spc(lattice, inner, current, body, None, 0).join(env)
        if following == current:
            return current, iteration
        current = following
    raise RuntimeError(f"while-loop typing did not stabilise within {limit} iterations")


def check_judgement(judgement: Judgement) -> bool:
    """Derivability in the declarative system: spc(pc, pre, C) ⊑ post."""
    judgement.pre._require_compatible(judgement.post)
    least = spc(judgement.lattice, judgement.pc, judgement.pre, judgement.command)
    return least.leq(judgement.post)


def rename_env(
    renaming: Mapping[Level, Level] | Callable[[Level], Level], env: TypeEnv, target: Lattice
) -> TypeEnv:
    """f*(Γ): apply a level renaming pointwise."""
    apply = renaming.__getitem__ if isinstance(renaming, Mapping) else renaming
    return TypeEnv(target, {name: apply(level) for name, level in env.items()})


__all__ = [
    "Judgement",
    "TraceStep",
    "TypeEnv",
    "check_judgement",
    "expr_level",
    "expr_type",
    "fixed_level",
    "rename_env",
    "require_typeable",
    "spc",
    "while_fixpoint",
]
