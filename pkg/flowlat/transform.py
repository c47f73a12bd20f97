"""Translation of floating-variable programs into fixed-variable programs.

Each floating variable ``x`` is split into copies ``x@t``, one per level it
takes during typing. Wherever the flow-sensitive environment changes at a
join point, a block of copy assignments moves values into the copies the
rest of the program reads. The result types in the ordinary
flow-insensitive system (``check_fixed``).
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from .errors import EnvironmentMismatchError
from .lang import Assign, BinOp, Command, Expr, If, Lit, Seq, Skip, Var, While, flatten_seq, sequence
from .lattice import Lattice, Level, builtin_lattice
from .security_types import TypeEnv, expr_level, expr_type, fixed_level, require_typeable, while_fixpoint


def fixed_var(lattice: Lattice, name: str, level: Level) -> Var:
    return Var(name, lattice.render(level))


@dataclass(frozen=True)
class FixedAssignBlock:
    """Copy assignments ``x@s := x@t`` in canonical (base name) order."""

    assignments: tuple[Assign, ...] = ()

    def __len__(self) -> int:
        return len(self.assignments)

    def __iter__(self) -> Iterator[Assign]:
        return iter(self.assignments)

    def is_independent(self) -> bool:
        """No two assignments mention a common variable."""
        seen: set[Var] = set()
        for assignment in self.assignments:
            touched = {assignment.target}
            if isinstance(assignment.rhs, Var):
                touched.add(assignment.rhs)
            if touched & seen:
                return False
            seen |= touched
        return True

    def as_command(self) -> Command | None:
        """The block as a sequence, or None when empty."""
        if not self.assignments:
            return None
        return sequence(self.assignments)


def fassign(target: TypeEnv, source: TypeEnv) -> FixedAssignBlock:
    """Copies moving each variable from its ``source`` level to its ``target`` level."""
    if target.lattice != source.lattice or target.variables != source.variables:
        raise EnvironmentMismatchError("fassign needs environments over one lattice and variable set")
    lattice = target.lattice
    return FixedAssignBlock(
        tuple(
            Assign(fixed_var(lattice, name, level), fixed_var(lattice, name, source[name]))
            for name, level in target.items()
            if source[name] != level
        )
    )


def fix_expr(env: TypeEnv, expr: Expr) -> Expr:
    """E^Γ: every floating ``x`` becomes ``x@Γ(x)``."""
    match expr:
        case Lit():
            return expr
        case Var(name, None):
            return fixed_var(env.lattice, name, env[name])
        case Var():
            return expr
        case BinOp(op, left, right):
            return BinOp(op, fix_expr(env, left), fix_expr(env, right))
    raise TypeError(f"not an expression: {expr!r}")


@dataclass(frozen=True)
class TranslationResult:
    output: Command
    post: TypeEnv
    pc: Level
    copies: int


def _then(command: Command, block: FixedAssignBlock) -> Command:
    tail = block.as_command()
    if tail is None:
        return command
    if isinstance(command, Skip):
        return tail
    return sequence([*flatten_seq(command), *block])


def translate(lattice: Lattice, pc: Level, env: TypeEnv, command: Command) -> TranslationResult:
    """Translate ``command`` typed at ``pc ⊢ env``; empty copy blocks are omitted."""
    require_typeable(lattice, pc, env, command)
    output, post, copies = _translate(lattice, pc, env, command)
    return TranslationResult(output, post, pc, copies)


def _translate(lattice: Lattice, pc: Level, env: TypeEnv, command: Command) -> tuple[Command, TypeEnv, int]:
    match command:
        case Skip():
            return Skip(), env, 0
        case Assign(target, rhs):
            level = lattice.join(pc, expr_type(env, rhs))
            return (
                Assign(fixed_var(lattice, target.name, level), fix_expr(env, rhs)),
                env.updated(target.name, level),
                0,
            )
        case Seq():
            parts: list[Command] = []
            copies = 0
            for part in flatten_seq(command):
                translated, env, count = _translate(lattice, pc, env, part)
                parts.extend(flatten_seq(translated))
                copies += count
            return sequence(parts), env, copies
        case If(cond, then, orelse):
            inner = lattice.join(pc, expr_type(env, cond))
            d1, post1, n1 = _translate(lattice, inner, env, then)
            d2, post2, n2 = _translate(lattice, inner, env, orelse)
            post = post1.join(post2)
            block1, block2 = fassign(post, post1), fassign(post, post2)
            output = If(fix_expr(env, cond), _then(d1, block1), _then(d2, block2))
            return output, post, n1 + n2 + len(block1) + len(block2)
        case While(cond, body):
            invariant, _ = while_fixpoint(lattice, pc, env, cond, body)
            inner = lattice.join(pc, expr_type(invariant, cond))
            d, after_body, n = _translate(lattice, inner, invariant, body)
            entry, back = fassign(invariant, env), fassign(invariant, after_body)
            loop = While(fix_expr(invariant, cond), _then(d, back))
            return sequence([*entry, loop]), invariant, n + len(entry) + len(back)
    raise TypeError(f"not a command: {command!r}")


def check_fixed(lattice: Lattice, pc: Level, command: Command) -> bool:
    """Flow-insensitive typing of a fixed-variable program.

    Raises FloatingVariableError on any floating variable.
    """
    match command:
        case Skip():
            return True
        case Assign(target, rhs):
            level = fixed_level(lattice, target)
            return lattice.leq(expr_level(lattice, None, rhs), level) and lattice.leq(pc, level)
        case Seq():
            return all(check_fixed(lattice, pc, part) for part in flatten_seq(command))
        case If(cond, then, orelse):
            inner = lattice.join(pc, expr_level(lattice, None, cond))
            return check_fixed(lattice, inner, then) and check_fixed(lattice, inner, orelse)
        case While(cond, body):
            return check_fixed(lattice, lattice.join(pc, expr_level(lattice, None, cond)), body)
    raise TypeError(f"not a command: {command!r}")


# --- the quadratic blow-up family ---------------------------------------------


def blowup_family(n: int) -> Command:
    """``if y1 then … if yn then (if h then x1 := 0 ; … ; xn := 0 end) end … end``."""
    if n < 1:
        raise ValueError("blow-up family needs n >= 1")
    innermost: Command = If(
        Var("h"), sequence(Assign(Var(f"x{i}"), Lit(0)) for i in range(1, n + 1)), Skip()
    )
    for i in range(n, 0, -1):
        innermost = If(Var(f"y{i}"), innermost, Skip())
    return innermost


def blowup_environment(n: int, lattice: Lattice | None = None) -> TypeEnv:
    """``h`` at top, every other variable of the family at bottom."""
    lattice = lattice or builtin_lattice("two-point")
    names = ["h", *(f"x{i}" for i in range(1, n + 1)), *(f"y{i}" for i in range(1, n + 1))]
    return TypeEnv(lattice, {name: lattice.top if name == "h" else lattice.bottom for name in names})


@dataclass(frozen=True)
class BlowupFit:
    sizes: tuple[int, ...]
    copies: tuple[int, ...]
    coefficient: float
    relative_residual: float


def measure_blowup(ns: Iterable[int] = range(1, 7)) -> BlowupFit:
    """Count the copies inserted for each family member and fit them to a·n²."""
    sizes = tuple(ns)
    copies: list[int] = []
    for n in sizes:
        env = blowup_environment(n)
        copies.append(translate(env.lattice, env.lattice.bottom, env, blowup_family(n)).copies)
    design = np.array([[float(n * n)] for n in sizes])
    observed = np.array(copies, dtype=float)
    solution, *_ = np.linalg.lstsq(design, observed, rcond=None)
    coefficient = float(solution[0])
    residual = float(np.linalg.norm(observed - design[:, 0] * coefficient) / np.linalg.norm(observed))
    return BlowupFit(sizes, tuple(copies), coefficient, residual)

