"""Brute-force enumeration of the declarative typing rules.

For a small lattice and variable set this computes, bottom-up over the
syntax tree, every triple (p, Γ, Γ′) for which ``p ⊢ Γ {C} Γ′`` has a
derivation. The weakening rule is applied after every rule, so each
intermediate set is closed under it. It shares no code with ``spc`` and
serves as an independent reference for ``check_judgement``.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Sequence

from .lang import Assign, BinOp, Command, Expr, If, Lit, Seq, Skip, Var, While
from .lattice import Lattice, Level
from .security_types import TypeEnv, expr_type

Triple = tuple[Level, TypeEnv, TypeEnv]


class DerivationOracle:
    """Derivable triples for commands over one lattice and one variable set."""

    def __init__(self, lattice: Lattice, variables: Iterable[str]) -> None:
        self.lattice = lattice
        self.variables = tuple(sorted(variables))
        levels = list(lattice.elements())
        self.levels = levels
        self.environments = [
            TypeEnv(lattice, zip(self.variables, images))
            for images in itertools.product(levels, repeat=len(self.variables))
        ]
        self._cache: dict[Command, frozenset[Triple]] = {}

    def _close(self, base: Iterable[Triple]) -> frozenset[Triple]:
        """Everything reachable from ``base`` by one application of weakening."""
        base = list(base)
        closed = set()
        for p2 in self.levels:
            for pre2 in self.environments:
                for post2 in self.environments:
                    for p1, pre1, post1 in base:
                        if self.lattice.leq(p2, p1) and pre2.leq(pre1) and post1.leq(post2):
                            closed.add((p2, pre2, post2))
                            break
        return frozenset(closed)

    def derivable(self, command: Command) -> frozenset[Triple]:
        if command not in self._cache:
            self._cache[command] = self._close(self._rule(command))
        return self._cache[command]

    def _rule(self, command: Command) -> Iterator[Triple]:
        lattice = self.lattice
        match command:
            case Skip():
                for p in self.levels:
                    for env in self.environments:
                        yield p, env, env
            case Assign(target, rhs):
                for p in self.levels:
                    for env in self.environments:
                        yield p, env, env.updated(target.name, lattice.join(p, expr_type(env, rhs)))
            case Seq(first, second):
                later: dict[tuple[Level, TypeEnv], list[TypeEnv]] = {}
                for p, pre, post in self.derivable(second):
                    later.setdefault((p, pre), []).append(post)
                for p, pre, middle in self.derivable(first):
                    for post in later.get((p, middle), ()):
                        yield p, pre, post
            case If(cond, then, orelse):
                both = self.derivable(then) & self.derivable(orelse)
                for p in self.levels:
                    for env in self.environments:
                        inner = lattice.join(p, expr_type(env, cond))
                        for post in self.environments:
                            if (inner, env, post) in both:
                                yield p, env, post
            case While(cond, body):
                inside = self.derivable(body)
                for p in self.levels:
                    for env in self.environments:
                        if (lattice.join(p, expr_type(env, cond)), env, env) in inside:
                            yield p, env, env
            case _:
                raise TypeError(f"not a command: {command!r}")

    def is_derivable(self, pc: Level, pre: TypeEnv, command: Command, post: TypeEnv) -> bool:
        return (pc, pre, post) in self.derivable(command)


def small_expressions(variables: Sequence[str]) -> list[Expr]:
    """``0``, each variable, and the sum of the first two variables."""
    exprs: list[Expr] = [Lit(0), *(Var(name) for name in variables)]
    if len(variables) >= 2:
        exprs.append(BinOp("+", Var(variables[0]), Var(variables[1])))
    return exprs


def enumerate_programs(variables: Sequence[str], depth: int) -> list[Command]:
    """Every command of nesting depth at most ``depth`` built from ``small_expressions``."""
    exprs = small_expressions(variables)
    leaves: list[Command] = [Skip(), *(Assign(Var(x), e) for x in variables for e in exprs)]
    programs = list(leaves)
    for _ in range(depth - 1):
        smaller = programs
        programs = list(leaves)
        programs += [Seq(a, b) for a in smaller for b in smaller]
        programs += [If(e, a, b) for e in exprs for a in smaller for b in smaller]
        programs += [While(e, a) for e in exprs for a in smaller]
    return programs
