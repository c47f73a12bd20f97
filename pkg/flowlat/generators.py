"""Seeded random programs and environments for the property suites."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .lang import Assign, BinOp, Command, Expr, If, Lit, Seq, Skip, Var, While
from .lattice import Lattice
from .security_types import TypeEnv

DEFAULT_VARIABLES = ("a", "b", "c", "d")

_FORMS = ("assign", "skip", "seq", "if", "while")
_FORM_WEIGHTS = np.array([0.3, 0.05, 0.3, 0.2, 0.15])
# no "*": squaring inside fuel-bounded loops grows values doubly exponentially
_OPERATORS = ("+", "-", "==", "!=", "<", "<=", ">", ">=")

# chance that a loop gets an arbitrary guard instead of a countdown
_ARBITRARY_GUARD = 0.25


def _pick(rng: np.random.Generator, items: Sequence[str]) -> str:
    return items[int(rng.integers(len(items)))]


def gen_expr(rng: np.random.Generator, variables: Sequence[str], depth: int = 2) -> Expr:
    roll = rng.random()
    if depth <= 1 or roll < 0.35:
        return Var(_pick(rng, variables))
    if roll < 0.5:
        return Lit(int(rng.integers(0, 3)))
    return BinOp(_pick(rng, _OPERATORS), gen_expr(rng, variables, depth - 1), gen_expr(rng, variables, depth - 1))


def _command(rng: np.random.Generator, depth: int, variables: Sequence[str], targets: Sequence[str]) -> Command:
    if depth <= 1 or not targets:
        if not targets:
            return Skip()
        return Assign(Var(_pick(rng, targets)), gen_expr(rng, variables))
    form = _FORMS[int(rng.choice(len(_FORMS), p=_FORM_WEIGHTS))]
    match form:
        case "assign":
            return Assign(Var(_pick(rng, targets)), gen_expr(rng, variables))
        case "skip":
            return Skip()
        case "seq":
            return Seq(
                _command(rng, depth - 1, variables, targets),
                _command(rng, depth - 1, variables, targets),
            )
        case "if":
            return If(
                gen_expr(rng, variables),
                _command(rng, depth - 1, variables, targets),
                _command(rng, depth - 1, variables, targets),
            )
    if rng.random() < _ARBITRARY_GUARD:
        return While(gen_expr(rng, variables), _command(rng, depth - 1, variables, targets))
    counter = _pick(rng, targets)
    remaining = [t for t in targets if t != counter]
    body = _command(rng, depth - 1, variables, remaining)
    step = Assign(Var(counter), BinOp("-", Var(counter), Lit(1)))
    return While(BinOp(">", Var(counter), Lit(0)), Seq(body, step))


def gen_program(seed: int, depth: int, variables: Sequence[str] = DEFAULT_VARIABLES) -> Command:
    """A pseudo-random command of nesting depth at most ``depth``.

    Depth 1 always yields a single assignment. Most loops count a variable
    down to zero and never assign it in their body.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not variables:
        raise ValueError("need at least one variable")
    rng = np.random.default_rng(seed)
    names = sorted(variables)
    return _command(rng, depth, names, names)


def gen_env(seed: int, lattice: Lattice, variables: Sequence[str] = DEFAULT_VARIABLES) -> TypeEnv:
    """Each variable at a uniformly chosen lattice element."""
    rng = np.random.default_rng(seed)
    elements = list(lattice.elements())
    return TypeEnv(lattice, {name: elements[int(rng.integers(len(elements)))] for name in sorted(variables)})


def gen_corpus(
    count: int, max_depth: int, variables: Sequence[str] = DEFAULT_VARIABLES, seed: int = 0
) -> list[Command]:
    """``count`` programs with seeds ``seed, seed + 1, …``, depths cycling through 1..max_depth."""
    return [gen_program(seed + i, 1 + i % max_depth, variables) for i in range(count)]
