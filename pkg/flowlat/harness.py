"""Semantic checks backing the type systems with actual program runs.

``ni_check`` tests the noninterference condition of a typing, and
``safety_check`` tests that a command run under a raised program counter
leaves low variables alone. ``equiv_check`` runs a floating program and
its fixed-variable counterpart from compatible stores. Runs that exhaust
their fuel are skipped: the properties are termination-insensitive.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyDomainError, EnvironmentMismatchError, FloatingVariableError, UndeclaredVariableError
from .lang import Command, Nontermination, Store, Var, execute, program_variables, require_floating, var_sort_key
from .lattice import Lattice, Level
from .powerset_lattice import PowersetLattice
from .security_types import TypeEnv

DEFAULT_DOMAIN = (0, 1)
DEFAULT_FUEL = 64


class Outcome(Enum):
    PASS = "pass"
    COUNTEREXAMPLE = "counterexample"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Exhaustive:
    """Every store over the domain."""


@dataclass(frozen=True)
class Random:
    """``trials`` samples per obligation drawn from a seeded generator."""

    seed: int = 0
    trials: int = 200


Mode = Exhaustive | Random


@dataclass(frozen=True)
class Witness:
    """Everything needed to re-run a counterexample.

    ``kind`` is ``noninterference``, ``safety`` or ``equivalence``. For
    equivalence witnesses ``second`` is the fixed-variable store and
    ``other`` the fixed-variable program.
    """

    kind: str
    command: Command
    first: Store
    second: Store | None
    variable: Var
    fuel: int
    level: Level | None = None
    pre: TypeEnv | None = None
    post: TypeEnv | None = None
    other: Command | None = None


@dataclass(frozen=True)
class NIVerdict:
    outcome: Outcome
    witness: Witness | None = None
    pairs_tested: int = 0
    skipped: int = 0
    termination_mismatches: int = 0
    levels: tuple[Level, ...] = field(default=())

    @property
    def holds(self) -> bool:
        return self.outcome is Outcome.PASS


# --- shared plumbing ---------------------------------------------------------


def normalise_domain(domain: Iterable[int]) -> tuple[int, ...]:
    values = tuple(sorted({int(v) for v in domain}))
    if not values:
        raise EmptyDomainError("the value domain is empty")
    return values


def _require_covered(command: Command, env: TypeEnv) -> None:
    for name in sorted(program_variables(command)[0]):
        if name not in env:
            raise UndeclaredVariableError(name)


def _all_stores(variables: Sequence[str], domain: Sequence[int]) -> Iterator[Store]:
    for values in itertools.product(domain, repeat=len(variables)):
        yield Store(zip(variables, values))


def _sampled_stores(variables: Sequence[str], domain: Sequence[int], mode: Random) -> list[Store]:
    rng = np.random.default_rng(mode.seed)
    rows = rng.choice(np.array(domain), size=(mode.trials, len(variables)))
    return [Store(zip(variables, (int(v) for v in row))) for row in rows]


def run_all(command: Command, stores: Sequence[Store], fuel: int, workers: int = 1) -> list[Store | Nontermination]:
    """Execute ``command`` from each store, keeping input order."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda store: execute(command, store, fuel), stores))
    return [execute(command, store, fuel) for store in stores]


def _level_key(lattice: Lattice, level: Level) -> tuple[int, str]:
    if isinstance(lattice, PowersetLattice):
        return (len(level), lattice.render(level))  # type: ignore[arg-type]
    return (0, "")


def _obligations(pre: TypeEnv, post: TypeEnv) -> list[tuple[Level, frozenset[str], frozenset[str]]]:
    """(t, {x | pre(x) ⊑ t}, {y | post(y) ⊑ t}) for each distinct relation pair.

    Powerset levels are restricted to the post-levels plus top: for each y the
    strongest hypothesis is t = post(y).
    """
    lattice = pre.lattice
    if isinstance(lattice, PowersetLattice):
        candidates = sorted({*post.values(), lattice.top}, key=lambda t: _level_key(lattice, t))
    else:
        candidates = list(lattice.elements())
    seen: set[tuple[frozenset[str], frozenset[str]]] = set()
    result = []
    for level in candidates:
        low_in = frozenset(x for x, own in pre.items() if lattice.leq(own, level))
        low_out = frozenset(y for y, own in post.items() if lattice.leq(own, level))
        if not low_out or (low_in, low_out) in seen:
            continue
        seen.add((low_in, low_out))
        result.append((level, low_in, low_out))
    return result


# --- noninterference -----------------------------------------------------------


def ni_check(
    lattice: Lattice,
    command: Command,
    pre: TypeEnv,
    post: TypeEnv,
    domain: Iterable[int] = DEFAULT_DOMAIN,
    mode: Mode = Exhaustive(),
    fuel: int = DEFAULT_FUEL,
    workers: int = 1,
) -> NIVerdict:
    """Test that stores agreeing up to level t end agreeing up to level t, for every t."""
    require_floating(command)
    pre._require_compatible(post)
    if pre.lattice != lattice:
        raise EnvironmentMismatchError("environments range over a different lattice")
    _require_covered(command, pre)
    values = normalise_domain(domain)
    variables = sorted(pre.variables)
    obligations = _obligations(pre, post)
    levels = tuple(level for level, _, _ in obligations)

    pairs: list[tuple[Level, frozenset[str], Store, Store]] = []
    if isinstance(mode, Random):
        rng = np.random.default_rng(mode.seed)
        for level, low_in, low_out in obligations:
            for _ in range(mode.trials):
                sigma = [int(v) for v in rng.choice(np.array(values), size=len(variables))]
                rho = [
                    s if name in low_in else int(rng.choice(np.array(values)))
                    for name, s in zip(variables, sigma)
                ]
                pairs.append((level, low_out, Store(zip(variables, sigma)), Store(zip(variables, rho))))
        stores = sorted({s for _, _, a, b in pairs for s in (a, b)}, key=lambda s: tuple(s.values()))
    else:
        stores = list(_all_stores(variables, values))

    results = dict(zip(stores, run_all(command, stores, fuel, workers)))
    skipped = sum(1 for r in results.values() if isinstance(r, Nontermination))

    def verdict(outcome: Outcome, tested: int, witness: Witness | None = None) -> NIVerdict:
        return NIVerdict(outcome, witness, tested, skipped, 0, levels)

    def witness(level: Level, first: Store, second: Store, name: str) -> Witness:
        return Witness("noninterference", command, first, second, Var(name), fuel, level, pre, post)

    tested = 0
    if isinstance(mode, Random):
        for level, low_out, sigma, rho in pairs:
            out_sigma, out_rho = results[sigma], results[rho]
            if isinstance(out_sigma, Nontermination) or isinstance(out_rho, Nontermination):
                continue
            tested += 1
            for name in sorted(low_out):
                if out_sigma[name] != out_rho[name]:
                    return verdict(Outcome.COUNTEREXAMPLE, tested, witness(level, sigma, rho, name))
    else:
        for level, low_in, low_out in obligations:
            groups: dict[tuple[int, ...], list[Store]] = {}
            for store in stores:
                if not isinstance(results[store], Nontermination):
                    groups.setdefault(tuple(store[x] for x in sorted(low_in)), []).append(store)
            for members in groups.values():
                reference = members[0]
                expected = results[reference]
                tested += len(members) * (len(members) - 1) // 2
                for other in members[1:]:
                    outcome = results[other]
                    for name in sorted(low_out):
                        if expected[name] != outcome[name]:  # type: ignore[index]
                            return verdict(Outcome.COUNTEREXAMPLE, tested, witness(level, reference, other, name))

    if obligations and skipped == len(results):
        return verdict(Outcome.INCONCLUSIVE, tested)
    return verdict(Outcome.PASS, tested)


# --- safety ----------------------------------------------------------------------


def safety_check(
    command: Command,
    pc: Level,
    post: TypeEnv,
    domain: Iterable[int] = DEFAULT_DOMAIN,
    mode: Mode = Exhaustive(),
    fuel: int = DEFAULT_FUEL,
    workers: int = 1,
) -> NIVerdict:
    """Variables not above ``pc`` in ``post`` must be left unchanged by every terminating run."""
    require_floating(command)
    _require_covered(command, post)
    lattice = post.lattice
    values = normalise_domain(domain)
    guarded = [name for name, level in post.items() if not lattice.leq(pc, level)]
    if not guarded:
        return NIVerdict(Outcome.PASS)
    variables = sorted(post.variables)
    if isinstance(mode, Random):
        stores = _sampled_stores(variables, values, mode)
    else:
        stores = list(_all_stores(variables, values))
    tested = skipped = 0
    for store, result in zip(stores, run_all(command, stores, fuel, workers)):
        if isinstance(result, Nontermination):
            skipped += 1
            continue
        tested += 1
        for name in guarded:
            if result[name] != store[name]:
                witness = Witness("safety", command, store, None, Var(name), fuel, pc, None, post)
                return NIVerdict(Outcome.COUNTEREXAMPLE, witness, tested, skipped)
    if tested == 0:
        return NIVerdict(Outcome.INCONCLUSIVE, None, tested, skipped)
    return NIVerdict(Outcome.PASS, None, tested, skipped)


# --- translation equivalence -----------------------------------------------------


def in_play(env: TypeEnv, name: str) -> Var:
    return Var(name, env.lattice.render(env[name]))


def compatible_store(store: Store, env: TypeEnv, fixed_vars: Iterable[Var] = ()) -> Store:
    """A fixed-variable store ρ with ρ(x@Γ(x)) = σ(x); every other listed copy is 0."""
    values = {var: 0 for var in fixed_vars}
    for name in env:
        values[in_play(env, name)] = store[name]
    return Store(values)


def equiv_check(
    command: Command,
    fixed: Command,
    pre: TypeEnv,
    post: TypeEnv,
    domain: Iterable[int] = DEFAULT_DOMAIN,
    mode: Mode = Exhaustive(),
    fuel: int = DEFAULT_FUEL,
    workers: int = 1,
) -> NIVerdict:
    """Run ``command`` and ``fixed`` from compatible stores; terminating pairs must end compatible."""
    require_floating(command)
    floating_in_fixed = program_variables(fixed)[0]
    if floating_in_fixed:
        raise FloatingVariableError(f"floating variable {min(floating_in_fixed)} in a fixed-variable program")
    pre._require_compatible(post)
    _require_covered(command, pre)
    values = normalise_domain(domain)
    variables = sorted(pre.variables)
    copies = sorted(
        program_variables(fixed)[1] | {in_play(pre, x) for x in variables} | {in_play(post, x) for x in variables},
        key=var_sort_key,
    )
    if isinstance(mode, Random):
        stores = _sampled_stores(variables, values, mode)
    else:
        stores = list(_all_stores(variables, values))
    fixed_stores = [compatible_store(store, pre, copies) for store in stores]
    floating_results = run_all(command, stores, fuel, workers)
    fixed_results = run_all(fixed, fixed_stores, fuel, workers)

    tested = skipped = mismatches = 0
    for sigma, rho, out_sigma, out_rho in zip(stores, fixed_stores, floating_results, fixed_results):
        stuck_sigma, stuck_rho = isinstance(out_sigma, Nontermination), isinstance(out_rho, Nontermination)
        if stuck_sigma and stuck_rho:
            skipped += 1
            continue
        if stuck_sigma or stuck_rho:
            mismatches += 1
            continue
        tested += 1
        for name in variables:
            if out_sigma[name] != out_rho[in_play(post, name)]:  # type: ignore[index]
                witness = Witness("equivalence", command, sigma, rho, Var(name), fuel, None, pre, post, fixed)
                return NIVerdict(Outcome.COUNTEREXAMPLE, witness, tested, skipped, mismatches)
    outcome = Outcome.INCONCLUSIVE if mismatches or tested == 0 else Outcome.PASS
    return NIVerdict(outcome, None, tested, skipped, mismatches)


# --- replay ----------------------------------------------------------------------


def replay(witness: Witness) -> bool:
    """Re-run a recorded counterexample; True when it still shows the violation."""
    first = execute(witness.command, witness.first, witness.fuel)
    if isinstance(first, Nontermination):
        return False
    match witness.kind:
        case "safety":
            return first[witness.variable] != witness.first[witness.variable]
        case "noninterference":
            if witness.second is None or witness.pre is None or witness.post is None:
                return False
            lattice, level = witness.pre.lattice, witness.level
            related = all(
                witness.first[x] == witness.second[x]
                for x, own in witness.pre.items()
                if lattice.leq(own, level)
            )
            observable = lattice.leq(witness.post[witness.variable.name], level)
            second = execute(witness.command, witness.second, witness.fuel)
            if isinstance(second, Nontermination):
                return False
            return related and observable and first[witness.variable] != second[witness.variable]
        case "equivalence":
            if witness.second is None or witness.other is None or witness.post is None:
                return False
            second = execute(witness.other, witness.second, witness.fuel)
            if isinstance(second, Nontermination):
                return False
            return first[witness.variable] != second[in_play(witness.post, witness.variable.name)]
    raise ValueError(f"unknown witness kind: {witness.kind!r}")
