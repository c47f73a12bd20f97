"""Principal typings over the universal lattice P(Var).

A command's principal typing ⟨Δ₀, Δ_C⟩ records, for each variable, the set
of initial variables its final value may depend on. Every derivable typing
in every other lattice follows from it through the Galois connection
``alpha``/``gamma`` fixed by a pre-environment.

Principal typings are computed at program-counter level ⊥ only.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from typing import NamedTuple

from .errors import EnvironmentMismatchError, LatticeError, UnknownElementError
from .lang import Assign, Command, Lit, Var, program_variables, sequence
from .lattice import Lattice, Level, join_all, meet_all
from .powerset_lattice import PowersetElement, PowersetLattice
from .security_types import Judgement, TypeEnv, check_judgement, spc


@dataclass(frozen=True)
class PrincipalTyping:
    universe: frozenset[str]
    delta0: TypeEnv
    deltaC: TypeEnv

    @property
    def lattice(self) -> Lattice:
        return self.delta0.lattice


class Typing(NamedTuple):
    """A pre/post environment pair over one lattice."""

    pre: TypeEnv
    post: TypeEnv

    @property
    def lattice(self) -> Lattice:
        return self.pre.lattice


def identity_dependencies(universe: Iterable[str]) -> TypeEnv:
    """Δ₀: every variable depends on itself only."""
    names = frozenset(universe)
    lattice = PowersetLattice(names)
    return TypeEnv(lattice, {name: frozenset({name}) for name in names})


def principal(command: Command, universe: Iterable[str] | None = None) -> PrincipalTyping:
    """⟨Δ₀, spc(∅, Δ₀, command)⟩ over P(universe).

    ``universe`` defaults to the floating variables of ``command``.
    """
    names = frozenset(program_variables(command)[0] if universe is None else universe)
    delta0 = identity_dependencies(names)
    delta_c = spc(delta0.lattice, frozenset(), delta0, command)
    return PrincipalTyping(names, delta0, delta_c)


# --- the Galois connection fixed by an environment ---------------------------


def alpha(env: TypeEnv, members: Iterable[str]) -> Level:
    """α_Γ(X): the lub of Γ over X."""
    return join_all(env.lattice, (env[name] for name in sorted(members)))


def gamma(env: TypeEnv, level: Level) -> PowersetElement:
    """γ_Γ(t): the variables Γ places at or below t."""
    if not env.lattice.contains(level):
        raise UnknownElementError(level)
    return frozenset(name for name, own in env.items() if env.lattice.leq(own, level))


def alpha_env(env: TypeEnv, dependencies: TypeEnv) -> TypeEnv:
    """α*_Γ applied pointwise to a dependency environment."""
    _require_powerset(dependencies)
    return TypeEnv(env.lattice, {name: alpha(env, deps) for name, deps in dependencies.items()})


def gamma_env(env: TypeEnv, post: TypeEnv) -> TypeEnv:
    """γ*_Γ applied pointwise to an environment over Γ's lattice."""
    lattice = PowersetLattice(env.variables)
    return TypeEnv(lattice, {name: gamma(env, level) for name, level in post.items()})


def _require_powerset(env: TypeEnv) -> PowersetLattice:
    if not isinstance(env.lattice, PowersetLattice):
        raise LatticeError(f"expected an environment over a powerset lattice, not {env.lattice.name}")
    return env.lattice


def _require_universe(pt: PrincipalTyping, env: TypeEnv) -> None:
    if env.variables != pt.universe:
        missing = sorted(env.variables ^ pt.universe)
        raise EnvironmentMismatchError(
            f"environment and principal typing differ on variables: {', '.join(missing)}"
        )


def derive_smallest(pt: PrincipalTyping, env: TypeEnv) -> TypeEnv:
    """The least Γ′ with ⊥ ⊢ Γ {C} Γ′, read off Δ_C."""
    _require_universe(pt, env)
    return alpha_env(env, pt.deltaC)


def derive_greatest(pt: PrincipalTyping, post: TypeEnv) -> TypeEnv:
    """The greatest Γ with ⊥ ⊢ Γ {C} Γ′.

    Γ(x) is the meet of Γ′(y) over every y whose dependencies contain x;
    a variable nothing depends on gets ⊤.
    """
    _require_universe(pt, post)
    lattice = post.lattice
    return TypeEnv(
        lattice,
        {
            name: meet_all(lattice, (post[y] for y in sorted(pt.universe) if name in pt.deltaC[y]))
            for name in pt.universe
        },
    )


def derivable_via_principal(pt: PrincipalTyping, pre: TypeEnv, post: TypeEnv) -> bool:
    """Derivability of ⊥ ⊢ pre {C} post by comparing against Δ_C alone."""
    _require_universe(pt, pre)
    _require_universe(pt, post)
    lattice = pre.lattice
    return all(
        lattice.leq(pre[source], post[name])
        for name, sources in pt.deltaC.items()
        for source in sources
    )


def canonical_typing(pre: TypeEnv, post: TypeEnv) -> Typing:
    """⟨Δ₀, γ*_Γ(Γ′)⟩: the universal typing that subsumes ⟨Γ, Γ′⟩."""
    gamma_post = gamma_env(pre, post)
    delta0 = TypeEnv(gamma_post.lattice, {name: frozenset({name}) for name in pre.variables})
    return Typing(delta0, gamma_post)


# --- subsumption -------------------------------------------------------------


def _require_same_universe(first: Typing, second: Typing) -> frozenset[str]:
    universe = first.pre.variables
    for env in (first.post, second.pre, second.post):
        if env.variables != universe:
            missing = sorted(env.variables ^ universe)
            raise EnvironmentMismatchError(f"typings differ on variables: {', '.join(missing)}")
    return universe


def subsumption_violations(first: Typing, second: Typing) -> list[tuple[str, str]]:
    """Pairs (x, y) with Γ₁(x) ⊑ Γ₁′(y) but Γ₂(x) ⋢ Γ₂′(y), in sorted order."""
    universe = sorted(_require_same_universe(first, second))
    l1, l2 = first.lattice, second.lattice
    return [
        (x, y)
        for x in universe
        for y in universe
        if l1.leq(first.pre[x], first.post[y]) and not l2.leq(second.pre[x], second.post[y])
    ]


def subsumes(first: Typing | tuple[TypeEnv, TypeEnv], second: Typing | tuple[TypeEnv, TypeEnv]) -> bool:
    """Whether ``first``'s noninterference property implies ``second``'s."""
    return not subsumption_violations(Typing(*first), Typing(*second))


def distinguishing_program(
    first: Typing | tuple[TypeEnv, TypeEnv], second: Typing | tuple[TypeEnv, TypeEnv]
) -> tuple[str, str, Command] | None:
    """A program secure under ``first`` but not under ``second``.

    Returns (x, y, ``y := x ; z₁ := 0 ; …``) for the first violating pair,
    or None when ``first`` subsumes ``second``.
    """
    violations = subsumption_violations(Typing(*first), Typing(*second))
    if not violations:
        return None
    x, y = violations[0]
    others = sorted(Typing(*first).pre.variables - {y})
    program = sequence([Assign(Var(y), Var(x)), *(Assign(Var(z), Lit(0)) for z in others)])
    return x, y, program


def completeness_renaming(
    first: Typing | tuple[TypeEnv, TypeEnv], second: Typing | tuple[TypeEnv, TypeEnv]
) -> dict[Level, Level]:
    """f(s) = ⊔{Γ₂(x) | Γ₁(x) ⊑ s}, a monotone map from the first lattice to the second."""
    first, second = Typing(*first), Typing(*second)
    _require_same_universe(first, second)
    l1, l2 = first.lattice, second.lattice
    return {
        level: join_all(l2, (second.pre[x] for x in sorted(first.pre) if l1.leq(first.pre[x], level)))
        for level in l1.elements()
    }


# --- the independence view ---------------------------------------------------


class IndependenceEnv(TypeEnv):
    """∇: for each variable, the initial variables its value is independent of.

    Ordered by pointwise reverse inclusion; the join of that order is
    intersection.
    """

    __slots__ = ()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TypeEnv):
            return NotImplemented
        return type(other) is type(self) and TypeEnv.__eq__(self, other)

    def __hash__(self) -> int:
        return hash(("independence", super().__hash__()))

    def __repr__(self) -> str:
        return f"IndependenceEnv{super().__repr__()}"

    def leq(self, other: TypeEnv) -> bool:
        self._require_compatible(other)
        return all(self[name] >= other[name] for name in self)

    def join(self, other: TypeEnv) -> IndependenceEnv:
        self._require_compatible(other)
        return IndependenceEnv(self.lattice, {name: self[name] & other[name] for name in self})

    def meet(self, other: TypeEnv) -> IndependenceEnv:
        self._require_compatible(other)
        return IndependenceEnv(self.lattice, {name: self[name] | other[name] for name in self})

    def updated(self, name: str, level: Level) -> IndependenceEnv:
        return IndependenceEnv(self.lattice, TypeEnv.updated(self, name, level))


def to_independence(dependencies: TypeEnv) -> IndependenceEnv:
    """∇(x) = Var − Δ(x)."""
    lattice = _require_powerset(dependencies)
    return IndependenceEnv(lattice, {name: lattice.top - deps for name, deps in dependencies.items()})


def from_independence(independence: TypeEnv) -> TypeEnv:
    """Δ(x) = Var − ∇(x)."""
    lattice = _require_powerset(independence)
    return TypeEnv(lattice, {name: lattice.top - indep for name, indep in independence.items()})


def independence_leq(first: IndependenceEnv, second: IndependenceEnv) -> bool:
    """∇₁ ⪯ ∇₂: ∇₁ claims at least every independence ∇₂ claims."""
    return first.leq(second)


def check_independence(
    context: Iterable[str], pre: IndependenceEnv, command: Command, post: IndependenceEnv
) -> bool:
    """Derivability of the independence judgement G ⊢ {∇} C {∇′}.

    The context set G is used unchanged as the program-counter level of the
    complemented dependency judgement.
    """
    lattice = _require_powerset(pre)
    pc = frozenset(context)
    if not lattice.contains(pc):
        raise UnknownElementError(pc)
    return check_judgement(Judgement(pc, from_independence(pre), command, from_independence(post)))
