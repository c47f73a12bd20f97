"""Lattice protocol for flow lattices, plus construction helpers.

Two implementations satisfy the protocol: ``FiniteLattice`` (named elements,
precomputed join/meet tables) and ``PowersetLattice`` (the universal lattice
P(Var), computed on demand).
"""

from __future__ import annotations

import itertools
from collections.abc import Hashable, Iterable, Iterator, Sequence
from typing import Protocol, runtime_checkable

from .errors import InputError, LatticeError

# A lattice element: a name for finite lattices, a frozenset for powersets.
Level = Hashable


@runtime_checkable
class Lattice(Protocol):
    """Protocol for finite lattices used as security-type domains.

    This Protocol is runtime checkable, so isinstance() can be used to verify
    that an implementation conforms to the interface.
    """

    name: str

    @property
    def bottom(self) -> Level: ...

    @property
    def top(self) -> Level: ...

    def elements(self) -> Iterator[Level]:
        """All elements, in a deterministic order."""
        ...

    def contains(self, element: Level) -> bool: ...

    def leq(self, a: Level, b: Level) -> bool: ...

    def join(self, a: Level, b: Level) -> Level: ...

    def meet(self, a: Level, b: Level) -> Level: ...

    def height(self) -> int:
        """Number of elements in a longest chain."""
        ...

    def render(self, element: Level) -> str: ...

    def parse_element(self, text: str) -> Level:
        """Resolve the textual name of an element; raises UnknownElementError."""
        ...


def leq(lattice: Lattice, a: Level, b: Level) -> bool:
    return lattice.leq(a, b)


def join(lattice: Lattice, a: Level, b: Level) -> Level:
    return lattice.join(a, b)


def meet(lattice: Lattice, a: Level, b: Level) -> Level:
    return lattice.meet(a, b)


def join_all(lattice: Lattice, levels: Iterable[Level]) -> Level:
    """Least upper bound of a finite family; the empty join is bottom."""
    result = lattice.bottom
    for level in levels:
        result = lattice.join(result, level)
    return result


def meet_all(lattice: Lattice, levels: Iterable[Level]) -> Level:
    """Greatest lower bound of a finite family; the empty meet is top."""
    result = lattice.top
    for level in levels:
        result = lattice.meet(result, level)
    return result


def build_lattice(
    elements: Sequence[str], covers: Iterable[tuple[str, str]], name: str = "lattice"
) -> Lattice:
    """Build and validate a lattice from its Hasse diagram."""
    from .finite_lattice import FiniteLattice

    return FiniteLattice(name, elements, covers)


def powerset_lattice(universe: Iterable[str]) -> Lattice:
    from .powerset_lattice import PowersetLattice

    return PowersetLattice(universe)


def two_point() -> Lattice:
    return build_lattice(["L", "H"], [("L", "H")], name="two-point")


def diamond() -> Lattice:
    return build_lattice(
        ["L", "M", "N", "H"],
        [("L", "M"), ("L", "N"), ("M", "H"), ("N", "H")],
        name="diamond",
    )


def chain3() -> Lattice:
    return build_lattice(["L", "M", "H"], [("L", "M"), ("M", "H")], name="chain3")


BUILTIN_LATTICES = ("two-point", "diamond", "chain3", "powerset")


def builtin_lattice(name: str, universe: Iterable[str] = ()) -> Lattice:
    """A built-in lattice by name; ``powerset`` ranges over ``universe``."""
    match name:
        case "two-point":
            return two_point()
        case "diamond":
            return diamond()
        case "chain3":
            return chain3()
        case "powerset":
            return powerset_lattice(universe)
    raise LatticeError(
        f"unknown built-in lattice {name!r}; expected one of: {', '.join(BUILTIN_LATTICES)}"
    )


def parse_lattice_spec(text: str, source: str = "<lattice>") -> Lattice:
    """Read the plain-text lattice format::

        lattice <name>
        elements <e1> <e2> ...
        order <lower> < <upper>
    """
    name: str | None = None
    elements: list[str] | None = None
    covers: list[tuple[str, str]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        words = rest.split()
        if keyword == "lattice" and name is None and len(words) == 1:
            name = words[0]
        elif keyword == "elements" and name is not None and elements is None and words:
            elements = words
        elif keyword == "order" and elements is not None and len(words) == 3 and words[1] == "<":
            covers.append((words[0], words[2]))
        else:
            raise InputError(f"unexpected line {raw.strip()!r}", source, number)
    if name is None or elements is None:
        raise InputError("expected 'lattice <name>' and 'elements ...' lines", source)
    try:
        return build_lattice(elements, covers, name=name)
    except LatticeError as exc:
        raise InputError(str(exc), source) from exc


def monotone_maps(source: Lattice, target: Lattice) -> Iterator[dict[Level, Level]]:
    """Every order-preserving map from ``source`` to ``target``.

    Enumerates |target|^|source| candidates, so keep both lattices small.
    """
    domain = list(source.elements())
    codomain = list(target.elements())
    ordered_pairs = [(a, b) for a in domain for b in domain if a != b and source.leq(a, b)]
    for images in itertools.product(codomain, repeat=len(domain)):
        mapping = dict(zip(domain, images))
        if all(target.leq(mapping[a], mapping[b]) for a, b in ordered_pairs):
            yield mapping
