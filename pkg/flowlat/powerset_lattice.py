"""The universal lattice P(Var), represented lazily."""

import itertools
from collections.abc import Iterable, Iterator

from .errors import LatticeError, UnknownElementError

PowersetElement = frozenset[str]


def render_set(members: Iterable[str]) -> str:
    """``{a,b}`` with members sorted, the canonical rendering of a set of variables."""
    return "{" + ",".join(sorted(members)) + "}"


class PowersetLattice:
    """Subsets of a finite variable universe ordered by inclusion.

    Elements are frozensets; join is union, meet is intersection. Nothing
    is tabulated, so large universes cost nothing until enumerated.
    """

    def __init__(self, universe: Iterable[str]) -> None:
        self.universe: PowersetElement = frozenset(universe)
        if not self.universe:
            raise LatticeError("powerset lattice needs a nonempty universe")
        self.name = "powerset"

    def __repr__(self) -> str:
        return f"PowersetLattice({render_set(self.universe)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PowersetLattice):
            return NotImplemented
        return self.universe == other.universe

    def __hash__(self) -> int:
        return hash(("powerset", self.universe))

    def _check(self, element: object) -> PowersetElement:
        if isinstance(element, frozenset) and element <= self.universe:
            return element
        raise UnknownElementError(element)

    @property
    def bottom(self) -> PowersetElement:
        return frozenset()

    @property
    def top(self) -> PowersetElement:
        return self.universe

    def elements(self) -> Iterator[PowersetElement]:
        members = sorted(self.universe)
        for size in range(len(members) + 1):
            for subset in itertools.combinations(members, size):
                yield frozenset(subset)

    def contains(self, element: object) -> bool:
        return isinstance(element, frozenset) and element <= self.universe

    def leq(self, a: PowersetElement, b: PowersetElement) -> bool:
        return self._check(a) <= self._check(b)

    def join(self, a: PowersetElement, b: PowersetElement) -> PowersetElement:
        return self._check(a) | self._check(b)

    def meet(self, a: PowersetElement, b: PowersetElement) -> PowersetElement:
        return self._check(a) & self._check(b)

    def height(self) -> int:
        return len(self.universe) + 1

    def render(self, element: PowersetElement) -> str:
        return render_set(self._check(element))

    def parse_element(self, text: str) -> PowersetElement:
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise UnknownElementError(text)
        members = frozenset(m.strip() for m in text[1:-1].split(",") if m.strip())
        return self._check(members)
