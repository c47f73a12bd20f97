"""Named finite lattices with precomputed join and meet tables."""

from collections.abc import Iterable, Iterator, Sequence

import numpy as np

from .errors import LatticeError, UnknownElementError


class FiniteLattice:
    """A lattice given by element names and a cover relation (Hasse diagram)."""

    MAX_ELEMENTS = 64

    def __init__(self, name: str, elements: Sequence[str], covers: Iterable[tuple[str, str]]) -> None:
        self.name = name
        names = list(elements)
        if not names:
            raise LatticeError("a lattice needs at least one element")
        if len(names) > self.MAX_ELEMENTS:
            raise LatticeError(f"named lattices are limited to {self.MAX_ELEMENTS} elements")
        seen: set[str] = set()
        for element in names:
            if element in seen:
                raise LatticeError(f"duplicate element {element!r}")
            seen.add(element)
        self._names = tuple(names)
        self._index = {element: i for i, element in enumerate(names)}

        size = len(names)
        reach = np.eye(size, dtype=bool)
        for lower, upper in covers:
            if lower not in self._index or upper not in self._index:
                raise LatticeError(
                    f"cover ({lower}, {upper}) references an undeclared element", (lower, upper)
                )
            if lower == upper:
                raise LatticeError(f"cycle in cover relation at {lower!r}", (lower, upper))
            reach[self._index[lower], self._index[upper]] = True

        # Warshall closure: reach[i, j] iff names[i] ⊑ names[j]
        for k in range(size):
            reach |= np.logical_and.outer(reach[:, k], reach[k, :])
        cyclic = np.argwhere(reach & reach.T & ~np.eye(size, dtype=bool))
        if len(cyclic):
            i, j = cyclic[0]
            raise LatticeError(f"cycle in cover relation between {names[i]!r} and {names[j]!r}", (names[i], names[j]))
        self._order = reach

        joins: dict[tuple[int, int], int] = {}
        meets: dict[tuple[int, int], int] = {}
        for i in range(size):
            for j in range(i, size):
                pair = (names[i], names[j])
                upper = np.flatnonzero(reach[i] & reach[j])
                if len(upper) == 0:
                    raise LatticeError(f"pair ({pair[0]}, {pair[1]}) has no upper bound", pair)
                least = [u for u in upper if reach[u, upper].all()]
                if len(least) != 1:
                    raise LatticeError(f"pair ({pair[0]}, {pair[1]}) has no least upper bound", pair)
                lower = np.flatnonzero(reach[:, i] & reach[:, j])
                if len(lower) == 0:
                    raise LatticeError(f"pair ({pair[0]}, {pair[1]}) has no lower bound", pair)
                greatest = [v for v in lower if reach[lower, v].all()]
                if len(greatest) != 1:
                    raise LatticeError(f"pair ({pair[0]}, {pair[1]}) has no greatest lower bound", pair)
                joins[i, j] = joins[j, i] = int(least[0])
                meets[i, j] = meets[j, i] = int(greatest[0])
        self._joins = joins
        self._meets = meets

        bottoms = [i for i in range(size) if reach[i].all()]
        tops = [i for i in range(size) if reach[:, i].all()]
        if len(bottoms) != 1 or len(tops) != 1:
            raise LatticeError("lattice has no bottom or no top element")
        self._bottom = names[bottoms[0]]
        self._top = names[tops[0]]

    def __repr__(self) -> str:
        return f"FiniteLattice({self.name!r}, {list(self._names)!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteLattice):
            return NotImplemented
        return self._names == other._names and bool(np.array_equal(self._order, other._order))

    def __hash__(self) -> int:
        return hash((self._names, self._order.tobytes()))

    def _at(self, element: object) -> int:
        try:
            return self._index[element]  # type: ignore[index]
        except (KeyError, TypeError):
            raise UnknownElementError(element) from None

    @property
    def bottom(self) -> str:
        return self._bottom

    @property
    def top(self) -> str:
        return self._top

    def elements(self) -> Iterator[str]:
        return iter(self._names)

    def contains(self, element: object) -> bool:
        try:
            return element in self._index
        except TypeError:
            return False

    def leq(self, a: str, b: str) -> bool:
        return bool(self._order[self._at(a), self._at(b)])

    def join(self, a: str, b: str) -> str:
        return self._names[self._joins[self._at(a), self._at(b)]]

    def meet(self, a: str, b: str) -> str:
        return self._names[self._meets[self._at(a), self._at(b)]]

    def height(self) -> int:
        # longest chain, processing elements by the size of their down-set
        order = sorted(range(len(self._names)), key=lambda i: int(self._order[:, i].sum()))
        longest = [1] * len(self._names)
        for j in order:
            for i in order:
                if i != j and self._order[i, j]:
                    longest[j] = max(longest[j], longest[i] + 1)
        return max(longest)

    def render(self, element: str) -> str:
        self._at(element)
        return element

    def parse_element(self, text: str) -> str:
        name = text.strip()
        self._at(name)
        return name
