"""Finite security lattices.

A lattice is described by its element names and a set of covering
relations (``a < b``).  The full partial order is the reflexive-transitive
closure of the covers.  Construction fails unless every pair of elements
has a unique least upper bound and a unique greatest lower bound, which
also guarantees unique top and bottom elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class NotALatticeError(ValueError):
    """The declared order is not a lattice (or is otherwise malformed)."""


@dataclass(frozen=True)
class Lattice:
    elements: tuple[str, ...]
    # Reflexive-transitive closure of the declared covers, as (lo, hi) pairs.
    order: frozenset[tuple[str, str]] = field(repr=False)
    bottom: str
    top: str

    @staticmethod
    def from_relations(elements: list[str], covers: list[tuple[str, str]]) -> "Lattice":
        if not elements:
            raise NotALatticeError("a lattice needs at least one element")
        seen: set[str] = set()
        for name in elements:
            if name in seen:
                raise NotALatticeError(f"duplicate lattice element {name!r}")
            seen.add(name)
        for lo, hi in covers:
            for name in (lo, hi):
                if name not in seen:
                    raise NotALatticeError(f"relation mentions undeclared element {name!r}")

        order = _closure(elements, covers)
        for a in elements:
            for b in elements:
                if a < b and (a, b) in order and (b, a) in order:
                    raise NotALatticeError(f"cycle: {a!r} and {b!r} are mutually ordered")

        # Every pair needs a unique join and meet.
        for a in elements:
            for b in elements:
                if _bound(elements, order, a, b, upper=True) is None:
                    raise NotALatticeError(f"elements {a!r} and {b!r} have no unique join")
                if _bound(elements, order, a, b, upper=False) is None:
                    raise NotALatticeError(f"elements {a!r} and {b!r} have no unique meet")

        bottom = [x for x in elements if all((x, y) in order for y in elements)]
        top = [x for x in elements if all((y, x) in order for y in elements)]
        if len(bottom) != 1 or len(top) != 1:  # unreachable once joins/meets exist
            raise NotALatticeError("lattice must have unique top and bottom")
        return Lattice(tuple(elements), order, bottom[0], top[0])

    def __contains__(self, name: str) -> bool:
        return name in self.elements

    def leq(self, a: str, b: str) -> bool:
        self._check(a)
        self._check(b)
        return (a, b) in self.order

    def join(self, a: str, b: str) -> str:
        self._check(a)
        self._check(b)
        out = _bound(self.elements, self.order, a, b, upper=True)
        assert out is not None
        return out

    def meet(self, a: str, b: str) -> str:
        self._check(a)
        self._check(b)
        out = _bound(self.elements, self.order, a, b, upper=False)
        assert out is not None
        return out

    def join_all(self, levels: list[str]) -> str:
        out = self.bottom
        for lv in levels:
            out = self.join(out, lv)
        return out

    def meet_all(self, levels: list[str]) -> str:
        out = self.top
        for lv in levels:
            out = self.meet(out, lv)
        return out

    def _check(self, name: str) -> None:
        if name not in self.elements:
            raise KeyError(f"unknown security level {name!r}")


def _closure(elements: list[str], covers: list[tuple[str, str]]) -> frozenset[tuple[str, str]]:
    """Reflexive-transitive closure by plain reachability."""
    succ: dict[str, set[str]] = {x: {x} for x in elements}
    for lo, hi in covers:
        succ[lo].add(hi)
    changed = True
    while changed:
        changed = False
        for x in elements:
            extra = set()
            for y in succ[x]:
                extra |= succ[y]
            if not extra <= succ[x]:
                succ[x] |= extra
                changed = True
    return frozenset((x, y) for x in elements for y in succ[x])


def _bound(elements, order, a: str, b: str, *, upper: bool) -> str | None:
    """Least upper bound (or greatest lower bound) of a pair, if unique."""
    if upper:
        bounds = [x for x in elements if (a, x) in order and (b, x) in order]
        extreme = [x for x in bounds if all((x, y) in order for y in bounds)]
    else:
        bounds = [x for x in elements if (x, a) in order and (x, b) in order]
        extreme = [x for x in bounds if all((y, x) in order for y in bounds)]
    if len(extreme) != 1:
        return None
    return extreme[0]


#: Two-point lattice used when a program does not declare its own.
def default_lattice() -> Lattice:
    return Lattice.from_relations(["L", "H"], [("L", "H")])


def parse_lattice(text: str) -> Lattice:
    """Parse a lattice description.

    The format is ``elem, elem, ...; lo < hi, lo < hi, ...`` where the
    relation list may be empty (one-element or discrete declarations) and
    ``//`` starts a comment running to end of line.  Whitespace and
    newlines are insignificant.
    """
    stripped_lines = []
    for line in text.splitlines():
        if "//" in line:
            line = line[: line.index("//")]
        stripped_lines.append(line)
    body = " ".join(stripped_lines).strip()
    if not body:
        raise NotALatticeError("empty lattice description")
    if ";" in body:
        elem_part, _, rel_part = body.partition(";")
    else:
        elem_part, rel_part = body, ""
    elements = [e.strip() for e in elem_part.split(",") if e.strip()]
    covers: list[tuple[str, str]] = []
    rel_part = rel_part.strip()
    if rel_part:
        for chunk in rel_part.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "<" not in chunk:
                raise NotALatticeError(f"malformed relation {chunk!r} (expected 'lo < hi')")
            lo, _, hi = chunk.partition("<")
            covers.append((lo.strip(), hi.strip()))
    for name in elements + [x for pair in covers for x in pair]:
        if not name.replace("_", "").isalnum():
            raise NotALatticeError(f"malformed level name {name!r}")
    return Lattice.from_relations(elements, covers)
