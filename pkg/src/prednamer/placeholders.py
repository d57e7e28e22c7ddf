"""Find unnamed (invented) predicates in a parsed program.

Placeholders are recognized purely by name patterns; there is no guessing
about which predicates "look invented".  The default patterns cover the
styles that rule-induction systems actually emit: ``h0``, ``inv1``,
``HP19``, ``r_1_1``, and bare single capitals like ``A`` or ``P``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import PrednamerError
from .logic import LogicProgram, PredicateSymbol, iter_body_literals

DEFAULT_PATTERNS = (
    "^h[0-9]+$",
    "^inv[0-9]+$",
    "^HP[0-9]+$",
    "^r(_[0-9]+)+$",
    "^[A-Z]$",
)

HEAD_ONLY = "head_only"
BODY_ONLY = "body_only"
BOTH = "both"


class ArityConflictError(PrednamerError):
    """One placeholder name is used at two different arities."""

    def __init__(self, name: str, arities: Sequence[int]):
        self.name = name
        self.arities = tuple(sorted(arities))
        uses = ", ".join(str(a) for a in self.arities)
        super().__init__(f"placeholder {name!r} used at conflicting arities: {uses}")


@dataclass(frozen=True)
class PlaceholderPattern:
    pattern: str
    description: str = ""

    def matches(self, name: str) -> bool:
        return re.fullmatch(self.pattern, name) is not None


@dataclass
class PlaceholderEntry:
    symbol: PredicateSymbol
    occurrence: str  # head_only | body_only | both
    def_sites: tuple[int, ...]
    use_sites: tuple[int, ...]


@dataclass
class PlaceholderInventory:
    entries: list[PlaceholderEntry]

    def __bool__(self) -> bool:
        return bool(self.entries)

    def names(self) -> list[str]:
        return [entry.symbol.name for entry in self.entries]

    def symbols(self) -> list[PredicateSymbol]:
        return [entry.symbol for entry in self.entries]

    def get(self, name: str) -> Optional[PlaceholderEntry]:
        for entry in self.entries:
            if entry.symbol.name == name:
                return entry
        return None


def _compile(patterns: Optional[Sequence]) -> list[PlaceholderPattern]:
    if not patterns:
        patterns = DEFAULT_PATTERNS
    out = []
    for pattern in patterns:
        if isinstance(pattern, PlaceholderPattern):
            out.append(pattern)
        else:
            out.append(PlaceholderPattern(pattern))
    return out


def detect(
    program: LogicProgram, patterns: Optional[Sequence] = None
) -> PlaceholderInventory:
    """Inventory every pattern-matching predicate with its occurrence profile.

    Entries come out in first-occurrence order.  The same name at two
    arities raises ArityConflictError rather than producing two entries,
    because downstream prompts address placeholders by bare name.
    """
    compiled = _compile(patterns)

    def is_placeholder(name: str) -> bool:
        return any(p.matches(name) for p in compiled)

    order: list[str] = []
    defs: dict[str, list[int]] = {}
    uses: dict[str, list[int]] = {}
    arities: dict[str, set[int]] = {}

    def record(symbol: PredicateSymbol, rule_index: int, sites: dict) -> None:
        if not is_placeholder(symbol.name):
            return
        if symbol.name not in arities:
            order.append(symbol.name)
            arities[symbol.name] = set()
        arities[symbol.name].add(symbol.arity)
        sites.setdefault(symbol.name, [])
        if rule_index not in sites[symbol.name]:
            sites[symbol.name].append(rule_index)

    for index, rule in enumerate(program.rules):
        record(rule.head.symbol, index, defs)
        for literal in iter_body_literals(rule.body):
            record(literal.symbol, index, uses)

    entries = []
    for name in order:
        if len(arities[name]) > 1:
            raise ArityConflictError(name, arities[name])
        def_sites = tuple(defs.get(name, ()))
        use_sites = tuple(uses.get(name, ()))
        if not use_sites:
            occurrence = HEAD_ONLY
        elif not def_sites:
            occurrence = BODY_ONLY
        else:
            occurrence = BOTH
        symbol = PredicateSymbol(name, next(iter(arities[name])))
        entries.append(PlaceholderEntry(symbol, occurrence, def_sites, use_sites))
    return PlaceholderInventory(entries)


def dependency_order(
    inventory: PlaceholderInventory, program: LogicProgram
) -> list[PredicateSymbol]:
    """Order placeholders so that dependencies come first.

    P depends on Q when Q occurs in the body of a rule whose head is P.
    The order is a depth-first post-order over that graph, visiting roots
    and edges in first-occurrence order; an edge back into the current
    DFS path (which is always the latest-seen edge of its cycle) is
    skipped, so cycles never block the ordering.
    """
    names = inventory.names()
    name_set = set(names)
    deps: dict[str, list[str]] = {name: [] for name in names}
    for rule in program.rules:
        head = rule.head.symbol.name
        if head not in name_set:
            continue
        for literal in iter_body_literals(rule.body):
            used = literal.symbol.name
            if used in name_set and used != head and used not in deps[head]:
                deps[head].append(used)

    ordered: list[str] = []
    done: set[str] = set()
    in_progress: set[str] = set()

    def visit(name: str) -> None:
        if name in done or name in in_progress:
            return
        in_progress.add(name)
        for dep in deps[name]:
            visit(dep)
        in_progress.discard(name)
        done.add(name)
        ordered.append(name)

    for name in names:
        visit(name)
    by_name = {entry.symbol.name: entry.symbol for entry in inventory.entries}
    return [by_name[name] for name in ordered]
