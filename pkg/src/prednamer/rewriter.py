"""Apply winning names to a program without touching anything else.

Renames are arity-qualified: a plan entry for ``h0/2`` rewrites every
head, goal, and argument-term occurrence of ``h0`` at arity 2 and nothing
else.  Collisions are checked first; ``force=True`` overrides them for
expert use but the caller is expected to surface that in its report.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .candidates import validate_name
from .errors import PrednamerError
from .logic import (
    ArithmeticEval,
    Comparison,
    Compound,
    Cut,
    IfThenElse,
    ListTerm,
    Literal,
    LogicProgram,
    Negation,
    PredicateSymbol,
    Rule,
    render_program,
)

COLLISION_EXISTING = "existing_predicate"
COLLISION_DUPLICATE = "duplicate_assignment"
WARNING_ARITY = "same_name_other_arity"


class InvalidNameError(PrednamerError):
    def __init__(self, symbol: PredicateSymbol, name: str, reason: str):
        self.symbol = symbol
        self.name = name
        super().__init__(f"cannot rename {symbol} to {name!r}: {reason}")


class CollisionError(PrednamerError):
    def __init__(self, collisions: list["Collision"]):
        self.collisions = collisions
        details = "; ".join(str(c) for c in collisions)
        super().__init__(f"renaming plan has collisions: {details}")


@dataclass(frozen=True)
class Collision:
    kind: str
    name: str
    arity: int
    placeholders: tuple[str, ...]
    severity: str  # "error" | "warning"

    def __str__(self) -> str:
        who = ", ".join(self.placeholders)
        return f"{self.kind}: {who} -> {self.name}/{self.arity} [{self.severity}]"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "arity": self.arity,
            "placeholders": list(self.placeholders),
            "severity": self.severity,
        }


@dataclass
class Assignment:
    name: str
    mean: Optional[Fraction] = None
    tie: bool = False
    sources: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean": None if self.mean is None else str(self.mean),
            "tie": self.tie,
            "sources": list(self.sources),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Assignment":
        mean = data.get("mean")
        return cls(
            name=data["name"],
            mean=None if mean is None else Fraction(mean),
            tie=data.get("tie", False),
            sources=tuple(data.get("sources", ())),
        )


@dataclass
class RenamingPlan:
    assignments: dict = field(default_factory=dict)  # PredicateSymbol -> Assignment

    def name_for(self, symbol: PredicateSymbol) -> Optional[str]:
        assignment = self.assignments.get(symbol)
        return assignment.name if assignment else None

    def __bool__(self) -> bool:
        return bool(self.assignments)

    def to_dict(self) -> dict:
        return {
            str(symbol): assignment.to_dict()
            for symbol, assignment in self.assignments.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RenamingPlan":
        return cls(
            {
                PredicateSymbol.parse(key): Assignment.from_dict(value)
                for key, value in data.items()
            }
        )


def check_collisions(program: LogicProgram, plan: RenamingPlan) -> list[Collision]:
    """Report name clashes a plan would create.

    Errors: a target name already carried by a predicate the plan does not
    rename, at the same arity; or two placeholders assigned the same
    (name, arity).  The same name at a different arity is only a warning.
    """
    existing: dict[str, set[int]] = {}
    for rule in program.rules:
        for symbol in _rule_symbols(rule):
            existing.setdefault(symbol.name, set()).add(symbol.arity)
    planned = set(plan.assignments)

    findings: list[Collision] = []
    targets: dict[tuple[str, int], list[str]] = {}
    for symbol, assignment in plan.assignments.items():
        targets.setdefault((assignment.name, symbol.arity), []).append(symbol.name)

    for (name, arity), holders in targets.items():
        if len(holders) > 1:
            findings.append(
                Collision(COLLISION_DUPLICATE, name, arity, tuple(holders), "error")
            )
        arities = existing.get(name, set())
        clash = arity in arities and PredicateSymbol(name, arity) not in planned
        if clash:
            findings.append(
                Collision(COLLISION_EXISTING, name, arity, tuple(holders), "error")
            )
        other = sorted(a for a in arities - {arity})
        for other_arity in other:
            findings.append(
                Collision(WARNING_ARITY, name, other_arity, tuple(holders), "warning")
            )
    return findings


def _rule_symbols(rule: Rule) -> list[PredicateSymbol]:
    symbols: list[PredicateSymbol] = []
    stack: list = [rule.head, *rule.body]
    while stack:
        element = stack.pop()
        if isinstance(element, Literal):
            symbols.append(element.symbol)
            stack.extend(element.args)
        elif isinstance(element, Negation):
            stack.append(element.element)
        elif isinstance(element, IfThenElse):
            stack.extend(element.cond + element.then + element.els)
        elif isinstance(element, Comparison):
            stack.extend((element.lhs, element.rhs))
        elif isinstance(element, ArithmeticEval):
            stack.extend((element.target, element.expression))
        elif isinstance(element, Compound):
            if not element.infix:
                symbols.append(element.symbol)
            stack.extend(element.args)
        elif isinstance(element, ListTerm):
            stack.extend(element.items)
            if element.tail is not None:
                stack.append(element.tail)
    return symbols


def apply(
    program: LogicProgram, plan: RenamingPlan, force: bool = False
) -> LogicProgram:
    """Rewrite every planned placeholder occurrence, head and body alike.

    Raises InvalidNameError for names that are not legal predicate
    identifiers and CollisionError unless ``force`` is given.  Comments
    that mention a renamed placeholder are dropped; others are kept.
    """
    for symbol, assignment in plan.assignments.items():
        ok, reason = validate_name(assignment.name)
        if not ok:
            raise InvalidNameError(symbol, assignment.name, reason)
    errors = [c for c in check_collisions(program, plan) if c.severity == "error"]
    if errors and not force:
        raise CollisionError(errors)

    mapping = {
        symbol: assignment.name for symbol, assignment in plan.assignments.items()
    }

    def rename_term(term):
        if isinstance(term, Compound):
            args = tuple(rename_term(a) for a in term.args)
            name = mapping.get(term.symbol, term.functor)
            return Compound(name, args, term.infix)
        if isinstance(term, ListTerm):
            items = tuple(rename_term(i) for i in term.items)
            tail = None if term.tail is None else rename_term(term.tail)
            return ListTerm(items, tail)
        return term

    def rename_literal(literal: Literal) -> Literal:
        args = tuple(rename_term(a) for a in literal.args)
        return Literal(mapping.get(literal.symbol, literal.functor), args)

    def rename_element(element):
        if isinstance(element, Literal):
            return rename_literal(element)
        if isinstance(element, Negation):
            return Negation(rename_element(element.element), element.spelling)
        if isinstance(element, IfThenElse):
            return IfThenElse(
                tuple(rename_element(e) for e in element.cond),
                tuple(rename_element(e) for e in element.then),
                tuple(rename_element(e) for e in element.els),
            )
        if isinstance(element, Comparison):
            return Comparison(
                element.op, rename_term(element.lhs), rename_term(element.rhs)
            )
        if isinstance(element, ArithmeticEval):
            return ArithmeticEval(
                rename_term(element.target), rename_term(element.expression)
            )
        if isinstance(element, Cut):
            return element
        raise TypeError(f"not a body element: {element!r}")

    rules = tuple(
        Rule(
            rename_literal(rule.head),
            tuple(rename_element(e) for e in rule.body),
            start_line=rule.start_line,
            end_line=rule.end_line,
        )
        for rule in program.rules
    )
    renamed_names = {symbol.name for symbol in mapping}
    comments = tuple(
        (line, text)
        for line, text in program.source_comments
        if not _mentions_any(text, renamed_names)
    )
    return LogicProgram(rules, comments)


def _mentions_any(text: str, names: set[str]) -> bool:
    return any(
        re.search(rf"(?<![A-Za-z0-9_]){re.escape(name)}(?![A-Za-z0-9_])", text)
        for name in names
    )


def renamed_program_sha256(program: LogicProgram) -> str:
    return hashlib.sha256(
        render_program(program, "canonical").encode("utf-8")
    ).hexdigest()
