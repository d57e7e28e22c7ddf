from __future__ import annotations

import random

import pytest

from prednamer.corpus import load_entry
from prednamer.logic import LogicProgram, PredicateSymbol, parse_program
from prednamer.placeholders import (
    ArityConflictError,
    DEFAULT_PATTERNS,
    PlaceholderPattern,
    dependency_order,
    detect,
)


def kahn_order(names: list[str], edges: set[tuple[str, str]]) -> list[str]:
    """Independent oracle: Kahn's algorithm over (dependent, dependency)
    edges with ties broken by position in ``names``.  Self-loops dropped."""
    edges = {(a, b) for a, b in edges if a != b}
    order = []
    remaining = list(names)
    while remaining:
        ready = [
            n for n in remaining
            if not any(a == n and b in remaining for a, b in edges)
        ]
        assert ready, "cycle not broken by oracle"
        order.append(ready[0])
        remaining.remove(ready[0])
    return order


class TestDetect:
    def test_family_profile(self):
        program = parse_program(load_entry("family").program_text())
        inventory = detect(program)
        profile = {str(e.symbol): e.occurrence for e in inventory.entries}
        assert profile == {
            "h0/2": "both",
            "h1/2": "head_only",
            "h2/3": "head_only",
            "h3/2": "both",
            "h4/2": "head_only",
        }
        assert inventory.get("h2").use_sites == ()
        assert inventory.get("h1").use_sites == ()

    def test_lcm_body_only(self):
        program = parse_program(load_entry("lcm").program_text())
        inventory = detect(program)
        assert {str(e.symbol): e.occurrence for e in inventory.entries} == {
            "G/3": "body_only",
            "H/3": "body_only",
        }

    def test_coauthors_head_only(self):
        program = parse_program(load_entry("coauthors").program_text())
        inventory = detect(program)
        assert {str(e.symbol): e.occurrence for e in inventory.entries} == {
            "P/2": "head_only"
        }

    def test_no_placeholders(self):
        inventory = detect(parse_program("edge(a, b).\npath(X, Y) :- edge(X, Y)."))
        assert inventory.entries == []
        assert not inventory

    def test_placeholders_inside_if_then_else(self):
        program = parse_program("D(X,Y) :- ( A(X), R(X,0) -> Y is -X ; B(Y) ).")
        names = detect(program).names()
        assert names == ["D", "A", "R", "B"]

    def test_default_pattern_styles(self):
        program = parse_program(
            "h0(a). inv1(a). HP19(a). r_1_1(a,b,c). A(a). helper(a). Ab(a)."
        )
        assert detect(program).names() == ["h0", "inv1", "HP19", "r_1_1", "A"]

    def test_custom_patterns(self):
        program = parse_program("foo_new(a). bar(b).")
        inventory = detect(program, ["^foo_.*$"])
        assert inventory.names() == ["foo_new"]
        inventory = detect(program, [PlaceholderPattern("^bar$", "custom")])
        assert inventory.names() == ["bar"]

    def test_arity_conflict(self):
        program = parse_program("h0(a, b).\nh0(a, b, c).")
        with pytest.raises(ArityConflictError) as info:
            detect(program)
        assert info.value.name == "h0"
        assert info.value.arities == (2, 3)

    def test_first_occurrence_order(self):
        program = parse_program("top(X) :- h2(X), h0(X).\nh0(a).\nh1(b).")
        assert detect(program).names() == ["h2", "h0", "h1"]

    def test_idempotent_and_permutation_invariant(self):
        program = parse_program(load_entry("family").program_text())
        baseline = {
            (str(e.symbol), e.occurrence) for e in detect(program).entries
        }
        assert {
            (str(e.symbol), e.occurrence) for e in detect(program).entries
        } == baseline
        rng = random.Random(7)
        for _ in range(10):
            rules = list(program.rules)
            rng.shuffle(rules)
            shuffled = LogicProgram(tuple(rules))
            assert {
                (str(e.symbol), e.occurrence) for e in detect(shuffled).entries
            } == baseline

    def test_every_match_in_inventory_and_vice_versa(self):
        program = parse_program(load_entry("math").program_text())
        inventory = detect(program)
        in_program = set()
        for rule in program.rules:
            in_program.add(rule.head.functor)
            from prednamer.logic import iter_body_literals

            for literal in iter_body_literals(rule.body):
                in_program.add(literal.functor)
        import re

        matching = {
            name for name in in_program
            if any(re.fullmatch(p, name) for p in DEFAULT_PATTERNS)
        }
        assert set(inventory.names()) == matching


class TestDependencyOrder:
    # hand-transcribed dependency edges (dependent, dependency)
    MATH_EDGES = {
        ("P", "A"), ("Q", "A"), ("R", "A"), ("S", "A"), ("T", "A"),
        ("B", "A"), ("C", "A"), ("C", "B"),
        ("D", "A"), ("D", "R"),
        ("E", "A"), ("F", "A"), ("G", "A"), ("H", "A"), ("L", "A"),
        ("M", "A"), ("M", "P"), ("M", "R"), ("M", "M"),
        ("N", "A"), ("N", "D"), ("N", "M"), ("N", "H"), ("N", "G"),
    }
    FAMILY_EDGES = {("h1", "h0"), ("h4", "h0"), ("h4", "h3")}

    def test_math_matches_brute_force_oracle(self):
        program = parse_program(load_entry("math").program_text())
        inventory = detect(program)
        ordered = [s.name for s in dependency_order(inventory, program)]
        assert ordered == kahn_order(inventory.names(), self.MATH_EDGES)
        # spec'd precedences
        position = {name: i for i, name in enumerate(ordered)}
        for later in "PQRSTBC":
            assert position["A"] < position[later]
        for earlier in "DMHG":
            assert position[earlier] < position["N"]

    def test_family_matches_brute_force_oracle(self):
        program = parse_program(load_entry("family").program_text())
        inventory = detect(program)
        ordered = [s.name for s in dependency_order(inventory, program)]
        assert ordered == kahn_order(inventory.names(), self.FAMILY_EDGES)
        position = {name: i for i, name in enumerate(ordered)}
        assert position["h0"] < position["h1"]
        assert position["h0"] < position["h4"]
        assert position["h3"] < position["h4"]

    def test_single_placeholder(self):
        program = parse_program(load_entry("coauthors").program_text())
        inventory = detect(program)
        assert dependency_order(inventory, program) == [PredicateSymbol("P", 2)]

    def test_output_is_permutation_of_inventory(self):
        program = parse_program(load_entry("math").program_text())
        inventory = detect(program)
        assert sorted(dependency_order(inventory, program)) == sorted(
            inventory.symbols()
        )

    def test_two_cycle_broken_at_latest_back_edge(self):
        program = parse_program("h0(X) :- h1(X).\nh1(X) :- h0(X).")
        inventory = detect(program)
        # the later-seen edge (h1 -> h0) is dropped, so h1 precedes h0
        assert [s.name for s in dependency_order(inventory, program)] == ["h1", "h0"]
