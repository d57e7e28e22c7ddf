from __future__ import annotations

import re

import pytest

from prednamer.corpus import load_entry
from prednamer.logic import PredicateSymbol, parse_program, render_program
from prednamer.placeholders import detect
from prednamer.rewriter import (
    Assignment,
    CollisionError,
    InvalidNameError,
    RenamingPlan,
    apply,
    check_collisions,
    renamed_program_sha256,
)

FAMILY_WINNERS = {
    ("h0", 2): "parent",
    ("h1", 2): "grandparent",
    ("h2", 3): "commonAncestor",
    ("h3", 2): "sibling",
    ("h4", 2): "cousin",
}


def family_plan():
    return RenamingPlan({
        PredicateSymbol(name, arity): Assignment(target)
        for (name, arity), target in FAMILY_WINNERS.items()
    })


def family_program():
    return parse_program(load_entry("family").program_text())


class TestCheckCollisions:
    def test_winner_plan_is_clean(self):
        assert check_collisions(family_program(), family_plan()) == []

    def test_existing_predicate_collision(self):
        plan = RenamingPlan({PredicateSymbol("h0", 2): Assignment("ancestor")})
        findings = check_collisions(family_program(), plan)
        assert len(findings) == 1
        assert findings[0].kind == "existing_predicate"
        assert findings[0].severity == "error"
        assert findings[0].name == "ancestor" and findings[0].arity == 2

    def test_duplicate_assignment_collision(self):
        plan = RenamingPlan({
            PredicateSymbol("h0", 2): Assignment("relation"),
            PredicateSymbol("h1", 2): Assignment("relation"),
        })
        findings = check_collisions(family_program(), plan)
        assert any(f.kind == "duplicate_assignment" for f in findings)

    def test_same_name_other_arity_is_warning(self):
        program = parse_program("h0(a).\nexisting(x, y).")
        plan = RenamingPlan({PredicateSymbol("h0", 1): Assignment("existing")})
        findings = check_collisions(program, plan)
        assert [f.severity for f in findings] == ["warning"]
        assert findings[0].kind == "same_name_other_arity"

    def test_swapping_between_planned_placeholders_is_clean(self):
        # the target name is currently held by another placeholder that the
        # plan renames away, so no collision remains after application
        program = parse_program("h0(a).\nh1(b).")
        plan = RenamingPlan({
            PredicateSymbol("h0", 1): Assignment("h1"),
            PredicateSymbol("h1", 1): Assignment("first"),
        })
        assert check_collisions(program, plan) == []

    def test_empty_plan(self):
        assert check_collisions(family_program(), RenamingPlan()) == []


class TestApply:
    def test_family_winners(self):
        renamed = apply(family_program(), family_plan())
        text = render_program(renamed)
        assert "parent(X, Y) :- mother(X, Y)." in text
        assert "grandparent(X, Y) :- parent(X, Z), parent(Z, Y)." in text
        assert (
            "cousin(X, Y) :- parent(PX, X), parent(PY, Y), sibling(PX, PY),"
            " dif(PX, PY)." in text
        )
        for (name, _), _target in FAMILY_WINNERS.items():
            assert not re.search(rf"\b{name}\(", text)

    def test_reachability_both_positions(self):
        program = parse_program(load_entry("reachability").program_text())
        plan = RenamingPlan(
            {PredicateSymbol("inv1", 2): Assignment("directConnection")}
        )
        text = render_program(apply(program, plan))
        assert text.count("directConnection") == 4
        assert "inv1" not in text

    def test_identity_plan_preserves_canonical_bytes(self):
        program = family_program()
        plan = RenamingPlan({
            PredicateSymbol(name, arity): Assignment(name)
            for (name, arity) in FAMILY_WINNERS
        })
        assert render_program(apply(program, plan)) == render_program(program)

    def test_only_functor_tokens_change(self):
        program = family_program()
        before = render_program(program).splitlines()
        after = render_program(apply(program, family_plan())).splitlines()
        assert len(before) == len(after)
        mapping = {name: target for (name, _), target in FAMILY_WINNERS.items()}
        token_re = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|[^A-Za-z_\s]+")
        for old_line, new_line in zip(before, after):
            old_tokens = token_re.findall(old_line)
            new_tokens = token_re.findall(new_line)
            assert len(old_tokens) == len(new_tokens)
            for old_token, new_token in zip(old_tokens, new_tokens):
                if old_token == new_token:
                    continue
                assert mapping[old_token] == new_token

    def test_detect_after_apply_finds_nothing(self):
        renamed = apply(family_program(), family_plan())
        assert detect(renamed).entries == []

    def test_arity_qualified(self):
        program = parse_program("h0(a, b).\nuses(X) :- h0(X, X, X).")
        # distinct arities are two placeholders; renaming only h0/2
        with pytest.raises(Exception):
            detect(program)  # detection refuses the conflict
        plan = RenamingPlan({PredicateSymbol("h0", 2): Assignment("pair")})
        text = render_program(apply(program, plan))
        assert "pair(a, b)." in text
        assert "h0(X, X, X)" in text

    def test_collision_blocks_without_force(self):
        plan = RenamingPlan({PredicateSymbol("h0", 2): Assignment("ancestor")})
        with pytest.raises(CollisionError):
            apply(family_program(), plan)
        forced = apply(family_program(), plan, force=True)
        assert "ancestor(X, Y) :- mother(X, Y)." in render_program(forced)

    def test_invalid_name_rejected(self):
        plan = RenamingPlan({PredicateSymbol("h0", 2): Assignment("can reach")})
        with pytest.raises(InvalidNameError):
            apply(family_program(), plan)

    def test_snake_case_names_allowed(self):
        program = parse_program("A(X) :- integer(X).")
        plan = RenamingPlan({PredicateSymbol("A", 1): Assignment("is_number")})
        assert "is_number(X)" in render_program(apply(program, plan))

    def test_goal_arguments_renamed_too(self):
        program = parse_program("count(D, N) :- setof(X, h0(D, X), L), length(L, N).")
        plan = RenamingPlan({PredicateSymbol("h0", 2): Assignment("nitro")})
        assert "setof(X, nitro(D, X), L)" in render_program(apply(program, plan))

    def test_annotation_comments_dropped_others_kept(self):
        program = family_program()
        renamed = apply(program, family_plan())
        comments = [text for _, text in renamed.source_comments]
        assert comments == []  # every comment names a placeholder
        program2 = parse_program("# general note\nh0(a). # h0 = parent\n")
        renamed2 = apply(
            program2, RenamingPlan({PredicateSymbol("h0", 1): Assignment("parent")})
        )
        assert [t for _, t in renamed2.source_comments] == ["# general note"]

    def test_distinct_plans_distinct_outputs(self):
        program = family_program()
        plan_a = family_plan()
        plan_b = family_plan()
        plan_b.assignments[PredicateSymbol("h4", 2)] = Assignment("cousins")
        assert render_program(apply(program, plan_a)) != render_program(
            apply(program, plan_b)
        )

    def test_sha_is_stable(self):
        renamed = apply(family_program(), family_plan())
        assert renamed_program_sha256(renamed) == renamed_program_sha256(renamed)


def test_plan_round_trip():
    plan = family_plan()
    rebuilt = RenamingPlan.from_dict(plan.to_dict())
    assert rebuilt.to_dict() == plan.to_dict()
    assert rebuilt.name_for(PredicateSymbol("h0", 2)) == "parent"
