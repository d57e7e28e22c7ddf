"""Render the four prompts derived from the pipeline's templates.

Templates are plain text files with ``{rules}``, ``{placeholders}``,
``{candidates}``, ``{target}``, and ``{skeleton}`` markers, so the wording
can be tuned without touching code.  Rendering is deterministic and always
feeds models the canonical program text, which strips the ``# name = ...``
annotation comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .candidates import CandidateSet
from .errors import PrednamerError
from .logic import (
    LogicProgram,
    PredicateSymbol,
    iter_body_literals,
    render_program,
)
from .placeholders import PlaceholderInventory

SUGGEST = "suggest"
CHOOSE = "choose"
JUDGE = "judge"
FEWSHOT_STEP = "fewshot_step"

_SLOT_RE = re.compile(r"\{(rules|placeholders|candidates|target|skeleton)\}")


class EmptyInventoryError(PrednamerError):
    def __init__(self) -> None:
        super().__init__("program has no placeholders to name")


class EmptyCandidatesError(PrednamerError):
    def __init__(self, placeholder: str):
        self.placeholder = placeholder
        super().__init__(f"no candidates available for placeholder {placeholder!r}")


class TargetAlreadyNamedError(PrednamerError):
    def __init__(self, target: PredicateSymbol):
        self.target = target
        super().__init__(f"target {target} no longer occurs in the program")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str

    @property
    def slots(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for match in _SLOT_RE.finditer(self.text):
            seen.setdefault(match.group(1))
        return tuple(seen)

    def fill(self, values: dict[str, str]) -> str:
        filled = self.text
        for slot in self.slots:
            if slot not in values:
                raise KeyError(f"template {self.name!r} needs slot {slot!r}")
            filled = filled.replace("{" + slot + "}", values[slot])
        return filled


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    purpose: str
    placeholders_addressed: tuple[str, ...]


def load_template(name: str, template_dir: Optional[Path] = None) -> PromptTemplate:
    if template_dir is not None:
        text = (Path(template_dir) / f"{name}.txt").read_text(encoding="utf-8")
    else:
        text = (
            resources.files(__package__).joinpath(f"templates/{name}.txt")
        ).read_text(encoding="utf-8")
    return PromptTemplate(name, text)


def placeholder_phrase(names: list[str]) -> str:
    """``predicates h0, h1, and h2`` / ``predicates G and H`` / ``predicate P``."""
    if len(names) == 1:
        return f"predicate {names[0]}"
    if len(names) == 2:
        return f"predicates {names[0]} and {names[1]}"
    listed = ", ".join(names[:-1])
    return f"predicates {listed}, and {names[-1]}"


def _rules_text(program: LogicProgram) -> str:
    return render_program(program, "canonical").rstrip("\n")


def _candidate_lines(candidates: CandidateSet) -> str:
    lines = []
    for placeholder in candidates.placeholders():
        names = candidates.names_for(placeholder)
        lines.append(f"{placeholder}: {', '.join(names)}")
    return "\n".join(lines)


def render_suggest(
    program: LogicProgram,
    inventory: PlaceholderInventory,
    template_dir: Optional[Path] = None,
) -> RenderedPrompt:
    """Prompt 1: one name suggestion per placeholder."""
    if not inventory:
        raise EmptyInventoryError()
    names = inventory.names()
    template = load_template(SUGGEST, template_dir)
    text = template.fill(
        {
            "rules": _rules_text(program),
            "placeholders": placeholder_phrase(names),
            "skeleton": "\n".join(f"{name}:" for name in names),
        }
    )
    return RenderedPrompt(text, SUGGEST, tuple(names))


def render_choose(
    program: LogicProgram,
    candidates: CandidateSet,
    template_dir: Optional[Path] = None,
) -> RenderedPrompt:
    """Prompt 2: a model picks one name among its own suggestions."""
    names = candidates.placeholders()
    if not names:
        raise EmptyInventoryError()
    for placeholder in names:
        if not candidates.names_for(placeholder):
            raise EmptyCandidatesError(placeholder)
    template = load_template(CHOOSE, template_dir)
    text = template.fill(
        {
            "rules": _rules_text(program),
            "placeholders": placeholder_phrase(names),
            "candidates": _candidate_lines(candidates),
            "skeleton": "\n".join(f"{name}: CHOSEN_NAME" for name in names),
        }
    )
    return RenderedPrompt(text, CHOOSE, tuple(names))


def render_judge(
    program: LogicProgram,
    candidates: CandidateSet,
    template_dir: Optional[Path] = None,
) -> RenderedPrompt:
    """Prompt 3: score every pooled candidate on the 0 / 0.5 / 1 rubric."""
    names = candidates.placeholders()
    if not names:
        raise EmptyInventoryError()
    for placeholder in names:
        if not candidates.names_for(placeholder):
            raise EmptyCandidatesError(placeholder)
    template = load_template(JUDGE, template_dir)
    text = template.fill(
        {
            "rules": _rules_text(program),
            "placeholders": placeholder_phrase(names),
            "candidates": _candidate_lines(candidates),
            "skeleton": "\n".join(f"{name}:" for name in names),
        }
    )
    return RenderedPrompt(text, JUDGE, tuple(names))


def dependency_slice(program: LogicProgram, target: PredicateSymbol) -> LogicProgram:
    """The minimal rule subset shown for one incremental step: the target's
    defining rules (or, for body-only targets, the rules using it) plus the
    defining rules of every predicate those rules mention."""
    base: list[int] = []
    uses: list[int] = []
    for index, rule in enumerate(program.rules):
        if rule.head.symbol == target:
            base.append(index)
        elif any(lit.symbol == target for lit in iter_body_literals(rule.body)):
            uses.append(index)
    if not base:
        base = uses
    if not base:
        raise TargetAlreadyNamedError(target)

    referenced: set[PredicateSymbol] = set()
    for index in base:
        rule = program.rules[index]
        referenced.add(rule.head.symbol)
        for literal in iter_body_literals(rule.body):
            referenced.add(literal.symbol)
    keep = set(base)
    for index, rule in enumerate(program.rules):
        if rule.head.symbol in referenced:
            keep.add(index)
    rules = tuple(program.rules[i] for i in sorted(keep))
    return LogicProgram(rules)


def render_fewshot_step(
    program_so_far: LogicProgram,
    target: PredicateSymbol,
    slice_mode: str = "deps",
    template_dir: Optional[Path] = None,
) -> RenderedPrompt:
    """The single-target step prompt for the incremental mode.

    ``program_so_far`` must already contain the substitutions from earlier
    steps; ``slice_mode="full"`` sends the whole program instead of the
    dependency slice.
    """
    if slice_mode == "full":
        shown = program_so_far
        if not any(
            rule.head.symbol == target
            or any(l.symbol == target for l in iter_body_literals(rule.body))
            for rule in program_so_far.rules
        ):
            raise TargetAlreadyNamedError(target)
    else:
        shown = dependency_slice(program_so_far, target)
    template = load_template(FEWSHOT_STEP, template_dir)
    text = template.fill(
        {"rules": _rules_text(shown), "target": target.name}
    )
    return RenderedPrompt(text, FEWSHOT_STEP, (target.name,))
