"""Turn raw model responses into clean, deduplicated name candidates.

Extraction is deliberately forgiving: a response that cannot be used yields
``extraction="none"`` suggestions instead of raising, because one unusable
round must never sink a run.  Normalization applies the camelCase
convention (split on underscores and hyphens, lowercase the first letter,
capitalize the first letter of every later piece, keep interior
capitalization).  Names that survive extraction but are not legal
predicate identifiers, such as ``can reach``, stay in the pool with
``valid=False`` so judges can still score them; the rewriter refuses them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import PrednamerError

STRUCTURED = "structured"
PROSE_FALLBACK = "prose_fallback"
NONE = "none"

_IDENTIFIER_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_CAMEL_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_ARITY_SUFFIX_RE = re.compile(r"/\d+$")
_WRAPPERS = "\"'`*()[]{}"


class UnnormalizableNameError(PrednamerError):
    """A suggestion that cannot be reduced to one identifier token."""

    def __init__(self, raw: str, attempted: str, reason: str):
        self.raw = raw
        self.attempted = attempted
        self.reason = reason
        super().__init__(f"cannot normalize {raw!r}: {reason}")


@dataclass
class RawSuggestion:
    placeholder: str
    text: str
    source: tuple[str, int]  # (model_id, round_index)
    extraction: str  # structured | prose_fallback | none


@dataclass
class CandidateName:
    normalized: str
    originals: set[str]
    sources: set[tuple[str, int]]
    valid: bool = True
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "normalized": self.normalized,
            "originals": sorted(self.originals),
            "sources": [[m, r] for m, r in sorted(self.sources)],
            "valid": self.valid,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateName":
        return cls(
            normalized=data["normalized"],
            originals=set(data["originals"]),
            sources={(m, r) for m, r in data["sources"]},
            valid=data["valid"],
            reason=data.get("reason"),
        )


@dataclass
class CandidateSet:
    per_placeholder: dict[str, list[CandidateName]] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return any(self.per_placeholder.values())

    def placeholders(self) -> list[str]:
        return list(self.per_placeholder)

    def names_for(self, placeholder: str) -> list[str]:
        return [c.normalized for c in self.per_placeholder.get(placeholder, [])]

    def find(self, placeholder: str, normalized: str) -> Optional[CandidateName]:
        for candidate in self.per_placeholder.get(placeholder, []):
            if candidate.normalized == normalized:
                return candidate
        return None

    def restrict_nonempty(self) -> "CandidateSet":
        return CandidateSet(
            {ph: cands for ph, cands in self.per_placeholder.items() if cands}
        )

    def to_dict(self) -> dict:
        return {
            ph: [c.to_dict() for c in cands]
            for ph, cands in self.per_placeholder.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateSet":
        return cls(
            {
                ph: [CandidateName.from_dict(c) for c in cands]
                for ph, cands in data.items()
            }
        )


def normalize_name(raw: str) -> str:
    """Apply the camelCase convention; raises UnnormalizableNameError when
    the result is not one identifier token (whitespace, symbols, digit
    start)."""
    trimmed = raw.strip()
    if not trimmed:
        raise UnnormalizableNameError(raw, "", "empty")
    pieces = [p for p in re.split(r"[_\-]+", trimmed) if p]
    if not pieces:
        raise UnnormalizableNameError(raw, trimmed, "no identifier characters")
    joined = pieces[0][0].lower() + pieces[0][1:]
    for piece in pieces[1:]:
        joined += piece[0].upper() + piece[1:]
    if not _CAMEL_RE.fullmatch(joined):
        if any(ch.isspace() for ch in joined):
            reason = "whitespace"
        elif not joined[0].isalpha():
            reason = "must start with a letter"
        else:
            reason = "illegal characters"
        raise UnnormalizableNameError(raw, joined, reason)
    return joined


def validate_name(name: str) -> tuple[bool, Optional[str]]:
    """Syntactic validity as a predicate name.  Semantic quality is the
    judges' business; this only guards the rewrite."""
    if not name:
        return False, "empty"
    if any(ch.isspace() for ch in name):
        return False, "whitespace"
    if not name[0].isalpha():
        return False, "must start with a letter"
    if not _IDENTIFIER_RE.fullmatch(name):
        return False, "illegal characters"
    return True, None


def clean_token(text: str) -> str:
    """Strip quoting, list markers, trailing punctuation, and arity suffixes
    like ``even/1`` from an extracted answer."""
    token = text.strip()
    token = token.strip(_WRAPPERS).strip()
    token = token.rstrip(".,;:!").strip()
    token = _ARITY_SUFFIX_RE.sub("", token)
    return token.strip().strip(_WRAPPERS).strip()


def _looks_like_rule(text: str) -> bool:
    return ":-" in text or "(" in text or ")" in text


def extract_suggestions(
    response_text: str,
    placeholders: Sequence[str],
    source: tuple[str, int],
) -> list[RawSuggestion]:
    """Pull one suggestion per placeholder out of a model response.

    The structured path matches ``<placeholder>: <name>`` lines (the
    requested output format).  For placeholders that never got such a line,
    a prose fallback looks for the placeholder followed, within the same
    sentence, by a quoted or backticked token.  Anything else, including
    rule echoes, comes back as ``extraction="none"``.
    """
    lines = response_text.splitlines()
    found: dict[str, RawSuggestion] = {}
    for placeholder in placeholders:
        pattern = re.compile(
            r"^\s*(?:[-*]\s*)?" + re.escape(placeholder) + r"\s*:\s*(.+?)\s*$"
        )
        for line in lines:
            match = pattern.match(line)
            if not match:
                continue
            token = clean_token(match.group(1))
            if not token or _looks_like_rule(token):
                continue
            found[placeholder] = RawSuggestion(placeholder, token, source, STRUCTURED)
            break

    for placeholder in placeholders:
        if placeholder in found:
            continue
        prose = re.compile(
            r"(?<![A-Za-z0-9_])"
            + re.escape(placeholder)
            + r"(?![A-Za-z0-9_])[^.!?\n]*?[\"'`]([^\"'`\n]+)[\"'`]"
        )
        match = prose.search(response_text)
        if match:
            token = clean_token(match.group(1))
            if token and not _looks_like_rule(token):
                found[placeholder] = RawSuggestion(
                    placeholder, token, source, PROSE_FALLBACK
                )

    return [
        found.get(ph, RawSuggestion(ph, "", source, NONE)) for ph in placeholders
    ]


def make_candidate(text: str, sources: Iterable[tuple[str, int]]) -> CandidateName:
    """Build a single CandidateName from one verbatim suggestion."""
    try:
        normalized = normalize_name(text)
        valid, reason = validate_name(normalized)
    except UnnormalizableNameError as exc:
        normalized = exc.attempted or text.strip()
        valid, reason = False, exc.reason
    return CandidateName(
        normalized=normalized,
        originals={text},
        sources=set(sources),
        valid=valid,
        reason=reason,
    )


def merge(suggestions: Iterable[RawSuggestion]) -> CandidateSet:
    """Normalize and deduplicate suggestions into per-placeholder candidates.

    Order within a placeholder is first appearance of each normalized form;
    duplicates union their verbatim spellings and sources.  Singular/plural
    and verb/particle variants stay distinct on purpose.
    """
    result: dict[str, list[CandidateName]] = {}
    for suggestion in suggestions:
        if suggestion.extraction == NONE or not suggestion.text:
            result.setdefault(suggestion.placeholder, [])
            continue
        candidate = make_candidate(suggestion.text, [suggestion.source])
        bucket = result.setdefault(suggestion.placeholder, [])
        for existing in bucket:
            if existing.normalized == candidate.normalized:
                existing.originals |= candidate.originals
                existing.sources |= candidate.sources
                break
        else:
            bucket.append(candidate)
    return CandidateSet(result)
