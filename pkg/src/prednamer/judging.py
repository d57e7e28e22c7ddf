"""Rubric scores: parsing judge responses, aggregation, and ranking.

Scores are exactly 0, 0.5, or 1 and are kept as Fractions end to end, so
aggregates are exact rationals; only display formatting rounds, to three
decimals.  Aggregation uses the arithmetic mean over the judges that
actually scored a candidate, which ranks identically to summing whenever
the judge panel is complete; both the mean and the raw sum are reported.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

from .candidates import CandidateSet, UnnormalizableNameError, normalize_name
from .errors import PrednamerError

RUBRIC = (Fraction(0), Fraction(1, 2), Fraction(1))

REJUDGE = "rejudge"
DEFER = "defer"
LEX = "lex"
TIE_POLICIES = (REJUDGE, DEFER, LEX)

_SCORE_LINE_RE = re.compile(
    r"^\s*(?:[-*]\s*)?(?P<name>[^:=]+?)\s*[:=]\s*(?P<score>\d+(?:[.,]\d+)?)\s*$"
)


class JudgeFormatError(PrednamerError):
    def __init__(self, judge_id: str):
        self.judge_id = judge_id
        super().__init__(f"judge {judge_id!r} produced no parseable scores")


class NoScoresError(PrednamerError):
    def __init__(self, placeholder: str = ""):
        self.placeholder = placeholder
        where = f" for placeholder {placeholder!r}" if placeholder else ""
        super().__init__(f"no scores available{where}")


class AllInvalidError(PrednamerError):
    def __init__(self, placeholder: str):
        self.placeholder = placeholder
        super().__init__(
            f"every candidate for {placeholder!r} is syntactically invalid"
        )


class UnknownCandidateError(PrednamerError):
    def __init__(self, row: int, placeholder: str, name: str):
        self.row = row
        super().__init__(
            f"row {row}: candidate {name!r} is not in the shown set"
            f" for placeholder {placeholder!r}"
        )


class OffRubricScoreError(PrednamerError):
    def __init__(self, row: int, value: str):
        self.row = row
        super().__init__(f"row {row}: score {value!r} is not 0, 0.5, or 1")


def format_score(value: Fraction) -> str:
    """Three-decimal display form, e.g. Fraction(5, 6) -> '0.833'."""
    dec = Decimal(value.numerator) / Decimal(value.denominator)
    return str(dec.quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def parse_rubric_score(text: str) -> Optional[Fraction]:
    """Parse a score token; returns None when it is off the rubric."""
    try:
        value = Fraction(text.replace(",", "."))
    except (ValueError, ZeroDivisionError):
        return None
    return value if value in RUBRIC else None


@dataclass
class ScoreMatrix:
    """judge x (placeholder, candidate) score grid.

    Rows are seeded from the candidate set so candidate order and validity
    travel with the matrix; judges appear in the order they first score.
    """

    judge_ids: list[str] = field(default_factory=list)
    scores: dict = field(default_factory=dict)  # (ph, cand) -> {judge: Fraction}
    row_meta: dict = field(default_factory=dict)  # (ph, cand) -> {"valid": bool}
    placeholder_order: list[str] = field(default_factory=list)
    anomalies: list[dict] = field(default_factory=list)

    @classmethod
    def from_candidates(
        cls, candidates: CandidateSet, judge_ids: Iterable[str] = ()
    ) -> "ScoreMatrix":
        matrix = cls(judge_ids=list(judge_ids))
        for placeholder in candidates.placeholders():
            matrix.placeholder_order.append(placeholder)
            for candidate in candidates.per_placeholder[placeholder]:
                key = (placeholder, candidate.normalized)
                matrix.scores[key] = {}
                matrix.row_meta[key] = {
                    "valid": candidate.valid,
                    "reason": candidate.reason,
                }
        return matrix

    def add(self, judge_id: str, placeholder: str, candidate: str, score: Fraction):
        if score not in RUBRIC:
            raise OffRubricScoreError(0, str(score))
        key = (placeholder, candidate)
        if key not in self.scores:
            if placeholder not in self.placeholder_order:
                self.placeholder_order.append(placeholder)
            self.scores[key] = {}
            self.row_meta.setdefault(key, {"valid": True, "reason": None})
        if judge_id not in self.judge_ids:
            self.judge_ids.append(judge_id)
        self.scores[key][judge_id] = score

    def merge(self, other: "ScoreMatrix") -> None:
        """Fold another matrix in; later scores win per (row, judge)."""
        for (placeholder, candidate), per_judge in other.scores.items():
            for judge_id, score in per_judge.items():
                self.add(judge_id, placeholder, candidate, score)
        self.anomalies.extend(other.anomalies)

    def candidates_for(self, placeholder: str) -> list[str]:
        return [cand for (ph, cand) in self.scores if ph == placeholder]

    def is_empty(self) -> bool:
        return not any(self.scores.values())

    def to_dict(self) -> dict:
        return {
            "judge_ids": list(self.judge_ids),
            "placeholder_order": list(self.placeholder_order),
            "rows": [
                {
                    "placeholder": ph,
                    "candidate": cand,
                    "valid": self.row_meta.get((ph, cand), {}).get("valid", True),
                    "reason": self.row_meta.get((ph, cand), {}).get("reason"),
                    "scores": {j: str(s) for j, s in per_judge.items()},
                }
                for (ph, cand), per_judge in self.scores.items()
            ],
            "anomalies": list(self.anomalies),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreMatrix":
        matrix = cls(
            judge_ids=list(data["judge_ids"]),
            placeholder_order=list(data["placeholder_order"]),
            anomalies=list(data["anomalies"]),
        )
        for row in data["rows"]:
            key = (row["placeholder"], row["candidate"])
            matrix.scores[key] = {
                j: Fraction(s) for j, s in row["scores"].items()
            }
            matrix.row_meta[key] = {"valid": row["valid"], "reason": row.get("reason")}
        return matrix


def parse_judge_scores(
    response_text: str, candidates: CandidateSet, judge_id: str
) -> ScoreMatrix:
    """Extract ``name: score`` pairs from one judge response.

    Lines naming a placeholder switch the current section; within a section,
    names are resolved against the shown candidates by normalized form.
    Unknown names and off-rubric values become recorded anomalies rather
    than scores; a response with zero usable pairs raises JudgeFormatError.
    """
    matrix = ScoreMatrix(judge_ids=[judge_id])
    placeholders = candidates.placeholders()
    current: Optional[str] = None
    extracted = 0

    def resolve(name: str, placeholder: str) -> Optional[str]:
        token = name.strip().strip("\"'`*")
        shown = candidates.names_for(placeholder)
        if token in shown:
            return token
        try:
            normalized = normalize_name(token)
        except UnnormalizableNameError as exc:
            normalized = exc.attempted
        return normalized if normalized in shown else None

    for line in response_text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        header = stripped.rstrip(":").strip()
        if header in placeholders and (stripped.endswith(":") or header == stripped):
            current = header
            continue
        match = _SCORE_LINE_RE.match(line)
        if not match:
            continue
        name_part = match.group("name").strip()
        section = current
        candidate = resolve(name_part, section) if section is not None else None
        # a placeholder name that is not a scored candidate of the current
        # section switches sections (e.g. "h3" is also a candidate under h4)
        if candidate is None and name_part in placeholders:
            current = name_part
            continue
        if section is None:
            continue
        score = parse_rubric_score(match.group("score"))
        if candidate is None:
            matrix.anomalies.append(
                {
                    "judge": judge_id,
                    "placeholder": section,
                    "kind": "unknown_candidate",
                    "detail": name_part,
                }
            )
            continue
        if score is None:
            matrix.anomalies.append(
                {
                    "judge": judge_id,
                    "placeholder": section,
                    "kind": "off_rubric",
                    "detail": f"{name_part}: {match.group('score')}",
                }
            )
            continue
        matrix.add(judge_id, section, candidate, score)
        extracted += 1

    if extracted == 0:
        raise JudgeFormatError(judge_id)
    return matrix


@dataclass
class RankedCandidate:
    candidate: str
    mean: Fraction
    total: Fraction
    n_scores: int
    valid: bool
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate,
            "mean": str(self.mean),
            "display": format_score(self.mean),
            "total": str(self.total),
            "n_scores": self.n_scores,
            "valid": self.valid,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RankedCandidate":
        return cls(
            candidate=data["candidate"],
            mean=Fraction(data["mean"]),
            total=Fraction(data["total"]),
            n_scores=data["n_scores"],
            valid=data["valid"],
            reason=data.get("reason"),
        )


@dataclass
class Ranking:
    per_placeholder: dict  # placeholder -> list[RankedCandidate], sorted
    tie_flags: dict  # placeholder -> bool

    def to_dict(self) -> dict:
        return {
            "per_placeholder": {
                ph: [rc.to_dict() for rc in ranked]
                for ph, ranked in self.per_placeholder.items()
            },
            "tie_flags": dict(self.tie_flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Ranking":
        return cls(
            per_placeholder={
                ph: [RankedCandidate.from_dict(rc) for rc in ranked]
                for ph, ranked in data["per_placeholder"].items()
            },
            tie_flags=dict(data["tie_flags"]),
        )


def aggregate(matrix: ScoreMatrix) -> Ranking:
    """Mean per candidate over the judges that scored it (exact rationals).

    Candidates nobody scored are left out of the ranking; a candidate list
    is sorted by mean descending, stable in first-appearance order.
    """
    if matrix.is_empty():
        raise NoScoresError()
    per_placeholder: dict[str, list[RankedCandidate]] = {}
    tie_flags: dict[str, bool] = {}
    for placeholder in matrix.placeholder_order:
        ranked = []
        for candidate in matrix.candidates_for(placeholder):
            per_judge = matrix.scores[(placeholder, candidate)]
            if not per_judge:
                continue
            total = sum(per_judge.values(), Fraction(0))
            meta = matrix.row_meta.get((placeholder, candidate), {})
            ranked.append(
                RankedCandidate(
                    candidate=candidate,
                    mean=total / len(per_judge),
                    total=total,
                    n_scores=len(per_judge),
                    valid=meta.get("valid", True),
                    reason=meta.get("reason"),
                )
            )
        ranked.sort(key=lambda rc: rc.mean, reverse=True)  # stable sort
        per_placeholder[placeholder] = ranked
        tie_flags[placeholder] = len(ranked) > 1 and ranked[0].mean == ranked[1].mean
    return Ranking(per_placeholder, tie_flags)


@dataclass
class Resolution:
    placeholder: str
    winner: Optional[str]
    winner_mean: Optional[Fraction]
    tie: bool
    tied: tuple[str, ...]
    action: str  # selected | tie_lex | tie_defer | tie_rejudge | failed
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "placeholder": self.placeholder,
            "winner": self.winner,
            "winner_mean": None if self.winner_mean is None else str(self.winner_mean),
            "tie": self.tie,
            "tied": list(self.tied),
            "action": self.action,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Resolution":
        mean = data.get("winner_mean")
        return cls(
            placeholder=data["placeholder"],
            winner=data["winner"],
            winner_mean=None if mean is None else Fraction(mean),
            tie=data["tie"],
            tied=tuple(data["tied"]),
            action=data["action"],
            note=data.get("note"),
        )


def resolve_placeholder(
    placeholder: str, ranked: list[RankedCandidate], policy: str
) -> Resolution:
    """Pick a winner for one placeholder under the given tie policy.

    Invalid candidates never win, whatever they scored.  A ``rejudge``
    outcome is a signal to the caller to gather another judging round and
    try again.
    """
    if not ranked:
        return Resolution(placeholder, None, None, False, (), "failed", "no scores")
    valid = [rc for rc in ranked if rc.valid]
    if not valid:
        raise AllInvalidError(placeholder)
    top = valid[0].mean
    tied = tuple(rc.candidate for rc in valid if rc.mean == top)
    if len(tied) == 1:
        return Resolution(placeholder, tied[0], top, False, (), "selected")
    if policy == LEX:
        winner = min(tied)
        return Resolution(
            placeholder, winner, top, True, tied, "tie_lex",
            "lexicographic fallback among tied candidates",
        )
    if policy == DEFER:
        return Resolution(
            placeholder, None, top, True, tied, "tie_defer",
            "tie left for expert decision",
        )
    return Resolution(
        placeholder, None, top, True, tied, "tie_rejudge",
        "tie pending another judging round",
    )


def rank_and_resolve(ranking: Ranking, policy: str = REJUDGE) -> dict[str, Resolution]:
    """Resolve every placeholder; per-placeholder failures are contained."""
    if policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy: {policy!r}")
    resolutions: dict[str, Resolution] = {}
    for placeholder, ranked in ranking.per_placeholder.items():
        try:
            resolutions[placeholder] = resolve_placeholder(placeholder, ranked, policy)
        except AllInvalidError as exc:
            resolutions[placeholder] = Resolution(
                placeholder, None, None, False, (), "failed", str(exc)
            )
    return resolutions


def import_external_scores(
    source: Union[str, Path], candidates: CandidateSet
) -> ScoreMatrix:
    """Read a ``placeholder,candidate,judge_id,score`` CSV into a matrix.

    Candidate names must resolve against the shown set by normalized form;
    scores must be on the rubric.  Intended for merging human judgments in
    as extra judge columns.
    """
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    reader = csv.reader(text.splitlines())
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise NoScoresError()
    header = [cell.strip() for cell in rows[0]]
    if header != ["placeholder", "candidate", "judge_id", "score"]:
        raise PrednamerError(
            "score file must start with header 'placeholder,candidate,judge_id,score'"
        )
    if len(rows) == 1:
        raise NoScoresError()
    matrix = ScoreMatrix.from_candidates(candidates)
    for row_number, row in enumerate(rows[1:], start=2):
        placeholder, name, judge_id, score_text = (cell.strip() for cell in row[:4])
        shown = candidates.names_for(placeholder)
        resolved = name if name in shown else None
        if resolved is None:
            try:
                normalized = normalize_name(name)
            except UnnormalizableNameError as exc:
                normalized = exc.attempted
            resolved = normalized if normalized in shown else None
        if resolved is None:
            raise UnknownCandidateError(row_number, placeholder, name)
        score = parse_rubric_score(score_text)
        if score is None:
            raise OffRubricScoreError(row_number, score_text)
        matrix.add(judge_id, placeholder, resolved, score)
    return matrix
