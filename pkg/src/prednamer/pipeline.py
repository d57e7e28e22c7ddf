"""Orchestration of the three-step naming pipeline and its incremental variant.

``run`` executes: (1) fan out the suggestion prompt to every model, k
rounds each; (2) ask each model to pick one name among its own
deduplicated suggestions (reported, but the judged pool is never pruned by
it); (3) have the judge models score the pooled candidates, then
aggregate, resolve ties, build the renaming plan, and pre-check the
rewrite.  ``run_fewshot`` names one placeholder at a time in dependency
order, substituting each winner before the next step.

Failures are contained per placeholder or per exchange: one misbehaving
model never voids a run.  Everything lands in a RunReport whose machine
form is a single schema-versioned JSON document; under replay fixtures it
is byte-stable across runs.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from . import judging
from .candidates import (
    CandidateSet,
    NONE,
    UnnormalizableNameError,
    extract_suggestions,
    make_candidate,
    merge,
    normalize_name,
    validate_name,
)
from .config import RunConfig
from .errors import PrednamerError
from .gateway import CompletionExchange, Gateway, ModelEndpoint
from .judging import (
    DEFER,
    JudgeFormatError,
    Ranking,
    Resolution,
    ScoreMatrix,
    aggregate,
    format_score,
    rank_and_resolve,
)
from .logic import LogicProgram, PredicateSymbol
from .placeholders import PlaceholderInventory, dependency_order, detect
from .prompts import (
    RenderedPrompt,
    render_choose,
    render_fewshot_step,
    render_judge,
    render_suggest,
)
from .rewriter import (
    Assignment,
    RenamingPlan,
    apply,
    check_collisions,
    renamed_program_sha256,
)

SCHEMA_VERSION = 1


@dataclass
class RunReport:
    """A machine-readable audit of one pipeline run.

    The payload is a plain JSON-compatible dict; typed accessors rebuild
    the richer objects on demand.  ``parse_report(emit_report(r)) == r``.
    """

    data: dict = field(default_factory=dict)

    @property
    def plan(self) -> RenamingPlan:
        return RenamingPlan.from_dict(self.data.get("plan", {}))

    @property
    def ranking(self) -> Optional[Ranking]:
        raw = self.data.get("ranking")
        return None if raw is None else Ranking.from_dict(raw)

    @property
    def score_matrix(self) -> Optional[ScoreMatrix]:
        raw = self.data.get("score_matrix")
        return None if raw is None else ScoreMatrix.from_dict(raw)

    @property
    def resolutions(self) -> dict[str, Resolution]:
        return {
            ph: Resolution.from_dict(raw)
            for ph, raw in self.data.get("resolutions", {}).items()
        }

    @property
    def candidates(self) -> CandidateSet:
        return CandidateSet.from_dict(self.data.get("candidates", {}))

    @property
    def steps(self) -> list[dict]:
        return self.data.get("steps", [])

    @property
    def anomalies(self) -> list[dict]:
        return self.data.get("anomalies", [])


def emit_report(report: RunReport, format: str = "machine") -> str:
    if format == "machine":
        return json.dumps(report.data, sort_keys=True, indent=2) + "\n"
    if format == "table":
        return _format_tables(report)
    raise ValueError(f"unknown report format: {format!r}")


def parse_report(text: str) -> RunReport:
    return RunReport(json.loads(text))


def _format_tables(report: RunReport) -> str:
    lines: list[str] = []
    label = report.data.get("label")
    header = f"run report ({report.data.get('mode', '?')})"
    if label:
        header += f" :: {label}"
    lines.append(header)

    ranking = report.data.get("ranking")
    matrix = report.data.get("score_matrix")
    if ranking and matrix:
        judge_ids = matrix["judge_ids"]
        cells = {
            (row["placeholder"], row["candidate"]): row["scores"]
            for row in matrix["rows"]
        }
        for placeholder, ranked in ranking["per_placeholder"].items():
            lines.append("")
            lines.append(f"== {placeholder} ==")
            name_width = max(
                [len("candidate")] + [len(rc["candidate"]) for rc in ranked]
            )
            head = "candidate".ljust(name_width)
            for judge in judge_ids:
                head += "  " + judge.rjust(max(len(judge), 4))
            head += "  " + "score".rjust(6)
            lines.append(head)
            for rc in ranked:
                row = rc["candidate"].ljust(name_width)
                scores = cells.get((placeholder, rc["candidate"]), {})
                for judge in judge_ids:
                    value = scores.get(judge)
                    text = "-" if value is None else _short_fraction(value)
                    row += "  " + text.rjust(max(len(judge), 4))
                row += "  " + rc["display"].rjust(6)
                if not rc["valid"]:
                    row += f"  [invalid: {rc['reason']}]"
                lines.append(row)

    resolutions = report.data.get("resolutions", {})
    if resolutions:
        lines.append("")
        lines.append("outcome:")
        for placeholder, res in resolutions.items():
            if res["winner"]:
                mean = Resolution.from_dict(res).winner_mean
                shown = format_score(mean) if mean is not None else "-"
                suffix = f" [{res['action']}]" if res["action"] != "selected" else ""
                lines.append(f"  {placeholder} -> {res['winner']} ({shown}){suffix}")
            else:
                tied = ", ".join(res["tied"]) if res["tied"] else "-"
                lines.append(f"  {placeholder}: no winner [{res['action']}] tie: {tied}")

    for step in report.data.get("steps", []):
        status = step["resolved"] if step["resolved"] else f"failed: {step['note']}"
        lines.append(f"step {step['index']:2d}  {step['target']:8s} -> {status}")

    collisions = report.data.get("collisions", [])
    if collisions:
        lines.append("")
        lines.append("collisions:")
        for finding in collisions:
            lines.append(
                f"  [{finding['severity']}] {finding['kind']}:"
                f" {', '.join(finding['placeholders'])} -> "
                f"{finding['name']}/{finding['arity']}"
            )

    anomalies = report.data.get("anomalies", [])
    if anomalies:
        lines.append("")
        lines.append(f"anomalies: {len(anomalies)}")
    return "\n".join(lines) + "\n"


def _short_fraction(value: str) -> str:
    from fractions import Fraction

    frac = Fraction(value)
    if frac.denominator == 1:
        return str(frac.numerator)
    return str(float(frac))


def _exchange_entry(exchange: CompletionExchange, purpose: str) -> dict:
    return {
        "digest": exchange.digest,
        "model_id": exchange.model_id,
        "round_index": exchange.round_index,
        "purpose": purpose,
        "ok": exchange.ok,
        "error": exchange.error,
        "latency": round(exchange.latency, 6),
    }


def _inventory_entries(inventory: PlaceholderInventory) -> list[dict]:
    return [
        {
            "symbol": str(entry.symbol),
            "occurrence": entry.occurrence,
            "def_sites": list(entry.def_sites),
            "use_sites": list(entry.use_sites),
        }
        for entry in inventory.entries
    ]


def _new_report_data(mode: str, label: Optional[str]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "label": label,
        "inventory": [],
        "exchanges": [],
        "suggestions": [],
        "candidates": {},
        "model_candidates": {},
        "self_choices": {},
        "score_matrix": None,
        "ranking": None,
        "resolutions": {},
        "plan": {},
        "collisions": [],
        "renamed_program_sha256": None,
        "steps": [],
        "timing": {"exchanges": 0, "total_latency": 0.0},
        "anomalies": [],
        "notes": [],
    }


def _finish_timing(data: dict) -> None:
    data["timing"]["exchanges"] = len(data["exchanges"])
    data["timing"]["total_latency"] = round(
        sum(e["latency"] for e in data["exchanges"]), 6
    )


def run(
    program: LogicProgram,
    config: RunConfig,
    gateway: Gateway,
    label: Optional[str] = None,
) -> tuple[RenamingPlan, RunReport]:
    """The zero-shot pipeline: suggest, self-choose, judge, resolve, plan."""
    data = _new_report_data(config.mode, label)
    inventory = detect(program, config.patterns)
    data["inventory"] = _inventory_entries(inventory)
    if not inventory:
        data["notes"].append("inventory empty: nothing to rename")
        _finish_timing(data)
        return RenamingPlan(), RunReport(data)

    # step 1: suggestions, n models x k rounds of the same prompt
    suggest_prompt = render_suggest(program, inventory)
    exchanges = gateway.complete_all(
        config.models, lambda endpoint: suggest_prompt, config.k
    )
    suggestions = []
    for exchange in exchanges:
        data["exchanges"].append(_exchange_entry(exchange, "suggest"))
        if not exchange.ok:
            data["anomalies"].append(
                {
                    "kind": "exchange_failed",
                    "model": exchange.model_id,
                    "round": exchange.round_index,
                    "detail": exchange.error,
                }
            )
            continue
        suggestions.extend(
            extract_suggestions(
                exchange.response_text,
                inventory.names(),
                (exchange.model_id, exchange.round_index),
            )
        )
    data["suggestions"] = [
        {
            "placeholder": s.placeholder,
            "text": s.text,
            "model_id": s.source[0],
            "round_index": s.source[1],
            "extraction": s.extraction,
        }
        for s in suggestions
    ]

    pooled = merge(suggestions)
    data["candidates"] = pooled.to_dict()

    # step 2: per-model self-choice over each model's own deduplicated names
    for endpoint in config.models:
        own = merge([s for s in suggestions if s.source[0] == endpoint.model_id])
        own = own.restrict_nonempty()
        data["model_candidates"][endpoint.model_id] = own.to_dict()
        if not own:
            data["self_choices"][endpoint.model_id] = None
            data["anomalies"].append(
                {
                    "kind": "no_usable_suggestions",
                    "model": endpoint.model_id,
                    "detail": "model contributed no extractable names",
                }
            )
            continue
        data["self_choices"][endpoint.model_id] = _self_choose(
            program, endpoint, own, gateway, data
        )

    # step 3: judging over the pooled candidates
    judged = pooled.restrict_nonempty()
    plan = RenamingPlan()
    if not judged or not config.judges:
        if not judged:
            data["notes"].append("no candidates extracted; skipping judging")
        else:
            data["notes"].append("no judges configured; skipping judging")
        _finish_timing(data)
        return plan, RunReport(data)

    matrix = ScoreMatrix.from_candidates(
        judged, [judge.model_id for judge in config.judges]
    )
    judge_prompt = render_judge(program, judged)
    rounds_used = _judge_round(
        gateway, config, judge_prompt, judged, matrix, data, base_round=0, suffix=""
    )

    try:
        ranking = aggregate(matrix)
    except judging.NoScoresError:
        data["score_matrix"] = matrix.to_dict()
        data["notes"].append("no judge scores; no ranking")
        _finish_timing(data)
        return plan, RunReport(data)

    resolutions = rank_and_resolve(ranking, config.tie_policy)
    rejudges = 0
    while (
        any(r.action == "tie_rejudge" for r in resolutions.values())
        and rejudges < config.rejudge_budget
    ):
        rejudges += 1
        rounds_used += _judge_round(
            gateway,
            config,
            judge_prompt,
            judged,
            matrix,
            data,
            base_round=rounds_used,
            suffix=f"#{rejudges + 1}",
        )
        ranking = aggregate(matrix)
        resolutions = rank_and_resolve(ranking, config.tie_policy)
    for placeholder, resolution in list(resolutions.items()):
        if resolution.action == "tie_rejudge":
            resolutions[placeholder] = judging.resolve_placeholder(
                placeholder, ranking.per_placeholder[placeholder], DEFER
            )

    for placeholder in inventory.names():
        if placeholder not in resolutions:
            resolutions[placeholder] = Resolution(
                placeholder, None, None, False, (), "failed", "no candidates"
            )

    data["score_matrix"] = matrix.to_dict()
    data["ranking"] = ranking.to_dict()
    data["resolutions"] = {
        ph: resolutions[ph].to_dict() for ph in inventory.names()
    }

    plan = _build_plan(inventory, resolutions, judged)
    data["plan"] = plan.to_dict()
    findings = check_collisions(program, plan)
    data["collisions"] = [f.to_dict() for f in findings]
    if plan and not any(f.severity == "error" for f in findings):
        renamed = apply(program, plan)
        data["renamed_program_sha256"] = renamed_program_sha256(renamed)
    elif plan:
        data["notes"].append("rewrite withheld: collision check failed")
    _finish_timing(data)
    return plan, RunReport(data)


def _self_choose(
    program: LogicProgram,
    endpoint: ModelEndpoint,
    own: CandidateSet,
    gateway: Gateway,
    data: dict,
) -> Optional[dict]:
    prompt = render_choose(program, own)
    try:
        exchange = gateway.complete(endpoint, prompt, 0)
    except PrednamerError as exc:
        data["anomalies"].append(
            {"kind": "exchange_failed", "model": endpoint.model_id, "detail": str(exc)}
        )
        return None
    data["exchanges"].append(_exchange_entry(exchange, "choose"))
    chosen: dict[str, Optional[str]] = {}
    extracted = extract_suggestions(
        exchange.response_text, own.placeholders(), (endpoint.model_id, 0)
    )
    for suggestion in extracted:
        if suggestion.extraction == NONE:
            chosen[suggestion.placeholder] = None
            continue
        try:
            normalized = normalize_name(suggestion.text)
        except UnnormalizableNameError as exc:
            normalized = exc.attempted
        if normalized in own.names_for(suggestion.placeholder):
            chosen[suggestion.placeholder] = normalized
        else:
            chosen[suggestion.placeholder] = None
            data["anomalies"].append(
                {
                    "kind": "self_choice_unknown",
                    "model": endpoint.model_id,
                    "placeholder": suggestion.placeholder,
                    "detail": suggestion.text,
                }
            )
    return chosen


def _judge_round(
    gateway: Gateway,
    config: RunConfig,
    prompt: RenderedPrompt,
    judged: CandidateSet,
    matrix: ScoreMatrix,
    data: dict,
    base_round: int,
    suffix: str,
) -> int:
    """One judging pass over all judges, with a bounded re-ask per judge
    when a response parses badly.  Returns how many rounds were consumed."""
    rounds = 0
    for judge in config.judges:
        column = judge.model_id + suffix
        attempts = 1 + max(0, config.judge_retry_budget)
        for attempt in range(attempts):
            round_index = base_round + attempt
            rounds = max(rounds, attempt + 1)
            try:
                exchange = gateway.complete(judge, prompt, round_index)
            except PrednamerError as exc:
                data["anomalies"].append(
                    {
                        "kind": "exchange_failed",
                        "model": judge.model_id,
                        "round": round_index,
                        "detail": str(exc),
                    }
                )
                break
            data["exchanges"].append(_exchange_entry(exchange, "judge"))
            try:
                partial = judging.parse_judge_scores(
                    exchange.response_text, judged, column
                )
            except JudgeFormatError as exc:
                data["anomalies"].append(
                    {
                        "kind": "judge_format",
                        "model": judge.model_id,
                        "round": round_index,
                        "detail": str(exc),
                    }
                )
                continue
            matrix.merge(partial)
            data["anomalies"].extend(
                {**anomaly, "round": round_index} for anomaly in partial.anomalies
            )
            if not partial.anomalies:
                break
            # off-rubric or unknown names: re-ask once, else leave missing
    return rounds


def _build_plan(
    inventory: PlaceholderInventory,
    resolutions: dict[str, Resolution],
    judged: CandidateSet,
) -> RenamingPlan:
    assignments = {}
    for entry in inventory.entries:
        resolution = resolutions.get(entry.symbol.name)
        if resolution is None or resolution.winner is None:
            continue
        candidate = judged.find(entry.symbol.name, resolution.winner)
        sources = tuple(sorted({m for m, _ in candidate.sources})) if candidate else ()
        assignments[entry.symbol] = Assignment(
            name=resolution.winner,
            mean=resolution.winner_mean,
            tie=resolution.tie,
            sources=sources,
        )
    return RenamingPlan(assignments)


def run_fewshot(
    program: LogicProgram,
    config: RunConfig,
    gateway: Gateway,
    label: Optional[str] = None,
) -> tuple[RenamingPlan, RunReport]:
    """Name one placeholder at a time, substituting each winner before the
    next step so later prompts see already-resolved names.

    With a single model the step winner is that model's answer (kept in its
    verbatim spelling, as long as it is a legal predicate name).  With
    several models the majority of normalized answers wins; a majority tie
    goes to a judge round when judges are configured, else to the
    lexicographically first answer.  A failed step leaves its placeholder
    untouched and later steps carry on with the original name.
    """
    data = _new_report_data(config.mode, label)
    inventory = detect(program, config.patterns)
    data["inventory"] = _inventory_entries(inventory)
    if not inventory:
        data["notes"].append("inventory empty: nothing to rename")
        _finish_timing(data)
        return RenamingPlan(), RunReport(data)

    order = dependency_order(inventory, program)
    current = program
    assignments: dict[PredicateSymbol, Assignment] = {}

    for index, symbol in enumerate(order):
        step: dict = {
            "index": index,
            "target": str(symbol),
            "suggestions": {},
            "resolved": None,
            "method": None,
            "note": None,
        }
        data["steps"].append(step)
        prompt = render_fewshot_step(current, symbol, config.fewshot_slice)
        exchanges = gateway.complete_all(config.models, lambda e: prompt, 1)
        usable = []
        for exchange in exchanges:
            data["exchanges"].append(_exchange_entry(exchange, "fewshot_step"))
            if not exchange.ok:
                data["anomalies"].append(
                    {
                        "kind": "exchange_failed",
                        "model": exchange.model_id,
                        "detail": exchange.error,
                    }
                )
                continue
            extracted = extract_suggestions(
                exchange.response_text, [symbol.name], (exchange.model_id, index)
            )[0]
            step["suggestions"][exchange.model_id] = (
                extracted.text if extracted.extraction != NONE else None
            )
            if extracted.extraction != NONE:
                usable.append(extracted)

        if not usable:
            step["note"] = "no usable suggestion"
            continue

        if len(usable) == 1:
            raw, method = usable[0].text, "single_model"
        else:
            raw, method = _majority_winner(usable, symbol, current, config, gateway, data)
        step["method"] = method

        ok, reason = validate_name(raw)
        if not ok:
            step["note"] = f"invalid name {raw!r}: {reason}"
            continue
        candidate_plan = RenamingPlan(
            {symbol: Assignment(raw, sources=tuple(sorted(s.source[0] for s in usable)))}
        )
        errors = [
            c for c in check_collisions(current, candidate_plan) if c.severity == "error"
        ]
        if errors:
            step["note"] = f"collision: {errors[0]}"
            continue
        current = apply(current, candidate_plan)
        assignments[symbol] = candidate_plan.assignments[symbol]
        step["resolved"] = raw

    plan = RenamingPlan(assignments)
    data["plan"] = plan.to_dict()
    data["renamed_program_sha256"] = renamed_program_sha256(current)
    _finish_timing(data)
    return plan, RunReport(data)


def _majority_winner(
    usable: list,
    symbol: PredicateSymbol,
    current: LogicProgram,
    config: RunConfig,
    gateway: Gateway,
    data: dict,
) -> tuple[str, str]:
    """Multi-model step resolution: majority of normalized answers, judge
    tiebreak when available, else lexicographic."""
    normalized: dict[str, str] = {}
    for suggestion in usable:
        candidate = make_candidate(suggestion.text, [suggestion.source])
        normalized.setdefault(candidate.normalized, suggestion.text)
    counts = Counter(
        make_candidate(s.text, [s.source]).normalized for s in usable
    )
    best = max(counts.values())
    top = [name for name, count in counts.items() if count == best]
    if len(top) == 1:
        return normalized[top[0]], "majority"
    if config.judges:
        tied = CandidateSet(
            {symbol.name: [make_candidate(normalized[name], []) for name in top]}
        )
        matrix = ScoreMatrix.from_candidates(
            tied, [judge.model_id for judge in config.judges]
        )
        prompt = render_judge(current, tied)
        _judge_round(
            gateway, config, prompt, tied, matrix, data, base_round=0, suffix=""
        )
        try:
            ranking = aggregate(matrix)
            resolution = judging.resolve_placeholder(
                symbol.name, ranking.per_placeholder[symbol.name], judging.LEX
            )
            if resolution.winner:
                return normalized[resolution.winner], "judge_tiebreak"
        except (judging.NoScoresError, judging.AllInvalidError):
            pass
    return normalized[min(top)], "lex_tiebreak"
