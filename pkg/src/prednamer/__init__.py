"""prednamer: meaningful names for unnamed predicates in logic programs."""

from .candidates import (
    CandidateName,
    CandidateSet,
    RawSuggestion,
    extract_suggestions,
    merge,
    normalize_name,
    validate_name,
)
from .config import RunConfig, load_config
from .errors import PrednamerError
from .gateway import (
    CompletionExchange,
    FixtureStore,
    Gateway,
    ModelEndpoint,
    ScriptedTransport,
)
from .judging import (
    Ranking,
    ScoreMatrix,
    aggregate,
    import_external_scores,
    parse_judge_scores,
    rank_and_resolve,
)
from .logic import (
    LogicProgram,
    PredicateSymbol,
    parse_program,
    render_program,
)
from .pipeline import RunReport, emit_report, parse_report, run, run_fewshot
from .placeholders import PlaceholderInventory, dependency_order, detect
from .prompts import (
    render_choose,
    render_fewshot_step,
    render_judge,
    render_suggest,
)
from .rewriter import RenamingPlan, apply, check_collisions

__version__ = "0.1.0"

__all__ = [
    "CandidateName",
    "CandidateSet",
    "CompletionExchange",
    "FixtureStore",
    "Gateway",
    "LogicProgram",
    "ModelEndpoint",
    "PlaceholderInventory",
    "PredicateSymbol",
    "PrednamerError",
    "Ranking",
    "RawSuggestion",
    "RenamingPlan",
    "RunConfig",
    "RunReport",
    "ScoreMatrix",
    "ScriptedTransport",
    "aggregate",
    "apply",
    "check_collisions",
    "dependency_order",
    "detect",
    "emit_report",
    "extract_suggestions",
    "import_external_scores",
    "load_config",
    "merge",
    "normalize_name",
    "parse_judge_scores",
    "parse_program",
    "parse_report",
    "rank_and_resolve",
    "render_choose",
    "render_fewshot_step",
    "render_judge",
    "render_program",
    "render_suggest",
    "run",
    "run_fewshot",
    "validate_name",
]
