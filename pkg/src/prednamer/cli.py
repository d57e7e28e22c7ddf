"""Command-line interface.

Every subcommand is a thin adapter over the module APIs; nothing here has
behavior of its own.  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path
from typing import Optional

import click

from . import pipeline
from .candidates import CandidateSet
from .config import load_config
from .corpus import CORPUS_NAMES, load_entry
from .errors import PrednamerError
from .gateway import LIVE, RECORD, REPLAY, FixtureStore, Gateway
from .judging import aggregate, import_external_scores, rank_and_resolve
from .logic import parse_program, render_program
from .pipeline import RunReport, emit_report
from .placeholders import dependency_order, detect
from .prompts import render_choose, render_judge, render_suggest
from .rewriter import RenamingPlan, apply as apply_plan

FORMATS = click.Choice(["machine", "table"])
TIE_POLICIES = click.Choice(["rejudge", "defer", "lex"])


def domain_errors(command):
    """Map domain exceptions to exit code 1 with a clean message."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PrednamerError as exc:
            raise click.ClickException(str(exc))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise click.ClickException(f"malformed input file: {exc}")
        except OSError as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _load_program(path: str):
    return parse_program(Path(path).read_text(encoding="utf-8"))


def _load_candidates(path: str) -> CandidateSet:
    return CandidateSet.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _fixture_path(path: str) -> Path:
    p = Path(path)
    return p / "fixtures.jsonl" if p.is_dir() else p


def _make_gateway(replay: Optional[str], record: Optional[str]) -> tuple[Gateway, str]:
    if replay and record:
        raise click.UsageError("--replay and --record are mutually exclusive")
    if replay:
        return Gateway(REPLAY, FixtureStore(_fixture_path(replay))), REPLAY
    if record:
        return Gateway(RECORD, FixtureStore(_fixture_path(record))), RECORD
    return Gateway(LIVE), LIVE


@click.group()
@click.version_option(package_name="prednamer")
def main() -> None:
    """Assign meaningful names to unnamed predicates in logic programs."""


@main.command("detect")
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--patterns", multiple=True, help="Placeholder name regex (repeatable).")
@domain_errors
def detect_cmd(program_file: str, patterns: tuple[str, ...]) -> None:
    """List the placeholder predicates of PROGRAM_FILE."""
    program = _load_program(program_file)
    inventory = detect(program, patterns or None)
    if not inventory:
        click.echo("no placeholders detected")
        return
    for entry in inventory.entries:
        defs = ",".join(str(i) for i in entry.def_sites) or "-"
        uses = ",".join(str(i) for i in entry.use_sites) or "-"
        click.echo(f"{entry.symbol}  {entry.occurrence}  defs=[{defs}] uses=[{uses}]")
    order = ", ".join(str(s) for s in dependency_order(inventory, program))
    click.echo(f"dependency order: {order}")


@main.command("suggest")
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--patterns", multiple=True)
@domain_errors
def suggest_cmd(program_file: str, patterns: tuple[str, ...]) -> None:
    """Print the suggestion prompt for PROGRAM_FILE."""
    program = _load_program(program_file)
    inventory = detect(program, patterns or None)
    click.echo(render_suggest(program, inventory).text, nl=False)


@main.command("choose")
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "candidates_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Candidate-set JSON (one model's own suggestions).")
@domain_errors
def choose_cmd(program_file: str, candidates_file: str) -> None:
    """Print the self-choice prompt for a candidate set."""
    program = _load_program(program_file)
    candidates = _load_candidates(candidates_file)
    click.echo(render_choose(program, candidates).text, nl=False)


@main.command("judge")
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "candidates_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Pooled candidate-set JSON.")
@domain_errors
def judge_cmd(program_file: str, candidates_file: str) -> None:
    """Print the judging prompt for a pooled candidate set."""
    program = _load_program(program_file)
    candidates = _load_candidates(candidates_file)
    click.echo(render_judge(program, candidates).text, nl=False)


@main.command("rank")
@click.option("--candidates", "candidates_file", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--scores", "scores_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV: placeholder,candidate,judge_id,score")
@click.option("--tie-policy", type=TIE_POLICIES, default="defer", show_default=True)
@domain_errors
def rank_cmd(candidates_file: str, scores_file: str, tie_policy: str) -> None:
    """Aggregate a score file and print the ranking with winners."""
    candidates = _load_candidates(candidates_file)
    matrix = import_external_scores(scores_file, candidates)
    ranking = aggregate(matrix)
    resolutions = rank_and_resolve(ranking, tie_policy)
    for placeholder, ranked in ranking.per_placeholder.items():
        click.echo(f"== {placeholder} ==")
        for rc in ranked:
            flag = "" if rc.valid else f"  [invalid: {rc.reason}]"
            click.echo(f"  {rc.candidate}: {rc.to_dict()['display']}{flag}")
        resolution = resolutions[placeholder]
        if resolution.winner:
            click.echo(f"  winner: {resolution.winner}")
        else:
            click.echo(f"  no winner [{resolution.action}]")


@main.command("rewrite")
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--plan", "plan_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Renaming plan JSON: {\"h0/2\": \"parent\", ...}")
@click.option("-o", "--output", type=click.Path(dir_okay=False))
@click.option("--in-place", is_flag=True, help="Overwrite PROGRAM_FILE.")
@click.option("--force", is_flag=True, help="Apply despite collisions.")
@domain_errors
def rewrite_cmd(
    program_file: str, plan_file: str, output: Optional[str], in_place: bool,
    force: bool,
) -> None:
    """Apply a renaming plan and write the renamed program."""
    program = _load_program(program_file)
    raw = json.loads(Path(plan_file).read_text(encoding="utf-8"))
    plan = RenamingPlan.from_dict(
        {key: value if isinstance(value, dict) else {"name": value}
         for key, value in raw.items()}
    )
    renamed = apply_plan(program, plan, force=force)
    text = render_program(renamed, "canonical")
    if in_place:
        Path(program_file).write_text(text, encoding="utf-8")
    elif output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _run_options(command):
    decorators = [
        click.argument("program_file", type=click.Path(exists=True, dir_okay=False)),
        click.option("--config", "config_file", required=True,
                     type=click.Path(exists=True, dir_okay=False)),
        click.option("--replay", type=click.Path(exists=True),
                     help="Replay fixtures (file or directory)."),
        click.option("--record", type=click.Path(),
                     help="Record exchanges to fixtures (file or directory)."),
        click.option("--k", type=int, default=None, help="Override rounds per model."),
        click.option("--tie-policy", type=TIE_POLICIES, default=None),
        click.option("--format", "fmt", type=FORMATS, default="table",
                     show_default=True),
        click.option("--out-program", type=click.Path(dir_okay=False),
                     help="Also write the renamed program here."),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


def _execute_run(
    program_file: str, config_file: str, replay: Optional[str],
    record: Optional[str], k: Optional[int], tie_policy: Optional[str],
    fmt: str, out_program: Optional[str], few_shot: bool,
) -> None:
    gateway, gateway_mode = _make_gateway(replay, record)
    overrides: dict = {"gateway_mode": gateway_mode}
    if k is not None:
        overrides["k"] = k
    if tie_policy is not None:
        overrides["tie_policy"] = tie_policy
    if few_shot:
        overrides["mode"] = "few_shot"
    config = load_config(config_file, overrides)
    program = _load_program(program_file)
    runner = pipeline.run_fewshot if config.mode == "few_shot" else pipeline.run
    plan, report = runner(program, config, gateway, label=program_file)
    click.echo(emit_report(report, fmt), nl=False)
    if out_program and plan:
        renamed = apply_plan(program, plan)
        Path(out_program).write_text(
            render_program(renamed, "canonical"), encoding="utf-8"
        )


@main.command("run")
@_run_options
@domain_errors
def run_cmd(**kwargs) -> None:
    """Run the full suggest/choose/judge pipeline on PROGRAM_FILE."""
    _execute_run(few_shot=False, **kwargs)


@main.command("run-fewshot")
@_run_options
@domain_errors
def run_fewshot_cmd(**kwargs) -> None:
    """Run the incremental one-placeholder-at-a-time pipeline."""
    _execute_run(few_shot=True, **kwargs)


@main.command("corpus")
@click.argument("name", type=click.Choice(("list",) + CORPUS_NAMES))
@click.option("--replay", is_flag=True, help="Use the bundled recorded fixtures.")
@click.option("--tie-policy", type=TIE_POLICIES, default=None)
@click.option("--format", "fmt", type=FORMATS, default="table", show_default=True)
@domain_errors
def corpus_cmd(name: str, replay: bool, tie_policy: Optional[str], fmt: str) -> None:
    """Run a bundled case study; NAME 'list' shows what is available."""
    if name == "list":
        for corpus_name in CORPUS_NAMES:
            click.echo(corpus_name)
        return
    if not replay:
        raise click.UsageError(
            "corpus runs are replay-only; pass --replay (live runs go through"
            " 'run' with your own config)"
        )
    entry = load_entry(name)
    overrides: dict = {}
    if tie_policy is not None:
        overrides["tie_policy"] = tie_policy
    config = entry.config(overrides)
    gateway = Gateway(REPLAY, entry.fixtures())
    program = entry.program()
    runner = pipeline.run_fewshot if config.mode == "few_shot" else pipeline.run
    plan, report = runner(program, config, gateway, label=name)
    click.echo(emit_report(report, fmt), nl=False)


@main.command("import-scores")
@click.argument("scores_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_file", type=click.Path(exists=True, dir_okay=False),
              help="Merge into the score matrix of an existing machine report.")
@click.option("--candidates", "candidates_file",
              type=click.Path(exists=True, dir_okay=False),
              help="Candidate-set JSON naming what was judged.")
@click.option("--tie-policy", type=TIE_POLICIES, default="defer", show_default=True)
@domain_errors
def import_scores_cmd(
    scores_file: str, report_file: Optional[str], candidates_file: Optional[str],
    tie_policy: str,
) -> None:
    """Fold external (e.g. human) judge scores in and print the ranking."""
    if bool(report_file) == bool(candidates_file):
        raise click.UsageError("pass exactly one of --report or --candidates")
    if report_file:
        report = pipeline.parse_report(
            Path(report_file).read_text(encoding="utf-8")
        )
        candidates = report.candidates.restrict_nonempty()
        matrix = report.score_matrix
        external = import_external_scores(scores_file, candidates)
        matrix.merge(external)
    else:
        candidates = _load_candidates(candidates_file)
        matrix = import_external_scores(scores_file, candidates)
    ranking = aggregate(matrix)
    resolutions = rank_and_resolve(ranking, tie_policy)
    stub = RunReport(
        {
            "mode": "external_scores",
            "label": scores_file,
            "score_matrix": matrix.to_dict(),
            "ranking": ranking.to_dict(),
            "resolutions": {
                ph: res.to_dict() for ph, res in resolutions.items()
            },
        }
    )
    click.echo(emit_report(stub, "table"), nl=False)


if __name__ == "__main__":
    sys.exit(main())
