from __future__ import annotations

import re

import pytest

from prednamer import pipeline
from prednamer.corpus import CORPUS_NAMES, load_entry
from prednamer.gateway import Gateway

_ACCEPTANCE_RESULTS: dict[str, str] = {}
_ACCEPTANCE_RE = re.compile(r"test_c(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    match = _ACCEPTANCE_RE.search(report.nodeid)
    if match:
        key = f"criterion {int(match.group(1)):2d} ({match.group(2)})"
        _ACCEPTANCE_RESULTS[key] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for key in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[key]
        marker = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"{marker}  {key}")


@pytest.fixture(scope="session")
def corpus_names():
    return CORPUS_NAMES


@pytest.fixture(scope="session")
def entry(request):
    return load_entry(request.param)


def replay_run(name: str, overrides: dict | None = None):
    """Run a bundled corpus against its recorded fixtures."""
    entry = load_entry(name)
    config = entry.config(overrides)
    gateway = Gateway("replay", entry.fixtures())
    runner = pipeline.run_fewshot if config.mode == "few_shot" else pipeline.run
    return runner(entry.program(), config, gateway, label=name)


@pytest.fixture(scope="session")
def family_run():
    return replay_run("family")


@pytest.fixture(scope="session")
def reachability_run():
    return replay_run("reachability")
