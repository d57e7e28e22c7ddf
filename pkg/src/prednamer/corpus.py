"""Bundled case-study corpus: programs, run configs, recorded fixtures.

Each entry ships four files under ``corpus/<name>/``:

* ``program.pl`` — the logic program with placeholder predicates;
* ``config.yaml`` — the run configuration used for replay;
* ``fixtures.jsonl`` — recorded exchanges for a network-free rerun;
* ``expected.json`` — published aggregates/winners, used by the tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import yaml

from .config import RunConfig, parse_config
from .errors import PrednamerError
from .gateway import FixtureStore
from .logic import LogicProgram, parse_program

CORPUS_NAMES = (
    "coauthors",
    "family",
    "math",
    "grandparent",
    "cousins",
    "lcm",
    "reachability",
)


class UnknownCorpusError(PrednamerError):
    def __init__(self, name: str):
        super().__init__(
            f"unknown corpus {name!r}; available: {', '.join(CORPUS_NAMES)}"
        )


@dataclass(frozen=True)
class CorpusEntry:
    name: str

    def _read(self, filename: str) -> str:
        root = resources.files(__package__).joinpath(f"corpus/{self.name}")
        return root.joinpath(filename).read_text(encoding="utf-8")

    def program_text(self) -> str:
        return self._read("program.pl")

    def program(self) -> LogicProgram:
        return parse_program(self.program_text())

    def config(self, overrides: dict | None = None) -> RunConfig:
        raw = yaml.safe_load(self._read("config.yaml"))
        return parse_config(raw, overrides)

    def fixtures(self) -> FixtureStore:
        return FixtureStore.from_text(self._read("fixtures.jsonl"))

    def expected(self) -> dict:
        return json.loads(self._read("expected.json"))


def load_entry(name: str) -> CorpusEntry:
    if name not in CORPUS_NAMES:
        raise UnknownCorpusError(name)
    return CorpusEntry(name)
