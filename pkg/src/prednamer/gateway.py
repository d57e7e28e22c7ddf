"""Provider-agnostic chat-completion access with record/replay.

One OpenAI-compatible wire shape covers every endpoint: POST
``{base_url}/chat/completions`` with the prompt as a single user message
and a bearer token taken from the endpoint's environment variable.

Every exchange is keyed by a digest of ``(model_id, prompt_text,
round_index)``; the round index distinguishes deliberate repetitions of
the same prompt.  In ``record`` mode exchanges are appended to a JSON-lines
fixture store; in ``replay`` mode they are answered from it, which makes
whole pipeline runs deterministic and network-free.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

from .errors import PrednamerError
from .prompts import RenderedPrompt

LIVE = "live"
RECORD = "record"
REPLAY = "replay"

# a transport resolves (endpoint, prompt_text, round_index) to response text
Transport = Callable[["ModelEndpoint", str, int], str]


class AuthMissingError(PrednamerError):
    def __init__(self, model_id: str, env_var: str):
        self.model_id = model_id
        self.env_var = env_var
        super().__init__(
            f"endpoint {model_id!r} needs environment variable {env_var} to be set"
        )


class TransportError(PrednamerError):
    def __init__(self, model_id: str, attempts: int, cause: str):
        self.model_id = model_id
        self.attempts = attempts
        super().__init__(
            f"request to {model_id!r} failed after {attempts} attempt(s): {cause}"
        )


class ReplayMissError(PrednamerError):
    def __init__(self, model_id: str, round_index: int, digest: str):
        self.model_id = model_id
        self.round_index = round_index
        self.digest = digest
        super().__init__(
            f"no recorded exchange for model {model_id!r}, round {round_index}"
            f" (digest {digest[:12]}...)"
        )


@dataclass(frozen=True)
class ModelEndpoint:
    model_id: str
    base_url: str = ""
    auth_env_var: Optional[str] = None
    max_retries: int = 2
    timeout: float = 60.0
    retry_backoff: float = 0.5
    params: dict = field(default_factory=dict, hash=False)


@dataclass
class CompletionExchange:
    model_id: str
    round_index: int
    prompt_text: str
    digest: str
    prompt_sha256: str
    response_text: Optional[str] = None
    latency: float = 0.0
    backend: str = REPLAY
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def exchange_digest(model_id: str, prompt_text: str, round_index: int) -> str:
    payload = f"{model_id}\x00{round_index}\x00{prompt_text}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class FixtureStore:
    """JSON-lines store of recorded exchanges, keyed by digest.

    Reads load the whole file once; appends are serialized with a lock so
    concurrent recording is safe.  When a digest was recorded more than
    once, the latest record wins.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        if self.path.exists():
            self._load(self.path.read_text(encoding="utf-8"))

    @classmethod
    def from_text(cls, text: str, path: Optional[Path] = None) -> "FixtureStore":
        store = cls.__new__(cls)
        store.path = Path(path) if path else Path("<memory>")
        store._lock = threading.Lock()
        store._records = {}
        store._load(text)
        return store

    def _load(self, text: str) -> None:
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PrednamerError(
                    f"bad fixture line {line_no} in {self.path}: {exc}"
                ) from exc
            self._records[record["digest"]] = record

    def __len__(self) -> int:
        return len(self._records)

    def lookup(self, digest: str) -> Optional[dict]:
        return self._records.get(digest)

    def append(self, record: dict) -> None:
        with self._lock:
            self._records[record["digest"]] = record
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, sort_keys=True) + "\n")


def http_transport(endpoint: ModelEndpoint, prompt_text: str, round_index: int) -> str:
    """Default live transport: one OpenAI-style chat-completions call."""
    headers = {"Content-Type": "application/json"}
    if endpoint.auth_env_var:
        key = os.environ.get(endpoint.auth_env_var)
        if not key:
            raise AuthMissingError(endpoint.model_id, endpoint.auth_env_var)
        headers["Authorization"] = f"Bearer {key}"
    body = {
        "model": endpoint.model_id,
        "messages": [{"role": "user", "content": prompt_text}],
    }
    body.update(endpoint.params)
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    response = requests.post(url, headers=headers, json=body, timeout=endpoint.timeout)
    if response.status_code >= 400:
        raise requests.HTTPError(f"HTTP {response.status_code}: {response.text[:200]}")
    data = response.json()
    return data["choices"][0]["message"]["content"]


class Gateway:
    """Issues completions in one of three modes.

    ``live`` talks to the network (or an injected transport), ``record``
    does the same and appends every exchange to the fixture store, and
    ``replay`` answers purely from the store.
    """

    def __init__(
        self,
        mode: str = REPLAY,
        store: Optional[FixtureStore] = None,
        transport: Optional[Transport] = None,
        max_workers: int = 8,
    ):
        if mode not in (LIVE, RECORD, REPLAY):
            raise ValueError(f"unknown gateway mode: {mode!r}")
        if mode in (RECORD, REPLAY) and store is None:
            raise ValueError(f"{mode} mode needs a fixture store")
        self.mode = mode
        self.store = store
        self.transport = transport or http_transport
        self.max_workers = max_workers

    def complete(
        self,
        endpoint: ModelEndpoint,
        prompt: "RenderedPrompt | str",
        round_index: int = 0,
    ) -> CompletionExchange:
        prompt_text = prompt.text if isinstance(prompt, RenderedPrompt) else prompt
        digest = exchange_digest(endpoint.model_id, prompt_text, round_index)
        exchange = CompletionExchange(
            model_id=endpoint.model_id,
            round_index=round_index,
            prompt_text=prompt_text,
            digest=digest,
            prompt_sha256=_sha256(prompt_text),
            backend=self.mode,
        )
        if self.mode == REPLAY:
            record = self.store.lookup(digest)
            if record is None:
                raise ReplayMissError(endpoint.model_id, round_index, digest)
            exchange.response_text = record["response_text"]
            return exchange

        started = time.monotonic()
        exchange.response_text = self._call_with_retries(
            endpoint, prompt_text, round_index
        )
        exchange.latency = time.monotonic() - started
        if self.mode == RECORD:
            self.store.append(
                {
                    "digest": digest,
                    "model_id": endpoint.model_id,
                    "round_index": round_index,
                    "prompt_sha256": exchange.prompt_sha256,
                    "response_text": exchange.response_text,
                    "recorded_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                }
            )
        return exchange

    def _call_with_retries(
        self, endpoint: ModelEndpoint, prompt_text: str, round_index: int
    ) -> str:
        attempts = endpoint.max_retries + 1
        last: Optional[BaseException] = None
        for attempt in range(attempts):
            try:
                return self.transport(endpoint, prompt_text, round_index)
            except AuthMissingError:
                raise
            except Exception as exc:  # transport failure: back off and retry
                last = exc
                if attempt + 1 < attempts:
                    time.sleep(endpoint.retry_backoff * (2**attempt))
        raise TransportError(endpoint.model_id, attempts, repr(last))

    def complete_all(
        self,
        endpoints: Sequence[ModelEndpoint],
        prompt_for: Callable[[ModelEndpoint], "RenderedPrompt | str"],
        k: int = 1,
    ) -> list[CompletionExchange]:
        """Fan out ``k`` rounds to every endpoint.

        Results come back grouped by (endpoint order, round order) no matter
        how the network interleaves them, and a failing exchange is returned
        with its ``error`` set instead of aborting the batch.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        tasks = [
            (endpoint, round_index)
            for endpoint in endpoints
            for round_index in range(k)
        ]

        def run_one(task: tuple[ModelEndpoint, int]) -> CompletionExchange:
            endpoint, round_index = task
            prompt = prompt_for(endpoint)
            text = prompt.text if isinstance(prompt, RenderedPrompt) else prompt
            try:
                return self.complete(endpoint, prompt, round_index)
            except PrednamerError as exc:
                return CompletionExchange(
                    model_id=endpoint.model_id,
                    round_index=round_index,
                    prompt_text=text,
                    digest=exchange_digest(endpoint.model_id, text, round_index),
                    prompt_sha256=_sha256(text),
                    backend=self.mode,
                    error=str(exc),
                )

        if len(tasks) == 1:
            return [run_one(tasks[0])]
        with ThreadPoolExecutor(max_workers=min(self.max_workers, len(tasks))) as pool:
            return list(pool.map(run_one, tasks))


class ScriptedTransport:
    """Deterministic stand-in for the live transport.

    Useful for fabricating fixture stores from known responses: plug an
    instance into a ``record``-mode gateway and run the pipeline.  The
    script maps model ids to per-purpose responses:

    * ``suggest``/``choose``/``judge``: a string, or a list indexed by
      round for purposes that repeat;
    * ``fewshot``: a dict keyed by the step's target placeholder name.

    Purposes are recognized from the prompt text itself.
    """

    _FEWSHOT_RE = re.compile(r"find a meaningful name for (\S+)\.")

    def __init__(self, script: dict):
        self.script = script

    @staticmethod
    def classify(prompt_text: str) -> str:
        if "find a meaningful name for" in prompt_text:
            return "fewshot"
        if "Score the proposed names" in prompt_text:
            return "judge"
        if "Choose the most suitable name" in prompt_text:
            return "choose"
        return "suggest"

    def __call__(self, endpoint: ModelEndpoint, prompt_text: str, round_index: int) -> str:
        purpose = self.classify(prompt_text)
        model_script = self.script.get(endpoint.model_id, {})
        if purpose not in model_script:
            raise KeyError(
                f"no scripted {purpose} response for model {endpoint.model_id!r}"
            )
        entry = model_script[purpose]
        if purpose == "fewshot":
            target = self._FEWSHOT_RE.search(prompt_text).group(1)
            return entry[target]
        if isinstance(entry, str):
            return entry
        return entry[round_index % len(entry)]
