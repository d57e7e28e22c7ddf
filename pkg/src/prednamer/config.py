"""Run configuration: a YAML file plus command-line overrides.

API keys never live in the file; each endpoint names an environment
variable (``auth_env_var``, defaulting to ``<MODEL_ID>_API_KEY`` with the
id uppercased) and the key is read from there only when a live or record
run actually needs it.

Schema (version 1)::

    schema_version: 1
    k: 3                      # suggestion rounds per model
    mode: zero_shot           # or few_shot
    tie_policy: rejudge       # rejudge | defer | lex
    rejudge_budget: 1
    judge_retry_budget: 1
    fewshot_slice: deps       # deps | full
    patterns:                 # optional, placeholder name regexes
      - "^h[0-9]+$"
    models:
      - model_id: chatgpt-4o
        base_url: https://api.openai.com/v1
        auth_env_var: OPENAI_API_KEY
        timeout: 60
        max_retries: 2
        params: {temperature: 0.7}
    judges:
      - model_id: gemini-1.5-flash
        base_url: https://example.invalid/v1
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import yaml

from .errors import PrednamerError
from .gateway import AuthMissingError, ModelEndpoint
from .judging import TIE_POLICIES
from .placeholders import DEFAULT_PATTERNS

SCHEMA_VERSION = 1

ZERO_SHOT = "zero_shot"
FEW_SHOT = "few_shot"


class ConfigError(PrednamerError):
    def __init__(self, path: str, message: str):
        self.field_path = path
        super().__init__(f"config field {path}: {message}")


@dataclass
class RunConfig:
    models: list[ModelEndpoint]
    judges: list[ModelEndpoint] = field(default_factory=list)
    k: int = 3
    mode: str = ZERO_SHOT
    tie_policy: str = "rejudge"
    rejudge_budget: int = 1
    judge_retry_budget: int = 1
    fewshot_slice: str = "deps"
    patterns: tuple[str, ...] = DEFAULT_PATTERNS

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("k", "must be >= 1")
        if not self.models:
            raise ConfigError("models", "at least one model is required")
        if self.mode not in (ZERO_SHOT, FEW_SHOT):
            raise ConfigError("mode", f"unknown mode {self.mode!r}")
        if self.tie_policy not in TIE_POLICIES:
            raise ConfigError("tie_policy", f"unknown policy {self.tie_policy!r}")
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ConfigError("models", "model_id values must be unique")
        # few-shot with a single model resolves steps by pass-through and
        # may run judge-free; zero-shot always needs a judging panel
        if self.mode == ZERO_SHOT and not self.judges:
            raise ConfigError("judges", "zero-shot runs need at least one judge")


def default_auth_env_var(model_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9]", "_", model_id).upper() + "_API_KEY"


def _endpoint(section: str, index: int, data: dict) -> ModelEndpoint:
    where = f"{section}[{index}]"
    if not isinstance(data, dict):
        raise ConfigError(where, "must be a mapping")
    if "model_id" not in data:
        raise ConfigError(f"{where}.model_id", "is required")
    known = {
        "model_id", "base_url", "auth_env_var", "max_retries",
        "timeout", "retry_backoff", "params",
    }
    for key in data:
        if key not in known:
            raise ConfigError(f"{where}.{key}", "unknown field")
    params = data.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.params", "must be a mapping")
    model_id = str(data["model_id"])
    if "auth_env_var" in data:
        auth_env_var = data["auth_env_var"]  # explicit null disables auth
    else:
        auth_env_var = default_auth_env_var(model_id)
    return ModelEndpoint(
        model_id=model_id,
        base_url=str(data.get("base_url", "")),
        auth_env_var=str(auth_env_var) if auth_env_var is not None else None,
        max_retries=int(data.get("max_retries", 2)),
        timeout=float(data.get("timeout", 60.0)),
        retry_backoff=float(data.get("retry_backoff", 0.5)),
        params=params,
    )


def load_config(
    source: Union[str, Path], overrides: Optional[dict] = None
) -> RunConfig:
    """Parse a config file and apply flag overrides.

    ``overrides`` may set k, mode, tie_policy, and patterns; an override of
    ``gateway_mode`` to ``live`` or ``record`` triggers the auth check for
    every endpoint.
    """
    path = Path(source)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from exc
    return parse_config(raw, overrides)


def parse_config(raw: Optional[dict], overrides: Optional[dict] = None) -> RunConfig:
    """Build a RunConfig from an already-loaded mapping."""
    overrides = dict(overrides or {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "top level must be a mapping")

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}")

    models_raw = raw.get("models")
    if not isinstance(models_raw, list) or not models_raw:
        raise ConfigError("models", "must be a non-empty list")
    models = [_endpoint("models", i, m) for i, m in enumerate(models_raw)]
    judges_raw = raw.get("judges") or []
    if not isinstance(judges_raw, list):
        raise ConfigError("judges", "must be a list")
    judges = [_endpoint("judges", i, j) for i, j in enumerate(judges_raw)]

    patterns = raw.get("patterns") or list(DEFAULT_PATTERNS)
    if not isinstance(patterns, list) or not all(isinstance(p, str) for p in patterns):
        raise ConfigError("patterns", "must be a list of regex strings")

    config = RunConfig(
        models=models,
        judges=judges,
        k=int(overrides.get("k", raw.get("k", 3))),
        mode=str(overrides.get("mode", raw.get("mode", ZERO_SHOT))),
        tie_policy=str(overrides.get("tie_policy", raw.get("tie_policy", "rejudge"))),
        rejudge_budget=int(raw.get("rejudge_budget", 1)),
        judge_retry_budget=int(raw.get("judge_retry_budget", 1)),
        fewshot_slice=str(raw.get("fewshot_slice", "deps")),
        patterns=tuple(overrides.get("patterns", patterns)),
    )
    config.validate()

    if overrides.get("gateway_mode") in ("live", "record"):
        check_auth(config.models + config.judges)
    return config


def check_auth(endpoints: Sequence[ModelEndpoint]) -> None:
    """Fail fast when a live run would miss an API key."""
    for endpoint in endpoints:
        env_var = endpoint.auth_env_var
        if env_var is None:
            continue
        if not os.environ.get(env_var):
            raise AuthMissingError(endpoint.model_id, env_var)
