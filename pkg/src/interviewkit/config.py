"""Configuration file loading.

Configs are JSON; flags override file values, and secrets live only in
the environment variables named by each endpoint's auth_ref. A config
whose difficulty section violates any validity rule is refused at load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .chunking import ChunkPolicy
from .difficulty import RULE_DESCRIPTIONS, DifficultyConfig, validate_config
from .errors import ConfigError
from .gateway import EndpointRole, ModelEndpoint, RequestParams, RetryPolicy
from .interview import ModelEndpoints, RunConfig
from .validation import JudgeMode, JudgePolicy


@dataclass(frozen=True)
class AppConfig:
    run: RunConfig
    endpoints: ModelEndpoints
    chunk_policy: ChunkPolicy
    mock_script: str | None = None
    stop_entities_path: str | None = None
    validation_trials: int = 1


def _difficulty_from(section: dict) -> DifficultyConfig:
    config = DifficultyConfig.create(
        gains=section.get("gains", [1, "1.5", 2]),
        thresholds=section.get("thresholds", ["0.5", 1]),
    )
    violations = validate_config(config)
    if violations:
        details = "; ".join(f"{v}: {RULE_DESCRIPTIONS[v]}" for v in violations)
        raise ConfigError(f"invalid difficulty config ({details})")
    return config


def _endpoint_from(section: dict, role: EndpointRole) -> ModelEndpoint:
    params = section.get("params", {})
    retry = section.get("retry", {})
    return ModelEndpoint(
        role=role,
        model_name=section.get("model_name", f"mock-{role.value}"),
        base_url=section.get("base_url", ""),
        auth_ref=section.get("auth_ref", ""),
        params=RequestParams(
            temperature=params.get("temperature", 0.0),
            max_tokens=params.get("max_tokens", 1024),
            timeout_ms=params.get("timeout_ms", 60_000),
        ),
        retry=RetryPolicy(
            max_attempts=retry.get("max_attempts", 3),
            backoff_base_ms=retry.get("backoff_base_ms", 250),
            backoff_cap_ms=retry.get("backoff_cap_ms", 10_000),
        ),
        rate_limit_per_minute=section.get("rate_limit_per_minute"),
    )


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    difficulty = _difficulty_from(data.get("difficulty", {}))
    run_section = data.get("run", {})
    judge_section = data.get("judge", {})
    try:
        judge = JudgePolicy(mode=JudgeMode(judge_section.get("mode", "exact_normalized")))
    except ValueError as exc:
        raise ConfigError(f"unknown judge mode: {exc}") from exc

    try:
        run = RunConfig(
            batch_capacity=run_section.get("batch_capacity", 3),
            max_extension_rounds=run_section.get("max_extension_rounds", 3),
            max_hops=run_section.get("max_hops", 3),
            fanout=run_section.get("fanout", 5),
            rng_seed=run_section.get("rng_seed", 0),
            difficulty=difficulty,
            judge=judge,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    endpoints_section = data.get("endpoints", {})
    endpoints = ModelEndpoints(
        core=_endpoint_from(endpoints_section.get("core", {}), EndpointRole.CORE),
        target=_endpoint_from(endpoints_section.get("target", {}), EndpointRole.TARGET),
        embedding=(
            _endpoint_from(endpoints_section["embedding"], EndpointRole.EMBEDDING)
            if "embedding" in endpoints_section
            else None
        ),
    )

    chunk_section = data.get("chunk_policy", {})
    try:
        chunk_policy = ChunkPolicy(
            target_chars=chunk_section.get("target_chars", 800),
            boundary=chunk_section.get("boundary", "paragraph"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return AppConfig(
        run=run,
        endpoints=endpoints,
        chunk_policy=chunk_policy,
        mock_script=data.get("gateway", {}).get("mock_script"),
        stop_entities_path=data.get("stop_entities"),
        validation_trials=data.get("validation", {}).get("trials", 1),
    )
