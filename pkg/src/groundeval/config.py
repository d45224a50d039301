"""Engine configuration: defaults, config file, environment, CLI flags.

Precedence (lowest to highest): built-in defaults < config file < GROUNDEVAL_*
environment variables < explicit CLI flags. The defaults are the published
operating point: weights (1, 1, 2), tau 0.80, top-3, groups of 8, 95% CIs
from 1000 bootstrap resamples.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .backends import HttpScorerBackend, MockBackend, ScorerBackend
from .errors import InputError
from .metrics import EvalOptions
from .rewards import RewardWeights

ENV_PREFIX = "GROUNDEVAL_"


@dataclass
class EngineConfig:
    domain: str = "medical"
    w_format: float = 1.0
    w_correct: float = 1.0
    w_ground: float = 2.0
    tau: float = 0.80
    top_k: int = 3
    group_size: int = 8
    sigma_floor: float = 1e-8
    grounded_threshold: float = 0.5
    contradicted_threshold: float = -0.5
    bootstrap_resamples: int = 1000
    bootstrap_level: float = 0.95
    seed: int = 42
    strict_parse: bool = False
    include_label_in_hypothesis: bool = False
    matcher: str = "embedding"
    cluster_threshold: float = 0.85
    sc_top_n: int = 5
    chunk_size: int = 320
    chunk_overlap: int = 64
    backend_url: str | None = None
    backend_token: str | None = None
    mock: bool = False
    mock_seed: int = 0

    @property
    def weights(self) -> RewardWeights:
        return RewardWeights(self.w_format, self.w_correct, self.w_ground)

    def eval_options(self) -> EvalOptions:
        return EvalOptions(
            k=self.top_k,
            tau=self.tau,
            matcher=self.matcher,
            grounded_threshold=self.grounded_threshold,
            contradicted_threshold=self.contradicted_threshold,
            bootstrap_resamples=self.bootstrap_resamples,
            bootstrap_level=self.bootstrap_level,
            seed=self.seed,
            include_label_in_hypothesis=self.include_label_in_hypothesis,
        )

    def updated(self, overrides: Mapping[str, Any]) -> "EngineConfig":
        """Copy with a validated subset of fields replaced."""
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise InputError(f"unknown config fields: {sorted(unknown)}")
        return dataclasses.replace(self, **_coerced(overrides))


def load_config(path: str | Path | None = None,
                env: Mapping[str, str] | None = None,
                flags: Mapping[str, Any] | None = None) -> EngineConfig:
    """Merge config sources in precedence order."""
    config = EngineConfig()
    if path is not None:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config file is not valid JSON: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise InputError("config file must hold a JSON object")
        config = config.updated(payload)
    config = config.updated(_from_env(env if env is not None else os.environ))
    if flags:
        config = config.updated({k: v for k, v in flags.items() if v is not None})
    return config


def make_backend(config: EngineConfig) -> ScorerBackend:
    if config.mock or not config.backend_url:
        return MockBackend(seed=config.mock_seed)
    return HttpScorerBackend(config.backend_url, token=config.backend_token)


def _from_env(env: Mapping[str, str]) -> dict[str, Any]:
    field_names = {f.name for f in dataclasses.fields(EngineConfig)}
    overrides = {}
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in field_names:
            overrides[name] = value
    return overrides


def _coerced(overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Coerce string values (env vars, JSON) to each field's declared type."""
    types = {f.name: f.type for f in dataclasses.fields(EngineConfig)}
    result: dict[str, Any] = {}
    for name, value in overrides.items():
        declared = types[name]
        try:
            if isinstance(value, str) and declared in ("int",):
                value = int(value)
            elif isinstance(value, str) and declared in ("float",):
                value = float(value)
            elif declared == "bool" and isinstance(value, str):
                value = value.strip().lower() in ("1", "true", "yes", "on")
            elif declared == "bool":
                value = bool(value)
        except ValueError as exc:
            raise InputError(f"config field {name!r}: {exc}") from exc
        result[name] = value
    return result
