"""Configuration: YAML file, environment variables, and explicit overrides.

Precedence, lowest to highest: built-in defaults, the config file, the
``CLARIGATE_*`` environment variables, then explicit overrides (CLI flags).
Secrets never live in the file — backends name the environment variable that
holds their API key, and the service bearer token is read the same way.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import yaml

from .backends import (
    ChatBackend,
    GenerationParams,
    MockBackend,
    OpenAIChatBackend,
    load_script,
)

BACKEND_KINDS = ("openai", "mock")

# Environment overrides: variable name -> (section, key, caster).
_ENV_MAP = {
    "CLARIGATE_HOST": ("service", "host", str),
    "CLARIGATE_PORT": ("service", "port", int),
    "CLARIGATE_STORE_PATH": ("service", "store_path", str),
    "CLARIGATE_SNAPSHOT_EVERY": ("service", "snapshot_every", int),
    "CLARIGATE_DEFAULT_BACKEND": ("service", "default_backend", str),
    "CLARIGATE_MAX_ROUNDS": ("policy", "max_rounds", int),
}


@dataclass(frozen=True)
class BackendConfig:
    """One named backend the CLI and service can route sessions to."""

    name: str
    kind: str = "openai"
    base_url: str = "http://127.0.0.1:8000/v1"
    model: str = "clarifier"
    api_key_env: str | None = None
    tool_mode: str = "native"
    timeout: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4
    temperature: float = 0.7
    top_p: float = 0.9
    max_tokens: int = 2048
    script_path: str | None = None  # mock backends only

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"backend kind must be one of {BACKEND_KINDS}")
        if self.kind == "mock" and not self.script_path:
            raise ValueError(f"mock backend {self.name!r} needs a script_path")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    store_path: str | None = None
    snapshot_every: int = 20
    default_backend: str = "main"
    auth_token_env: str | None = None


@dataclass(frozen=True)
class PolicyConfig:
    max_rounds: int = 5
    force_summary_at_cap: bool = True
    parse_retries: int = 2


@dataclass(frozen=True)
class AppConfig:
    service: ServiceConfig = field(default_factory=ServiceConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    backends: dict[str, BackendConfig] = field(default_factory=dict)

    def __post_init__(self):
        if self.backends and self.service.default_backend not in self.backends:
            raise ValueError(
                f"default backend {self.service.default_backend!r} is not configured"
            )


def _apply_section(instance, raw: Mapping, section: str):
    known = set(instance.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"unknown {section} keys: {', '.join(unknown)}")
    return replace(instance, **raw)


def _parse_backends(raw: Mapping) -> dict[str, BackendConfig]:
    backends = {}
    for name, entry in raw.items():
        if not isinstance(entry, Mapping):
            raise ValueError(f"backend {name!r} must be a mapping")
        known = set(BackendConfig.__dataclass_fields__) - {"name"}
        unknown = sorted(set(entry) - known)
        if unknown:
            raise ValueError(f"unknown keys for backend {name!r}: {', '.join(unknown)}")
        backends[name] = BackendConfig(name=name, **entry)
    return backends


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Mapping] | None = None,
) -> AppConfig:
    """Assemble the effective configuration.

    ``overrides`` uses the same two-level shape as the file
    (``{"service": {"port": 9}}``) and wins over everything.
    """
    env = os.environ if env is None else env
    service = ServiceConfig()
    policy = PolicyConfig()
    backends: dict[str, BackendConfig] = {}

    if path is not None:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(raw, Mapping):
            raise ValueError("config file must hold a mapping at the top level")
        unknown = sorted(set(raw) - {"service", "policy", "backends"})
        if unknown:
            raise ValueError(f"unknown config sections: {', '.join(unknown)}")
        if "service" in raw:
            service = _apply_section(service, raw["service"], "service")
        if "policy" in raw:
            policy = _apply_section(policy, raw["policy"], "policy")
        if "backends" in raw:
            backends = _parse_backends(raw["backends"])

    sections = {"service": {}, "policy": {}}
    for var, (section, key, cast) in _ENV_MAP.items():
        if var in env:
            sections[section][key] = cast(env[var])
    if sections["service"]:
        service = _apply_section(service, sections["service"], "service")
    if sections["policy"]:
        policy = _apply_section(policy, sections["policy"], "policy")

    overrides = overrides or {}
    unknown = sorted(set(overrides) - {"service", "policy"})
    if unknown:
        raise ValueError(f"unknown override sections: {', '.join(unknown)}")
    if overrides.get("service"):
        service = _apply_section(service, overrides["service"], "service")
    if overrides.get("policy"):
        policy = _apply_section(policy, overrides["policy"], "policy")

    return AppConfig(service=service, policy=policy, backends=backends)


def build_backend(cfg: BackendConfig, env: Mapping[str, str] | None = None) -> ChatBackend:
    """Instantiate the backend a config entry describes."""
    env = os.environ if env is None else env
    params = GenerationParams(
        temperature=cfg.temperature, top_p=cfg.top_p, max_tokens=cfg.max_tokens
    )
    if cfg.kind == "mock":
        return MockBackend(load_script(cfg.script_path), params=params)
    api_key = env.get(cfg.api_key_env) if cfg.api_key_env else None
    return OpenAIChatBackend(
        base_url=cfg.base_url,
        model=cfg.model,
        api_key=api_key,
        params=params,
        timeout=cfg.timeout,
        max_retries=cfg.max_retries,
        max_in_flight=cfg.max_in_flight,
        tool_mode=cfg.tool_mode,
    )


def build_backends(
    config: AppConfig, env: Mapping[str, str] | None = None
) -> dict[str, ChatBackend]:
    return {name: build_backend(cfg, env) for name, cfg in config.backends.items()}


def resolve_auth_token(
    config: AppConfig, env: Mapping[str, str] | None = None
) -> str | None:
    env = os.environ if env is None else env
    if config.service.auth_token_env:
        return env.get(config.service.auth_token_env) or None
    return None
