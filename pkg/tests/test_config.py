import json

import pytest
import yaml

from clarigate.backends import MockBackend, OpenAIChatBackend
from clarigate.config import (
    AppConfig,
    BackendConfig,
    PolicyConfig,
    ServiceConfig,
    build_backend,
    build_backends,
    load_config,
    resolve_auth_token,
)

FILE_CONFIG = {
    "service": {
        "host": "0.0.0.0",
        "port": 1111,
        "store_path": "/tmp/sessions.jsonl",
        "default_backend": "remote",
        "auth_token_env": "GATE_TOKEN",
    },
    "policy": {"max_rounds": 3},
    "backends": {
        "remote": {
            "kind": "openai",
            "base_url": "http://model-host:9000/v1",
            "model": "clarifier-large",
            "api_key_env": "REMOTE_KEY",
            "temperature": 0.2,
        }
    },
}


def _write(tmp_path, data):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


# --- layering -----------------------------------------------------------------


def test_defaults_without_any_source():
    config = load_config(env={})
    assert config.service == ServiceConfig()
    assert config.policy == PolicyConfig()
    assert config.backends == {}


def test_file_overrides_defaults(tmp_path):
    config = load_config(_write(tmp_path, FILE_CONFIG), env={})
    assert config.service.port == 1111
    assert config.service.host == "0.0.0.0"
    assert config.policy.max_rounds == 3
    assert config.policy.parse_retries == 2  # untouched default
    assert config.backends["remote"].model == "clarifier-large"
    assert config.backends["remote"].temperature == 0.2


def test_env_overrides_file(tmp_path):
    env = {"CLARIGATE_PORT": "2222", "CLARIGATE_MAX_ROUNDS": "4"}
    config = load_config(_write(tmp_path, FILE_CONFIG), env=env)
    assert config.service.port == 2222
    assert config.policy.max_rounds == 4
    assert config.service.host == "0.0.0.0"  # file value survives


def test_explicit_overrides_beat_env_and_file(tmp_path):
    env = {"CLARIGATE_PORT": "2222"}
    config = load_config(
        _write(tmp_path, FILE_CONFIG),
        env=env,
        overrides={"service": {"port": 3333}, "policy": {"max_rounds": 2}},
    )
    assert config.service.port == 3333
    assert config.policy.max_rounds == 2


def test_env_values_are_cast():
    config = load_config(env={"CLARIGATE_SNAPSHOT_EVERY": "7", "CLARIGATE_PORT": "90"})
    assert config.service.snapshot_every == 7
    assert isinstance(config.service.port, int)


def test_irrelevant_env_vars_are_ignored():
    config = load_config(env={"CLARIGATE_UNRELATED": "x", "PATH": "/bin"})
    assert config.service == ServiceConfig()


# --- validation ----------------------------------------------------------------


def test_unknown_file_keys_rejected(tmp_path):
    bad = {"service": {"prot": 1}}
    with pytest.raises(ValueError, match="unknown service keys: prot"):
        load_config(_write(tmp_path, bad), env={})
    with pytest.raises(ValueError, match="unknown config sections"):
        load_config(_write(tmp_path, {"sevrice": {}}), env={})
    with pytest.raises(ValueError, match="unknown keys for backend"):
        load_config(_write(tmp_path, {"backends": {"b": {"modle": "x"}}}), env={})


def test_unknown_override_section_rejected():
    with pytest.raises(ValueError, match="unknown override sections"):
        load_config(env={}, overrides={"backends": {}})


def test_default_backend_must_exist(tmp_path):
    bad = {
        "service": {"default_backend": "ghost"},
        "backends": {"real": {"kind": "openai"}},
    }
    with pytest.raises(ValueError, match="ghost"):
        load_config(_write(tmp_path, bad), env={})


def test_backendless_config_allows_any_default_name():
    config = load_config(env={"CLARIGATE_DEFAULT_BACKEND": "whatever"})
    assert config.service.default_backend == "whatever"


def test_backend_config_validation():
    with pytest.raises(ValueError, match="kind"):
        BackendConfig(name="x", kind="carrier-pigeon")
    with pytest.raises(ValueError, match="script_path"):
        BackendConfig(name="x", kind="mock")


def test_non_mapping_config_file_rejected(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("- just\n- a list\n", encoding="utf-8")
    with pytest.raises(ValueError, match="mapping"):
        load_config(path, env={})


def test_empty_config_file_is_fine(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("", encoding="utf-8")
    assert load_config(path, env={}) == AppConfig()


# --- backend construction ----------------------------------------------------------


def test_build_openai_backend_reads_key_from_env():
    cfg = BackendConfig(
        name="remote",
        kind="openai",
        base_url="http://model-host:9000/v1/",
        model="m",
        api_key_env="REMOTE_KEY",
        tool_mode="emulate",
        timeout=5.0,
        max_retries=1,
        max_in_flight=2,
        temperature=0.1,
    )
    backend = build_backend(cfg, env={"REMOTE_KEY": "sk-secret"})
    assert isinstance(backend, OpenAIChatBackend)
    assert backend.api_key == "sk-secret"
    assert backend.base_url == "http://model-host:9000/v1"
    assert backend.tool_mode == "emulate"
    assert backend.default_params.temperature == 0.1
    assert backend.max_in_flight == 2

    keyless = build_backend(cfg, env={})
    assert keyless.api_key is None


def test_build_mock_backend_loads_script(tmp_path):
    script = tmp_path / "script.json"
    script.write_text(json.dumps(["hello there"]), encoding="utf-8")
    cfg = BackendConfig(name="mock", kind="mock", script_path=str(script))
    backend = build_backend(cfg, env={})
    assert isinstance(backend, MockBackend)
    assert backend.remaining() == 1


def test_build_backends_maps_names(tmp_path):
    config = load_config(_write(tmp_path, FILE_CONFIG), env={})
    backends = build_backends(config, env={})
    assert set(backends) == {"remote"}
    assert isinstance(backends["remote"], OpenAIChatBackend)


# --- secrets --------------------------------------------------------------------


def test_auth_token_resolved_through_env_indirection(tmp_path):
    config = load_config(_write(tmp_path, FILE_CONFIG), env={})
    assert resolve_auth_token(config, env={"GATE_TOKEN": "tok-1"}) == "tok-1"
    assert resolve_auth_token(config, env={}) is None
    assert resolve_auth_token(AppConfig(), env={"GATE_TOKEN": "tok-1"}) is None


def test_config_file_never_holds_secrets(tmp_path):
    # the file names environment variables; the values stay out of it
    text = yaml.safe_dump(FILE_CONFIG)
    assert "REMOTE_KEY" in text and "sk-" not in text
