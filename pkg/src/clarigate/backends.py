"""Chat backends: an OpenAI-compatible HTTP client and a scripted mock.

Both expose the same two calls:

* ``complete(messages, params)`` -> assistant :class:`ChatMessage`
* ``complete_structured(messages, tool, params)`` -> validated argument dict

Structured output uses native function calling when the server supports it;
otherwise (``tool_mode="emulate"``, and always for the mock's text entries)
the model is instructed to answer with a single fenced JSON block which is
then parsed and validated.  Either way a response that fails schema
validation triggers exactly one corrective re-prompt before giving up.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import jsonschema
import requests

from .errors import (
    AuthError,
    BackendError,
    BackendTimeoutError,
    MalformedResponseError,
    RateLimitError,
    StructuredOutputError,
)

logger = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant", "tool")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not self.content and self.role != "tool":
            raise ValueError("content may be empty only for tool messages")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    top_p: float = 0.9
    max_tokens: int = 2048

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature out of range")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p out of range")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


def _check_schema_node(node, path: str) -> None:
    if isinstance(node, dict):
        if "required" in node:
            props = node.get("properties", {})
            missing = [r for r in node["required"] if r not in props]
            if missing:
                raise ValueError(f"{path}: required fields {missing} not declared in properties")
        if "enum" in node and not node["enum"]:
            raise ValueError(f"{path}: enum must not be empty")
        for key, child in node.items():
            _check_schema_node(child, f"{path}.{key}")
    elif isinstance(node, list):
        for i, child in enumerate(node):
            _check_schema_node(child, f"{path}[{i}]")


@dataclass(frozen=True)
class ToolSchema:
    """A function tool: name, description and a JSON-schema parameter object."""

    name: str
    description: str
    parameters: dict

    def __post_init__(self):
        if not self.name:
            raise ValueError("tool name must be non-empty")
        jsonschema.Draft7Validator.check_schema(self.parameters)
        _check_schema_node(self.parameters, self.name)

    @classmethod
    def from_dict(cls, raw: dict) -> "ToolSchema":
        return cls(
            name=raw["name"],
            description=raw.get("description", ""),
            parameters=raw["parameters"],
        )

    def validation_errors(self, arguments) -> list[str]:
        validator = jsonschema.Draft7Validator(self.parameters)
        errors = []
        for err in validator.iter_errors(arguments):
            where = "/".join(str(p) for p in err.absolute_path) or "(root)"
            errors.append(f"{where}: {err.message}")
        return sorted(errors)


_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.S)


def extract_json_payload(text: str):
    """Pull a JSON value out of model text: fenced block first, then raw."""
    m = _FENCE_RE.search(text)
    candidates = []
    if m:
        candidates.append(m.group(1))
    candidates.append(text.strip())
    for candidate in candidates:
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            continue
    raise ValueError("no JSON payload found in model output")


def _structured_instruction(tool: ToolSchema) -> ChatMessage:
    return ChatMessage(
        role="user",
        content=(
            f"Respond by calling the tool {tool.name!r}: {tool.description}\n"
            "Reply with a single fenced ```json code block containing only the "
            "arguments object, matching this JSON schema:\n"
            f"```json\n{json.dumps(tool.parameters, indent=2)}\n```"
        ),
    )


def _corrective_message(tool: ToolSchema, errors: Sequence[str]) -> ChatMessage:
    listed = "\n".join(f"- {e}" for e in errors)
    return ChatMessage(
        role="user",
        content=(
            f"The arguments did not match the {tool.name!r} schema:\n{listed}\n"
            "Reply again with a single fenced ```json block containing only the "
            "corrected arguments object."
        ),
    )


class ChatBackend:
    """Interface shared by the HTTP client and the mock.

    Subclasses implement :meth:`complete`; the structured-call machinery
    (instruct -> parse -> validate -> one corrective re-prompt) lives here.
    """

    default_params: GenerationParams = GenerationParams()
    #: retries consumed by the most recent complete() call
    last_retry_count: int = 0

    def complete(
        self, messages: Sequence[ChatMessage], params: GenerationParams | None = None
    ) -> ChatMessage:
        raise NotImplementedError

    def complete_structured(
        self,
        messages: Sequence[ChatMessage],
        tool: ToolSchema,
        params: GenerationParams | None = None,
    ) -> dict:
        """Ask for tool arguments and validate them against the schema."""
        convo = list(messages) + [_structured_instruction(tool)]
        reply = self.complete(convo, params)
        arguments, errors = self._parse_arguments(reply.content, tool)
        if not errors:
            return arguments
        logger.info("structured output failed validation, re-prompting once: %s", errors)
        convo += [reply, _corrective_message(tool, errors)]
        reply = self.complete(convo, params)
        arguments, errors = self._parse_arguments(reply.content, tool)
        if errors:
            raise StructuredOutputError(
                f"tool {tool.name!r} arguments failed validation after re-prompt: "
                + "; ".join(errors),
                raw_text=reply.content,
            )
        return arguments

    @staticmethod
    def _parse_arguments(text: str, tool: ToolSchema) -> tuple[dict | None, list[str]]:
        try:
            payload = extract_json_payload(text)
        except ValueError as exc:
            return None, [str(exc)]
        if not isinstance(payload, dict):
            return None, ["arguments must be a JSON object"]
        errors = tool.validation_errors(payload)
        return (payload, errors) if not errors else (None, errors)


def _run_with_retries(
    attempt: Callable[[], ChatMessage],
    max_retries: int,
    backoff_base: float,
) -> tuple[ChatMessage, int]:
    retries = 0
    while True:
        try:
            return attempt(), retries
        except BackendError as exc:
            if not exc.retryable or retries >= max_retries:
                raise
            delay = backoff_base * (2**retries)
            logger.warning("backend error (%s), retry %d in %.2fs", exc, retries + 1, delay)
            if delay > 0:
                time.sleep(delay)
            retries += 1


class OpenAIChatBackend(ChatBackend):
    """Client for any server speaking the ``/chat/completions`` protocol.

    Transient failures (rate limits, timeouts, 5xx) are retried with
    exponential backoff; auth failures and malformed responses are not.
    At most ``max_in_flight`` HTTP requests run concurrently per instance.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        params: GenerationParams | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        max_in_flight: int = 4,
        tool_mode: str = "native",
        session: requests.Session | None = None,
    ):
        if tool_mode not in ("native", "emulate"):
            raise ValueError("tool_mode must be 'native' or 'emulate'")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.default_params = params or GenerationParams()
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.max_in_flight = max_in_flight
        self.tool_mode = tool_mode
        self._session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.last_retry_count = 0

    # -- wire helpers -----------------------------------------------------

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _payload(self, messages: Sequence[ChatMessage], params: GenerationParams) -> dict:
        return {
            "model": self.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }

    def _post(self, payload: dict) -> dict:
        with self._slots:
            try:
                response = self._session.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=self._headers(),
                    timeout=self.timeout,
                )
            except requests.Timeout as exc:
                raise BackendTimeoutError(f"request timed out after {self.timeout}s") from exc
            except requests.ConnectionError as exc:
                raise BackendTimeoutError(f"connection failed: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthError(f"authentication rejected (HTTP {response.status_code})")
        if response.status_code == 429:
            raise RateLimitError("rate limited (HTTP 429)")
        if response.status_code >= 500:
            raise RateLimitError(f"server error (HTTP {response.status_code})")
        if response.status_code != 200:
            raise BackendError(f"unexpected HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()
        except ValueError as exc:
            raise MalformedResponseError("response body is not JSON") from exc

    @staticmethod
    def _message_of(data: dict) -> dict:
        try:
            return data["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"response missing choices/message: {data!r:.200}") from exc

    # -- public calls -----------------------------------------------------

    def complete(
        self, messages: Sequence[ChatMessage], params: GenerationParams | None = None
    ) -> ChatMessage:
        payload = self._payload(messages, params or self.default_params)

        def attempt() -> ChatMessage:
            message = self._message_of(self._post(payload))
            content = message.get("content")
            if not content:
                raise MalformedResponseError("backend returned empty content")
            return ChatMessage(role="assistant", content=content)

        reply, self.last_retry_count = _run_with_retries(
            attempt, self.max_retries, self.backoff_base
        )
        return reply

    def complete_structured(
        self,
        messages: Sequence[ChatMessage],
        tool: ToolSchema,
        params: GenerationParams | None = None,
    ) -> dict:
        if self.tool_mode == "emulate":
            return super().complete_structured(messages, tool, params)

        payload = self._payload(messages, params or self.default_params)
        payload["tools"] = [
            {
                "type": "function",
                "function": {
                    "name": tool.name,
                    "description": tool.description,
                    "parameters": tool.parameters,
                },
            }
        ]
        payload["tool_choice"] = {"type": "function", "function": {"name": tool.name}}

        def call() -> str:
            def attempt() -> ChatMessage:
                message = self._message_of(self._post(payload))
                calls = message.get("tool_calls") or []
                if calls:
                    raw = calls[0].get("function", {}).get("arguments")
                    if raw is None:
                        raise MalformedResponseError("tool call without arguments")
                    return ChatMessage(role="assistant", content=raw)
                if message.get("content"):
                    return ChatMessage(role="assistant", content=message["content"])
                raise MalformedResponseError("response has neither tool call nor content")

            reply, self.last_retry_count = _run_with_retries(
                attempt, self.max_retries, self.backoff_base
            )
            return reply.content

        raw = call()
        arguments, errors = self._parse_arguments(raw, tool)
        if not errors:
            return arguments
        logger.info("native tool call failed validation, re-prompting once: %s", errors)
        payload["messages"] = payload["messages"] + [
            {"role": "assistant", "content": raw},
            _corrective_message(tool, errors).to_dict(),
        ]
        raw = call()
        arguments, errors = self._parse_arguments(raw, tool)
        if errors:
            raise StructuredOutputError(
                f"tool {tool.name!r} arguments failed validation after re-prompt: "
                + "; ".join(errors),
                raw_text=raw,
            )
        return arguments


@dataclass(frozen=True)
class ScriptedError:
    """A scripted backend failure; ``kind`` picks the exception."""

    kind: str  # rate_limit | timeout | auth | malformed

    _EXCEPTIONS = {
        "rate_limit": RateLimitError,
        "timeout": BackendTimeoutError,
        "auth": AuthError,
        "malformed": MalformedResponseError,
    }

    def __post_init__(self):
        if self.kind not in self._EXCEPTIONS:
            raise ValueError(f"unknown scripted error kind {self.kind!r}")

    def raise_(self):
        raise self._EXCEPTIONS[self.kind](f"scripted {self.kind} error")


class MockBackend(ChatBackend):
    """Deterministic backend that replays a fixed script.

    Script entries are consumed strictly in order, one per model call:
    strings become assistant text, dicts become tool arguments (rendered as
    a fenced JSON block when a plain completion is requested), and
    :class:`ScriptedError` entries raise.  Retryable scripted errors are
    retried against the next entry, mirroring the HTTP client's loop.
    Exhausting the script raises ``RuntimeError`` — it means the test or
    demo asked for more turns than were scripted.
    """

    def __init__(
        self,
        script: Sequence,
        params: GenerationParams | None = None,
        max_retries: int = 3,
    ):
        self.default_params = params or GenerationParams()
        self.max_retries = max_retries
        self._queue = deque(script)
        self._lock = threading.Lock()
        self.calls: list[list[ChatMessage]] = []
        self.last_retry_count = 0

    def remaining(self) -> int:
        return len(self._queue)

    def _next_entry(self, messages: Sequence[ChatMessage]):
        with self._lock:
            self.calls.append(list(messages))
            if not self._queue:
                raise RuntimeError("mock backend script exhausted")
            return self._queue.popleft()

    def complete(
        self, messages: Sequence[ChatMessage], params: GenerationParams | None = None
    ) -> ChatMessage:
        def attempt() -> ChatMessage:
            entry = self._next_entry(messages)
            if isinstance(entry, ScriptedError):
                entry.raise_()
            if isinstance(entry, dict):
                body = json.dumps(entry, ensure_ascii=False, indent=2)
                return ChatMessage(role="assistant", content=f"```json\n{body}\n```")
            return ChatMessage(role="assistant", content=str(entry))

        reply, self.last_retry_count = _run_with_retries(attempt, self.max_retries, 0.0)
        return reply


def load_script(path: str | Path) -> list:
    """Read a mock script from a JSON file.

    The file holds a list: strings are text replies, objects are tool
    arguments, and ``{"$error": "rate_limit"}`` style objects raise the
    corresponding scripted failure.
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError("mock script file must hold a JSON list")
    entries = []
    for item in raw:
        if isinstance(item, dict) and "$error" in item:
            entries.append(ScriptedError(kind=item["$error"]))
        else:
            entries.append(item)
    return entries
