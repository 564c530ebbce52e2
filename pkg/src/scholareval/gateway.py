"""Uniform access to text-generation backends.

Two backend kinds exist: a remote chat-completion API and a deterministic
fixture-replay store keyed by a content digest of the rendered prompt.
Replay transcripts are line-delimited JSON records ``{"digest", "response"}``.
"""

from __future__ import annotations

import ast
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

import requests

from .errors import (
    BackendUnavailableError,
    FixtureMissError,
    FormatError,
    StructuredParseError,
    TemplateError,
    ValidationError,
)

_PLACEHOLDER_RE = re.compile(r"\{([a-z_][a-z0-9_]*)\}")
_FENCE_RE = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.DOTALL)
_TRAILING_COMMA_RE = re.compile(r",(\s*[}\]])")
_CURLY_QUOTES = {"“": '"', "”": '"', "‘": "'", "’": "'"}

DEFAULT_API_KEY_ENV = "SCHOLAREVAL_LLM_API_KEY"


class OutputShape(str, Enum):
    PYTHON_LIST_BLOCK = "python_list_block"
    JSON_BLOCK = "json_block"
    JSONL_BLOCK = "jsonl_block"
    FREE_TEXT = "free_text"


class BackendKind(str, Enum):
    REMOTE_CHAT_API = "remote_chat_api"
    FIXTURE_REPLAY = "fixture_replay"


@dataclass(frozen=True)
class PromptTemplate:
    """A named template with ``{placeholder}`` slots and a declared output shape.

    Only ``{lower_snake_case}`` tokens are placeholders; JSON braces in the
    template body pass through substitution untouched.
    """

    name: str
    text: str
    output_shape: OutputShape = OutputShape.FREE_TEXT

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER_RE.findall(self.text))


def render_prompt(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute every placeholder exactly; no other transformation."""
    missing = sorted(template.placeholders - set(bindings))
    if missing:
        raise TemplateError(
            f"template {template.name!r} missing binding for placeholder {missing[0]!r}"
        )

    def _sub(match: re.Match) -> str:
        return str(bindings[match.group(1)])

    return _PLACEHOLDER_RE.sub(_sub, template.text)


@dataclass(frozen=True)
class BackendDescriptor:
    """Identity and policy for one text-generation backend."""

    kind: BackendKind
    model: str
    timeout: float = 120.0
    max_retries: int = 3
    temperature: float = 0.0
    max_tokens: Optional[int] = None
    base_url: Optional[str] = None
    api_key_env: str = DEFAULT_API_KEY_ENV
    transcript_path: Optional[str] = None
    max_in_flight: int = 8

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValidationError("backend timeout must be > 0")
        if self.max_retries < 0:
            raise ValidationError("backend max_retries must be >= 0")
        if self.kind is BackendKind.FIXTURE_REPLAY and not self.transcript_path:
            raise ValidationError("fixture_replay backend needs a transcript_path")

    @property
    def identity(self) -> str:
        return f"{self.kind.value}:{self.model}"

    def sampling_parameters(self) -> dict[str, Any]:
        params: dict[str, Any] = {"temperature": self.temperature}
        if self.max_tokens is not None:
            params["max_tokens"] = self.max_tokens
        return params


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class FixtureStore:
    """Replay store mapping prompt digests to recorded responses.

    Read-only during runs. A ``responder`` may be supplied only when building
    transcripts: misses are then answered by the responder and appended to the
    backing file.
    """

    def __init__(self, path: str | Path, responder: Optional[Callable[[str], str]] = None):
        self._path = Path(path)
        self._responder = responder
        self._lock = threading.Lock()
        self._responses: dict[str, str] = {}
        if self._path.exists():
            with self._path.open(encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    self._responses[record["digest"]] = record["response"]
        elif responder is None:
            raise FileNotFoundError(f"fixture transcript not found: {self._path}")

    def __len__(self) -> int:
        return len(self._responses)

    def get(self, digest: str, prompt: Optional[str] = None) -> str:
        with self._lock:
            if digest in self._responses:
                return self._responses[digest]
            if self._responder is not None and prompt is not None:
                response = self._responder(prompt)
                self._responses[digest] = response
                with self._path.open("a", encoding="utf-8") as handle:
                    handle.write(
                        json.dumps({"digest": digest, "response": response}) + "\n"
                    )
                return response
        raise FixtureMissError(digest)


PromptListener = Callable[[str, str, str], None]


class LlmGateway:
    """Thread-safe front door for all prompt completions.

    A per-backend semaphore bounds in-flight remote requests; retries use
    exponential backoff via an injectable sleeper so tests stay instant.
    """

    def __init__(
        self,
        session: Optional[requests.Session] = None,
        sleeper: Callable[[float], None] = time.sleep,
        backoff_base: float = 1.0,
        fixture_responder: Optional[Callable[[str], str]] = None,
    ):
        self._session = session or requests.Session()
        self._sleeper = sleeper
        self._backoff_base = backoff_base
        self._fixture_responder = fixture_responder
        self._stores: dict[str, FixtureStore] = {}
        self._gates: dict[str, threading.BoundedSemaphore] = {}
        self._lock = threading.Lock()
        self._listeners: list[PromptListener] = []

    def add_prompt_listener(self, listener: PromptListener) -> None:
        """Listener receives (tag, backend identity, prompt) for every call."""
        self._listeners.append(listener)

    def complete(self, backend: BackendDescriptor, prompt: str, tag: str = "") -> str:
        if not prompt or not prompt.strip():
            raise ValidationError("prompt must be non-empty")
        for listener in self._listeners:
            listener(tag, backend.identity, prompt)
        if backend.kind is BackendKind.FIXTURE_REPLAY:
            return self._fixture_store(backend).get(prompt_digest(prompt), prompt)
        return self._complete_remote(backend, prompt)

    def _fixture_store(self, backend: BackendDescriptor) -> FixtureStore:
        with self._lock:
            store = self._stores.get(backend.transcript_path)
            if store is None:
                store = FixtureStore(backend.transcript_path, self._fixture_responder)
                self._stores[backend.transcript_path] = store
            return store

    def _gate(self, backend: BackendDescriptor) -> threading.BoundedSemaphore:
        with self._lock:
            gate = self._gates.get(backend.identity)
            if gate is None:
                gate = threading.BoundedSemaphore(backend.max_in_flight)
                self._gates[backend.identity] = gate
            return gate

    def _complete_remote(self, backend: BackendDescriptor, prompt: str) -> str:
        if not backend.base_url:
            raise ValidationError("remote backend needs a base_url")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(backend.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": backend.model,
            "messages": [{"role": "user", "content": prompt}],
            **backend.sampling_parameters(),
        }
        last_error: Optional[str] = None
        with self._gate(backend):
            for attempt in range(backend.max_retries + 1):
                try:
                    response = self._session.post(
                        backend.base_url,
                        json=payload,
                        headers=headers,
                        timeout=backend.timeout,
                    )
                except requests.RequestException as exc:
                    last_error = str(exc)
                else:
                    if response.status_code == 200:
                        body = response.json()
                        return body["choices"][0]["message"]["content"]
                    if response.status_code not in (429,) and response.status_code < 500:
                        raise BackendUnavailableError(
                            f"backend {backend.identity} rejected request: "
                            f"HTTP {response.status_code}"
                        )
                    last_error = f"HTTP {response.status_code}"
                if attempt < backend.max_retries:
                    self._sleeper(self._backoff_base * (2**attempt))
        raise BackendUnavailableError(
            f"backend {backend.identity} unavailable after "
            f"{backend.max_retries} retries: {last_error}"
        )


def _repair(block: str) -> str:
    for curly, straight in _CURLY_QUOTES.items():
        block = block.replace(curly, straight)
    return _TRAILING_COMMA_RE.sub(r"\1", block)


def _fenced_candidates(raw: str, tags: tuple[str, ...]) -> list[str]:
    tagged: list[str] = []
    untagged: list[str] = []
    for match in _FENCE_RE.finditer(raw):
        tag, body = match.group(1).lower(), match.group(2)
        if tag in tags:
            tagged.append(body)
        elif not tag:
            untagged.append(body)
    return tagged + untagged


def _parse_python_list(body: str) -> list:
    stripped = body.strip()
    try:
        value = ast.literal_eval(stripped)
        if isinstance(value, list):
            return value
    except (ValueError, SyntaxError):
        pass
    match = re.search(r"=\s*(\[.*\])", stripped, re.DOTALL)
    if match:
        value = ast.literal_eval(match.group(1))
        if isinstance(value, list):
            return value
    raise ValueError("no list literal in block")


def extract_structured(raw: str, shape: OutputShape) -> Any:
    """Locate and parse the first fenced block of the expected kind.

    Bounded repair (trailing commas, quote normalization) is applied before
    failing; anything else fails loudly rather than being silently rewritten.
    """
    if shape is OutputShape.FREE_TEXT:
        raise ValidationError("free_text has no structure to extract")
    tags = {
        OutputShape.PYTHON_LIST_BLOCK: ("python", "py"),
        OutputShape.JSON_BLOCK: ("json",),
        OutputShape.JSONL_BLOCK: ("jsonl", "json"),
    }[shape]
    candidates = _fenced_candidates(raw, tags)
    if not candidates:
        raise FormatError(f"no fenced {shape.value} found in backend output")
    last_excerpt = ""
    for body in candidates:
        try:
            if shape is OutputShape.PYTHON_LIST_BLOCK:
                return _parse_python_list(_repair(body))
            if shape is OutputShape.JSON_BLOCK:
                return json.loads(_repair(body))
            return [
                json.loads(_repair(line))
                for line in body.splitlines()
                if line.strip()
            ]
        except (ValueError, SyntaxError):
            last_excerpt = body.strip()[:200]
    raise StructuredParseError(
        f"unparseable {shape.value} after repair; offending excerpt: {last_excerpt!r}"
    )
