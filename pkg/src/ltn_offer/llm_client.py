"""JSON-over-HTTP client for chat-completion endpoints.

complete_json() drives the retry protocol used by every extraction
method: up to max_attempts calls to the primary endpoint, then exactly
one call to the fallback endpoint if configured. After a parse or
validator failure the prompt gains one fixed corrective instruction;
every retry bumps the sampling seed by the attempt index so each attempt
has a distinct request hash (record/replay keys on that hash). Transport
errors consume an attempt without altering the prompt.

Every call (including failed attempts) is appended to the in-memory
transcript and, when a recorder path is set, to a JSONL transcript file
that ReplayTransport can serve back verbatim.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Protocol

import requests

from .errors import ExtractionError, ProtocolError, TransportError

CORRECTIVE_INSTRUCTION = (
    "Your previous output was not valid JSON matching the required schema. "
    "Output ONLY the JSON object."
)


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    model_name: str
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 60.0


@dataclass(frozen=True)
class CompletionRequest:
    system: str
    user: str
    seed: int = 0


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    finish_reason: str = "stop"


@dataclass(frozen=True)
class JsonCallPolicy:
    max_attempts: int = 3
    fallback: ModelEndpoint | None = None


@dataclass(frozen=True)
class TranscriptEntry:
    request_hash: str
    endpoint: str
    prompt: dict
    response: str
    attempt: int

    def to_json_dict(self) -> dict:
        return {
            "request_hash": self.request_hash,
            "endpoint": self.endpoint,
            "prompt": dict(self.prompt),
            "response": self.response,
            "attempt": self.attempt,
        }


def request_hash(endpoint: ModelEndpoint, request: CompletionRequest) -> str:
    payload = {
        "model": endpoint.model_name,
        "temperature": endpoint.temperature,
        "max_tokens": endpoint.max_tokens,
        "system": request.system,
        "user": request.user,
        "seed": request.seed,
    }
    canon = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class Transport(Protocol):
    def send(self, endpoint: ModelEndpoint, request: CompletionRequest) -> CompletionResponse:
        ...


class HttpTransport:
    """POSTs OpenAI-style chat completions to {base_url}/chat/completions."""

    def send(self, endpoint: ModelEndpoint, request: CompletionRequest) -> CompletionResponse:
        url = endpoint.base_url.rstrip("/") + "/chat/completions"
        body = {
            "model": endpoint.model_name,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": endpoint.temperature,
            "max_tokens": endpoint.max_tokens,
            "seed": request.seed,
        }
        try:
            resp = requests.post(url, json=body, timeout=endpoint.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc
        if resp.status_code // 100 != 2:
            raise ProtocolError(
                f"endpoint returned status {resp.status_code}", status=resp.status_code
            )
        try:
            payload = resp.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
            finish = choice.get("finish_reason", "stop")
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed completion payload: {exc}") from exc
        return CompletionResponse(text=text, finish_reason=finish)


class ReplayTransport:
    """Serves recorded responses keyed by request hash (last record wins)."""

    def __init__(self, transcript_path: str | Path):
        self._responses: dict[str, str] = {}
        path = Path(transcript_path)
        if not path.exists():
            raise TransportError(f"transcript file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                self._responses[entry["request_hash"]] = entry["response"]

    def send(self, endpoint: ModelEndpoint, request: CompletionRequest) -> CompletionResponse:
        key = request_hash(endpoint, request)
        if key not in self._responses:
            raise TransportError(f"no recorded response for request {key[:12]}...")
        return CompletionResponse(text=self._responses[key])


class StubTransport:
    """Scripted transport for tests: yields canned texts or raises exceptions."""

    def __init__(self, script: list[str | Exception] | Callable[[ModelEndpoint, CompletionRequest], str]):
        self._script = script
        self._cursor = 0
        self.calls: list[tuple[ModelEndpoint, CompletionRequest]] = []

    def send(self, endpoint: ModelEndpoint, request: CompletionRequest) -> CompletionResponse:
        self.calls.append((endpoint, request))
        if callable(self._script):
            return CompletionResponse(text=self._script(endpoint, request))
        if self._cursor >= len(self._script):
            raise TransportError("stub script exhausted")
        item = self._script[self._cursor]
        self._cursor += 1
        if isinstance(item, Exception):
            raise item
        return CompletionResponse(text=item)


class LlmClient:
    """Thread-safe wrapper adding transcripts, recording and the JSON protocol."""

    def __init__(self, transport: Transport, recorder_path: str | Path | None = None,
                 max_in_flight: int = 4):
        self._transport = transport
        self._recorder_path = Path(recorder_path) if recorder_path else None
        self._gate = threading.Semaphore(max_in_flight)
        self._lock = threading.Lock()
        self.transcript: list[TranscriptEntry] = []

    def complete(self, endpoint: ModelEndpoint, request: CompletionRequest,
                 attempt: int = 1) -> CompletionResponse:
        key = request_hash(endpoint, request)
        try:
            with self._gate:
                response = self._transport.send(endpoint, request)
        except TransportError as exc:
            self._record(key, endpoint, request, f"<error: {exc}>", attempt)
            raise
        self._record(key, endpoint, request, response.text, attempt)
        return response

    def _record(self, key: str, endpoint: ModelEndpoint, request: CompletionRequest,
                response_text: str, attempt: int) -> None:
        entry = TranscriptEntry(
            request_hash=key,
            endpoint=endpoint.model_name,
            prompt={"system": request.system, "user": request.user, "seed": request.seed},
            response=response_text,
            attempt=attempt,
        )
        with self._lock:
            self.transcript.append(entry)
            if self._recorder_path is not None:
                with open(self._recorder_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry.to_json_dict(), ensure_ascii=False) + "\n")

    def complete_json(self, endpoint: ModelEndpoint, request: CompletionRequest,
                      validator: Callable[[object], bool],
                      policy: JsonCallPolicy | None = None) -> object:
        """Parsed and validated JSON value, or ExtractionError after the budget."""
        policy = policy or JsonCallPolicy()
        if policy.max_attempts < 1:
            raise ExtractionError("max_attempts must be >= 1")
        attempts_raw: list[str] = []
        corrected = False

        for attempt in range(1, policy.max_attempts + 1):
            req = self._attempt_request(request, attempt, corrected)
            status, value = self._try_once(endpoint, req, validator, attempt, attempts_raw)
            if status == "ok":
                return value
            if status == "invalid":
                corrected = True

        if policy.fallback is not None:
            attempt = policy.max_attempts + 1
            req = self._attempt_request(request, attempt, corrected)
            status, value = self._try_once(policy.fallback, req, validator,
                                           attempt, attempts_raw)
            if status == "ok":
                return value

        raise ExtractionError(
            f"no valid JSON after {len(attempts_raw)} attempts", attempts=attempts_raw
        )

    @staticmethod
    def _attempt_request(request: CompletionRequest, attempt: int,
                         corrected: bool) -> CompletionRequest:
        user = request.user
        if corrected:
            user = user + "\n\n" + CORRECTIVE_INSTRUCTION
        # distinct sampling seed per attempt keeps request hashes unique
        return replace(request, user=user, seed=request.seed + attempt - 1)

    def _try_once(self, endpoint, request, validator, attempt, attempts_raw):
        """One call; returns ('ok', value), ('invalid', None) or ('transport', None)."""
        try:
            response = self.complete(endpoint, request, attempt=attempt)
        except TransportError as exc:
            attempts_raw.append(f"<error: {exc}>")
            return "transport", None
        attempts_raw.append(response.text)
        try:
            value = parse_json_block(response.text)
        except ExtractionError:
            return "invalid", None
        try:
            ok = bool(validator(value))
        except (TypeError, ValueError, KeyError):
            ok = False
        return ("ok", value) if ok else ("invalid", None)


def parse_json_block(text: str) -> object:
    """Parse a JSON value from model output, tolerating code fences and prose."""
    t = text.strip()
    if t.startswith("```"):
        t = t.split("\n", 1)[1] if "\n" in t else ""
        if t.rstrip().endswith("```"):
            t = t.rstrip()[: -3]
    try:
        return json.loads(t)
    except ValueError:
        pass
    start, end = t.find("{"), t.rfind("}")
    if start != -1 and end > start:
        try:
            return json.loads(t[start:end + 1])
        except ValueError as exc:
            raise ExtractionError(f"malformed JSON object: {exc}") from exc
    raise ExtractionError("no JSON object found in model output")


def load_transcript(path: str | Path) -> list[TranscriptEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            entries.append(TranscriptEntry(
                request_hash=obj["request_hash"],
                endpoint=obj["endpoint"],
                prompt=obj["prompt"],
                response=obj["response"],
                attempt=obj["attempt"],
            ))
    return entries
