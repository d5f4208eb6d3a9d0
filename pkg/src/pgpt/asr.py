"""Transcriber backends and the benchmark manifest format.

Two backends satisfy one contract: a deterministic manifest-backed mock
(what each utterance "sounds like" plus an injected delay) and a client for
an HTTP transcription endpoint accepting multipart wav uploads.  Recognition
time is measured around the full transcribe call.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

MANIFEST_FIELDS = ("id", "group", "audio_path", "reference_text", "mock_hypothesis", "mock_delay_ms")

API_KEY_ENV = "PGPT_ASR_API_KEY"


class AsrError(Exception):
    pass


class EmptyTranscription(AsrError):
    """The backend produced no text; callers must re-prompt the user."""

    def __init__(self, backend_id: str, recognition_time_ms: float):
        super().__init__(f"{backend_id} returned an empty transcription")
        self.backend_id = backend_id
        self.recognition_time_ms = recognition_time_ms


class BackendUnreachable(AsrError):
    pass


class BackendRejected(AsrError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"backend rejected the request with status {status} {detail}".strip())
        self.status = status


class ManifestError(Exception):
    pass


class SchemaViolation(ManifestError):
    def __init__(self, field: str, index: int):
        super().__init__(f"entry {index}: bad or missing field {field!r}")
        self.field = field
        self.index = index


class DuplicateId(ManifestError):
    def __init__(self, entry_id: str):
        super().__init__(f"duplicate manifest id {entry_id!r}")
        self.entry_id = entry_id


@dataclass(frozen=True)
class TranscriptResult:
    text: str
    recognition_time_ms: float
    backend_id: str


@dataclass(frozen=True)
class MockManifestEntry:
    id: str
    group: str
    audio_path: str
    reference_text: str
    mock_hypothesis: str
    mock_delay_ms: int


def load_manifest(path: str) -> list[MockManifestEntry]:
    """Load and validate a JSON manifest (array of entry objects)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise SchemaViolation("<root>", 0)
    entries = []
    seen = set()
    for idx, obj in enumerate(data):
        if not isinstance(obj, dict):
            raise SchemaViolation("<entry>", idx)
        for field in MANIFEST_FIELDS:
            if field not in obj:
                raise SchemaViolation(field, idx)
        if not isinstance(obj["mock_delay_ms"], int) or obj["mock_delay_ms"] < 0:
            raise SchemaViolation("mock_delay_ms", idx)
        for field in MANIFEST_FIELDS[:-1]:
            if not isinstance(obj[field], str):
                raise SchemaViolation(field, idx)
        if obj["id"] in seen:
            raise DuplicateId(obj["id"])
        seen.add(obj["id"])
        entries.append(MockManifestEntry(**{f: obj[f] for f in MANIFEST_FIELDS}))
    return entries


class MockBackend:
    """Replays manifest hypotheses after their injected delays."""

    backend_id = "mock"

    def __init__(self, entries: list[MockManifestEntry]):
        self._by_id = {e.id: e for e in entries}
        self._by_path = {e.audio_path: e for e in entries}

    def _lookup(self, item) -> MockManifestEntry:
        if isinstance(item, MockManifestEntry):
            return item
        key = str(item)
        entry = self._by_id.get(key) or self._by_path.get(key)
        if entry is None:
            raise BackendUnreachable(f"mock backend has no entry for {key!r}")
        return entry

    def transcribe_raw(self, item) -> str:
        entry = self._lookup(item)
        if entry.mock_delay_ms:
            time.sleep(entry.mock_delay_ms / 1000.0)
        return entry.mock_hypothesis


class HttpBackend:
    """Client for an HTTP endpoint taking a multipart wav and returning text.

    Request: POST <endpoint> with file field ``file`` and form field
    ``model``; bearer auth from PGPT_ASR_API_KEY.  Response: JSON with a
    ``text`` field.
    """

    def __init__(self, endpoint: str, model: str = "whisper-small", api_key: str | None = None,
                 timeout_s: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout_s = timeout_s
        self.backend_id = f"http:{model}"

    def transcribe_raw(self, item) -> str:
        import requests

        path = item.audio_path if isinstance(item, MockManifestEntry) else str(item)
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            with open(path, "rb") as fh:
                resp = requests.post(
                    self.endpoint,
                    headers=headers,
                    files={"file": (os.path.basename(path), fh, "audio/wav")},
                    data={"model": self.model},
                    timeout=self.timeout_s,
                )
        except (OSError, requests.RequestException) as exc:
            raise BackendUnreachable(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise BackendRejected(resp.status_code, resp.text[:200])
        try:
            return resp.json().get("text", "")
        except ValueError as exc:
            raise BackendRejected(resp.status_code, "response is not JSON") from exc


def transcribe(segment_or_path, backend) -> TranscriptResult:
    """Run one transcription and measure its wall-clock recognition time.

    Empty text is surfaced as EmptyTranscription so callers must handle the
    re-prompt path explicitly.
    """
    started = time.perf_counter()
    text = backend.transcribe_raw(segment_or_path)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    if not text.strip():
        raise EmptyTranscription(backend.backend_id, elapsed_ms)
    return TranscriptResult(text=text, recognition_time_ms=elapsed_ms, backend_id=backend.backend_id)
