"""Intent routing for each transcribed utterance.

Every turn is classified into action mode (drive the robot) or speech mode
(converse).  First-pass classification is local keyword + imperative-cue
matching; a responder-backed double-check can overturn it.  Replies come
from a pluggable responder: a scripted mock or an HTTP chat-completion
client.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from enum import Enum

log = logging.getLogger(__name__)

MAX_EXCHANGES = 20

DEFAULT_SYSTEM_PROMPT = (
    "You are Pepper, a friendly humanoid robot assistant. Keep replies under 60 words."
)

VERIFICATION_PROMPT = (
    "Does the user request a physical action? Answer exactly ACTION:<id> or SPEECH."
)

LLM_API_KEY_ENV = "PGPT_LLM_API_KEY"

_WORD_RE = re.compile(r"[a-z0-9']+")
_ACTION_VERDICT_RE = re.compile(r"ACTION:([A-Za-z0-9_]+)")
_SPEECH_VERDICT_RE = re.compile(r"\bSPEECH\b")


class Mode(Enum):
    ACTION = "action"
    SPEECH = "speech"


class DialogueError(Exception):
    pass


class ResponderUnreachable(DialogueError):
    pass


class ResponderRejected(DialogueError):
    def __init__(self, status, detail: str = ""):
        super().__init__(f"responder rejected the request: {status} {detail}".strip())
        self.status = status


class NoActionMatched(DialogueError):
    pass


@dataclass(frozen=True)
class ActionCommand:
    action_id: str


@dataclass(frozen=True)
class Reply:
    text: str


@dataclass(frozen=True)
class TurnOutcome:
    """Either an action command or a reply, with the correction flag."""

    action: ActionCommand | None
    reply: Reply | None
    mode_was_corrected: bool

    @property
    def mode(self) -> Mode:
        return Mode.ACTION if self.action is not None else Mode.SPEECH


class History:
    """Bounded conversation history: one system entry plus the last 20 exchanges."""

    def __init__(self, system_prompt: str = DEFAULT_SYSTEM_PROMPT):
        self._messages: list[tuple[str, str]] = [("system", system_prompt)]

    def messages(self) -> list[dict]:
        return [{"role": role, "content": text} for role, text in self._messages]

    def append_exchange(self, user_text: str, reply_text: str) -> None:
        self._messages.append(("user", user_text))
        self._messages.append(("assistant", reply_text))
        excess = len(self._messages) - (1 + 2 * MAX_EXCHANGES)
        if excess > 0:
            # drop oldest exchanges, never the system entry
            self._messages = [self._messages[0]] + self._messages[1 + excess:]

    def __len__(self) -> int:
        return len(self._messages)


def _tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _keyword_hits(tokens: list[str], registry) -> list[tuple[int, str]]:
    """(token index, action_id) for every whole-word keyword occurrence."""
    hits = []
    for entry in registry:
        for keyword in entry.keywords:
            kw = keyword.lower()
            for idx, tok in enumerate(tokens):
                if tok == kw:
                    hits.append((idx, entry.action_id))
    return hits


def _has_imperative_cue(tokens: list[str], keyword_idx: int) -> bool:
    if keyword_idx == 0:
        return True
    for i in range(keyword_idx):
        if tokens[i] == "please":
            return True
        if tokens[i] in ("can", "could") and i + 1 < len(tokens) and tokens[i + 1] == "you":
            return True
    return False


def classify(text: str, registry) -> Mode:
    """Action iff a registry keyword appears whole-word with an imperative cue."""
    tokens = _tokens(text)
    for idx, _ in _keyword_hits(tokens, registry):
        if _has_imperative_cue(tokens, idx):
            return Mode.ACTION
    return Mode.SPEECH


def extract_action(text: str, registry) -> ActionCommand:
    """First registry entry (registry order) with a whole-word keyword match."""
    tokens = set(_tokens(text))
    for entry in registry:
        if any(kw.lower() in tokens for kw in entry.keywords):
            return ActionCommand(entry.action_id)
    raise NoActionMatched(f"no registry keyword found in {text!r}")


def generate_reply(history: History, utterance: str, responder) -> Reply:
    """Ask the responder for a reply; history is only mutated on success."""
    messages = history.messages() + [{"role": "user", "content": utterance}]
    text = responder.complete(messages)
    if not text or not text.strip():
        raise ResponderRejected("empty", "responder returned empty text")
    history.append_exchange(utterance, text)
    return Reply(text)


def double_check(utterance: str, initial_mode: Mode, responder, registry):
    """Verify the mode with the responder; its verdict wins on disagreement.

    Returns (final_mode, action_command_or_None, corrected).  Unreachable
    responder fails open: the initial mode stands.
    """
    known = {entry.action_id for entry in registry}
    messages = [
        {"role": "system", "content": VERIFICATION_PROMPT},
        {"role": "user", "content": utterance},
    ]
    try:
        answer = responder.complete(messages)
    except ResponderUnreachable as exc:
        log.warning("double-check responder unreachable, keeping %s: %s", initial_mode, exc)
        return initial_mode, None, False
    verdict_mode = None
    verdict_action = None
    match = _ACTION_VERDICT_RE.search(answer or "")
    if match and match.group(1) in known:
        verdict_mode = Mode.ACTION
        verdict_action = ActionCommand(match.group(1))
    elif _SPEECH_VERDICT_RE.search(answer or ""):
        verdict_mode = Mode.SPEECH
    if verdict_mode is None or verdict_mode is initial_mode:
        return initial_mode, verdict_action, False
    return verdict_mode, verdict_action, True


def step(history: History, utterance: str, responder, registry) -> TurnOutcome:
    """One full turn: classify, double-check, then act or reply.

    Action turns never touch conversation history; commands are not
    dialogue.  An action verdict that matches nothing in the registry
    downgrades to speech mode.
    """
    initial = classify(utterance, registry)
    final_mode, verdict_action, corrected = double_check(utterance, initial, responder, registry)
    if final_mode is Mode.ACTION:
        try:
            command = verdict_action or extract_action(utterance, registry)
            return TurnOutcome(action=command, reply=None, mode_was_corrected=corrected)
        except NoActionMatched:
            log.info("action mode but no registry match, falling back to speech")
    reply = generate_reply(history, utterance, responder)
    return TurnOutcome(action=None, reply=reply, mode_was_corrected=corrected)


class MockResponder:
    """Scripted responder: per-utterance replies and double-check verdicts."""

    def __init__(self, turns=None, default_reply: str = "I see. Tell me more.",
                 default_verdict: str = ""):
        self._replies = {}
        self._verdicts = {}
        for turn in turns or []:
            key = turn["utterance"].strip().lower()
            if "reply" in turn:
                self._replies[key] = turn["reply"]
            if "verifier_response" in turn:
                self._verdicts[key] = turn["verifier_response"]
        self.default_reply = default_reply
        self.default_verdict = default_verdict

    @classmethod
    def from_file(cls, path: str) -> "MockResponder":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            turns=data.get("turns", []),
            default_reply=data.get("default_reply", "I see. Tell me more."),
            default_verdict=data.get("default_verdict", ""),
        )

    def complete(self, messages: list[dict]) -> str:
        system = messages[0]["content"] if messages and messages[0]["role"] == "system" else ""
        user = next((m["content"] for m in reversed(messages) if m["role"] == "user"), "")
        key = user.strip().lower()
        if system == VERIFICATION_PROMPT:
            return self._verdicts.get(key, self.default_verdict)
        return self._replies.get(key, self.default_reply)


class HttpResponder:
    """Chat-completion HTTP client: model + message list in, text out."""

    def __init__(self, endpoint: str, model: str = "gpt-3.5-turbo", api_key: str | None = None,
                 timeout_s: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(LLM_API_KEY_ENV, "")
        self.timeout_s = timeout_s

    def complete(self, messages: list[dict]) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                self.endpoint,
                headers=headers,
                json={"model": self.model, "messages": messages},
                timeout=self.timeout_s,
            )
        except (OSError, requests.RequestException) as exc:
            raise ResponderUnreachable(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise ResponderRejected(resp.status_code, resp.text[:200])
        try:
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as exc:
            raise ResponderRejected(resp.status_code, "malformed completion response") from exc
