"""Framed, prefix-routed wire format shared by every client and the hub.

One frame per line: ``<symbol>|<payload>\n`` where the symbol is a single
ASCII character from a closed set and the payload is UTF-8 text with no raw
line feeds.  Payloads carry a single-line JSON envelope for everything except
heartbeats, which may be empty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

MAX_PAYLOAD_BYTES = 65536

_LF = 0x0A
_SEP = 0x7C  # '|'


class MessageKind(Enum):
    REGISTER = "R"
    SPEECH_REPLY = "S"
    ACTION_COMMAND = "A"
    END_FLAG = "E"
    RE_PROMPT = "P"
    TEXT_INJECTION = "T"
    STATE_BROADCAST = "X"
    HEARTBEAT = "H"


PREFIX_SYMBOLS = frozenset(k.value for k in MessageKind)
_SYMBOL_TO_KIND = {k.value: k for k in MessageKind}

# Envelope field that carries the kind-specific body, per message kind.
# REGISTER and HEARTBEAT carry no extra field beyond turn/sender.
BODY_FIELD = {
    MessageKind.SPEECH_REPLY: "text",
    MessageKind.ACTION_COMMAND: "action",
    MessageKind.END_FLAG: "status",
    MessageKind.RE_PROMPT: "reason",
    MessageKind.TEXT_INJECTION: "text",
    MessageKind.STATE_BROADCAST: "state",
}


class ProtocolError(Exception):
    """Base class for frame encode/decode failures."""


class PayloadTooLong(ProtocolError):
    pass


class PayloadContainsNewline(ProtocolError):
    pass


class UnknownPrefix(ProtocolError):
    pass


class MissingSeparator(ProtocolError):
    pass


class InvalidUtf8(ProtocolError):
    pass


class BadEnvelope(ProtocolError):
    pass


@dataclass(frozen=True)
class Frame:
    kind: MessageKind
    payload: str

    @property
    def symbol(self) -> str:
        return self.kind.value


def encode_frame(frame: Frame) -> bytes:
    """Serialize a frame to its wire line, terminator included."""
    if "\n" in frame.payload:
        raise PayloadContainsNewline("payload contains a raw line feed")
    data = frame.payload.encode("utf-8")
    if len(data) > MAX_PAYLOAD_BYTES:
        raise PayloadTooLong(
            f"payload is {len(data)} bytes, limit {MAX_PAYLOAD_BYTES}"
        )
    return frame.symbol.encode("ascii") + b"|" + data + b"\n"


def decode_frame(line: bytes) -> Frame:
    """Parse one wire line (without its terminator) back into a Frame.

    Inverse of :func:`encode_frame` on valid input; raises a typed
    ProtocolError on anything else, never an unchecked exception.
    """
    if isinstance(line, str):
        line = line.encode("utf-8")
    if len(line) == 0:
        raise UnknownPrefix("empty line")
    symbol = chr(line[0]) if line[0] < 128 else None
    if symbol not in PREFIX_SYMBOLS:
        raise UnknownPrefix(f"first byte {line[:1]!r} is not a known prefix")
    if len(line) < 2 or line[1] != _SEP:
        raise MissingSeparator("second byte is not '|'")
    body = line[2:]
    if _LF in body:
        raise PayloadContainsNewline("payload contains a raw line feed")
    if len(body) > MAX_PAYLOAD_BYTES:
        raise PayloadTooLong(f"payload is {len(body)} bytes")
    try:
        payload = body.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8(str(exc)) from exc
    return Frame(_SYMBOL_TO_KIND[symbol], payload)


@dataclass(frozen=True)
class Envelope:
    """Structured payload: turn id, sender role, one kind-specific body value."""

    turn: int
    sender: str
    body: str | None = None

    def to_payload(self, kind: MessageKind) -> str:
        obj: dict = {"turn": self.turn, "sender": self.sender}
        field = BODY_FIELD.get(kind)
        if field is not None:
            obj[field] = self.body if self.body is not None else ""
        return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def make_frame(kind: MessageKind, turn: int, sender: str, body: str | None = None) -> Frame:
    return Frame(kind, Envelope(turn, sender, body).to_payload(kind))


def parse_envelope(frame: Frame) -> Envelope:
    """Extract the envelope from a frame payload.

    Heartbeats may have an empty payload; everything else must be a one-line
    JSON object with ``turn``, ``sender`` and the kind-specific field.
    """
    if frame.kind is MessageKind.HEARTBEAT and frame.payload == "":
        return Envelope(0, "", None)
    try:
        obj = json.loads(frame.payload)
    except json.JSONDecodeError as exc:
        raise BadEnvelope(f"payload is not a JSON object: {exc}") from exc
    if not isinstance(obj, dict):
        raise BadEnvelope("payload is not a JSON object")
    turn = obj.get("turn", 0)
    sender = obj.get("sender", "")
    if not isinstance(turn, int) or turn < 0:
        raise BadEnvelope("turn must be a non-negative integer")
    if not isinstance(sender, str):
        raise BadEnvelope("sender must be a string")
    field = BODY_FIELD.get(frame.kind)
    body = None
    if field is not None:
        body = obj.get(field)
        if body is not None and not isinstance(body, str):
            raise BadEnvelope(f"field {field!r} must be a string")
    return Envelope(turn, sender, body)
