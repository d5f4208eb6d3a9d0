"""Simulated robot controller.

Executes action commands from a registry, renders speech as timed output
with keyword-triggered gestures, shows thinking behaviour between turns and
answers every command with exactly one end flag.  All timing goes through an
injected clock, so the whole simulation is deterministic under a virtual
clock.
"""

from __future__ import annotations

import heapq
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum

from .protocol import Frame, MessageKind, make_frame, parse_envelope

log = logging.getLogger(__name__)

SENDER = "controller"
THINKING_GESTURE_PERIOD_MS = 1500
MIN_SPEECH_MS = 800
MS_PER_WORD = 60
RE_PROMPT_LINE = "Sorry, I didn't catch that - could you say it again?"

_WORD_RE = re.compile(r"[A-Za-z0-9']+")


class RobotState(Enum):
    IDLE = "idle"
    LISTENING = "listening"
    THINKING = "thinking"
    SPEAKING = "speaking"
    ACTING = "acting"


LEGAL_TRANSITIONS = {
    RobotState.IDLE: {RobotState.LISTENING},
    RobotState.LISTENING: {RobotState.THINKING},
    RobotState.THINKING: {RobotState.SPEAKING, RobotState.ACTING, RobotState.IDLE},
    RobotState.SPEAKING: {RobotState.IDLE},
    RobotState.ACTING: {RobotState.IDLE},
}


class IllegalTransition(Exception):
    pass


class RegistryError(Exception):
    pass


@dataclass(frozen=True)
class ActionDef:
    action_id: str
    keywords: tuple
    duration_ms: int
    description: str = ""


@dataclass(frozen=True)
class GestureRule:
    trigger_word: str
    gesture_name: str


def load_action_registry(path: str) -> list[ActionDef]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    registry = []
    seen = set()
    for obj in data:
        action_id = obj["action_id"]
        if action_id in seen:
            raise RegistryError(f"duplicate action_id {action_id!r}")
        seen.add(action_id)
        duration = int(obj["duration_ms"])
        if duration <= 0:
            raise RegistryError(f"{action_id}: duration_ms must be positive")
        registry.append(
            ActionDef(
                action_id=action_id,
                keywords=tuple(obj["keywords"]),
                duration_ms=duration,
                description=obj.get("description", ""),
            )
        )
    return registry


def load_gesture_rules(path: str) -> list[GestureRule]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    rules = []
    seen = set()
    for obj in data:
        trigger = obj["trigger_word"].lower()
        if trigger in seen:
            raise RegistryError(f"duplicate trigger_word {trigger!r}")
        seen.add(trigger)
        rules.append(GestureRule(trigger_word=trigger, gesture_name=obj["gesture_name"]))
    return rules


def speech_duration_ms(text: str) -> int:
    words = _WORD_RE.findall(text)
    return max(MIN_SPEECH_MS, MS_PER_WORD * len(words))


def gesture_offsets(text: str, rules) -> list[tuple[int, str]]:
    """(offset_ms, gesture_name) per matched rule, in word order.

    One event per rule, at the first occurrence of its trigger word,
    proportionally placed within the speech duration.
    """
    words = [w.lower() for w in _WORD_RE.findall(text)]
    duration = speech_duration_ms(text)
    out = []
    for rule in rules:
        if rule.trigger_word in words:
            idx = words.index(rule.trigger_word)
            out.append((duration * idx // max(1, len(words)), rule.gesture_name))
    out.sort(key=lambda pair: pair[0])
    return out


@dataclass
class RobotCore:
    """Single-owner state machine; frames in, frames + event-log lines out."""

    registry: list
    gesture_rules: list = field(default_factory=list)
    clock: object = None

    def __post_init__(self):
        if self.clock is None:
            from .clock import VirtualClock

            self.clock = VirtualClock()
        self.state = RobotState.IDLE
        self.outbox: list[Frame] = []
        self.event_log: list[str] = []
        self._by_id = {a.action_id: a for a in self.registry}
        self._timers = []            # heap of (due_ms, seq, callback)
        self._seq = 0
        self._pending_prompt = False
        self._turn = 0

    # -- event log ---------------------------------------------------------

    def _log(self, kind: str, detail: str) -> None:
        self.event_log.append(f"{self.clock.now_ms()} {kind} {detail}")

    def _schedule(self, due_ms: int, callback) -> None:
        heapq.heappush(self._timers, (due_ms, self._seq, callback))
        self._seq += 1

    def next_due_ms(self):
        return self._timers[0][0] if self._timers else None

    def tick(self) -> None:
        """Fire every timer due at the current clock time."""
        now = self.clock.now_ms()
        while self._timers and self._timers[0][0] <= now:
            _, _, callback = heapq.heappop(self._timers)
            callback()

    def run_until_idle(self) -> None:
        """Advance a virtual clock through all pending timers (test helper)."""
        while self._timers:
            due = self._timers[0][0]
            if due > self.clock.now_ms():
                self.clock.advance_to(due)
            self.tick()
            if self.state is RobotState.IDLE and not self._timers:
                break
            # thinking gestures reschedule forever; stop once idle
            if self.state is RobotState.IDLE:
                break

    # -- state machine -----------------------------------------------------

    def _transition(self, new_state: RobotState) -> None:
        if new_state not in LEGAL_TRANSITIONS[self.state]:
            raise IllegalTransition(f"{self.state.value} -> {new_state.value}")
        self.state = new_state
        self._log("state", new_state.value)
        self.outbox.append(make_frame(MessageKind.STATE_BROADCAST, self._turn, SENDER, new_state.value))

    def _walk_to_thinking(self) -> None:
        if self.state is RobotState.IDLE:
            self._transition(RobotState.LISTENING)
        if self.state is RobotState.LISTENING:
            self.enter_thinking()

    def enter_thinking(self) -> None:
        """Listening -> Thinking, with a repeating thinking gesture."""
        self._transition(RobotState.THINKING)
        due = self.clock.now_ms() + THINKING_GESTURE_PERIOD_MS
        self._schedule(due, lambda: self._thinking_gesture(due))

    def _thinking_gesture(self, due_ms: int) -> None:
        if self.state is not RobotState.THINKING:
            return
        self.event_log.append(f"{due_ms} gesture thinking")
        self._schedule(due_ms + THINKING_GESTURE_PERIOD_MS,
                       lambda: self._thinking_gesture(due_ms + THINKING_GESTURE_PERIOD_MS))

    def _busy(self) -> bool:
        return self.state in (RobotState.ACTING, RobotState.SPEAKING)

    # -- frame handling ----------------------------------------------------

    def handle_frame(self, frame: Frame) -> None:
        env = parse_envelope(frame)
        if frame.kind is MessageKind.ACTION_COMMAND:
            if self._busy():
                self._log("protocol_violation", f"command while {self.state.value}")
                return
            self._turn = env.turn
            self._walk_to_thinking()
            self.execute_action(env.body or "")
        elif frame.kind is MessageKind.SPEECH_REPLY:
            if self._busy():
                self._log("protocol_violation", f"reply while {self.state.value}")
                return
            self._turn = env.turn
            self._walk_to_thinking()
            self.speak(env.body or "")
        elif frame.kind is MessageKind.RE_PROMPT:
            if self._busy():
                self._pending_prompt = True   # collapse repeats into one
                self._log("prompt_deferred", self.state.value)
                return
            self._turn = env.turn
            self.handle_prompt()
        elif frame.kind is MessageKind.STATE_BROADCAST:
            pass   # registration acks and notices
        elif frame.kind is MessageKind.HEARTBEAT:
            pass

    def execute_action(self, action_id: str) -> None:
        """Run one registry action; always answers with exactly one end flag."""
        action = self._by_id.get(action_id)
        if action is None:
            self._log("apology", f"I'm sorry, I don't know how to do '{action_id}'.")
            self._finish("failed")
            return
        self._transition(RobotState.ACTING)
        self._log("action_start", action.action_id)
        turn = self._turn
        self._schedule(self.clock.now_ms() + action.duration_ms,
                       lambda: self._action_done(action.action_id, turn))

    def _action_done(self, action_id: str, turn: int) -> None:
        self._log("action_done", action_id)
        self._finish("ok", turn)

    def speak(self, text: str) -> None:
        """Render a reply as timed speech with keyword-triggered gestures."""
        self._transition(RobotState.SPEAKING)
        self._log("say", text)
        now = self.clock.now_ms()
        for offset, gesture in gesture_offsets(text, self.gesture_rules):
            self._schedule(now + offset, lambda g=gesture: self._log("gesture", g))
        turn = self._turn
        self._schedule(now + speech_duration_ms(text), lambda: self._finish("ok", turn))

    def handle_prompt(self) -> None:
        """Speak the fixed re-prompt line, then end-flag and return to idle."""
        self._pending_prompt = False
        self._walk_to_thinking()
        self.speak(RE_PROMPT_LINE)

    def _finish(self, status: str, turn: int | None = None) -> None:
        if turn is not None:
            self._turn = turn
        self._transition(RobotState.IDLE)
        self._log("end_flag", status)
        self.outbox.append(make_frame(MessageKind.END_FLAG, self._turn, SENDER, status))
        if self._pending_prompt:
            self.handle_prompt()

    def drain_outbox(self) -> list[Frame]:
        frames, self.outbox = self.outbox, []
        return frames


def run_robot(host: str, port: int, registry, gesture_rules=None, clock=None,
              stop_event=None, poll_s: float = 0.05) -> RobotCore:
    """Connect a RobotCore to the hub and process frames until stopped.

    Under a virtual clock the loop fast-forwards through due timers whenever
    no input is pending, so simulated actions complete instantly in real
    time.
    """
    import queue as _queue
    import threading

    from .clock import VirtualClock
    from .netclient import HubClient

    stop_event = stop_event or threading.Event()
    core = RobotCore(registry, gesture_rules or [], clock)
    client = HubClient(host, port, SENDER).connect()
    virtual = isinstance(core.clock, VirtualClock)
    try:
        while not stop_event.is_set() and not client.closed:
            try:
                frame = client.inbound.get(timeout=poll_s)
            except _queue.Empty:
                frame = None
            if frame is not None:
                core.handle_frame(frame)
            if virtual:
                while core.next_due_ms() is not None and client.inbound.empty():
                    core.clock.advance_to(core.next_due_ms())
                    core.tick()
                    for out in core.drain_outbox():
                        client.send(out)
                    if core.state is RobotState.IDLE and core.next_due_ms() is None:
                        break
            else:
                core.tick()
            for out in core.drain_outbox():
                client.send(out)
    finally:
        client.close()
    return core


def default_registry() -> list[ActionDef]:
    """The seed action registry shipped with the package."""
    from importlib.resources import files

    return load_action_registry(str(files("pgpt.data") / "actions.json"))


def default_gesture_rules() -> list[GestureRule]:
    from importlib.resources import files

    return load_gesture_rules(str(files("pgpt.data") / "gestures.json"))
