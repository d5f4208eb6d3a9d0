"""Turn-loop orchestrator: gate -> transcribe -> route -> hub -> wait for end flag.

Drives one logical turn at a time over a manifest, a directory of wav files
or console-injected text, enforcing the strict A/S/P to E alternation.
Console T frames arriving mid-session become the next turn's utterance,
bypassing the gate and the transcriber.
"""

from __future__ import annotations

import json
import logging
import queue as _queue
import time
from dataclasses import dataclass, field

from . import audio_gate, dialogue
from .asr import AsrError, BackendRejected, BackendUnreachable, EmptyTranscription, transcribe
from .audio_gate import GateConfig, filter_hallucination
from .netclient import HubClient, HubConnectionError
from .protocol import MessageKind, make_frame, parse_envelope

log = logging.getLogger(__name__)

SENDER = "pipeline"


@dataclass
class PipelineConfig:
    hub_host: str = "127.0.0.1"
    hub_port: int = 7350
    gate: GateConfig = field(default_factory=GateConfig)
    hallucination_phrases: tuple = audio_gate.DEFAULT_HALLUCINATION_PHRASES
    empty_retry_limit: int = 3
    end_flag_timeout_s: float = 60.0
    no_wait: bool = False

    def __post_init__(self):
        if self.empty_retry_limit < 1:
            raise ValueError("empty_retry_limit must be >= 1")


@dataclass
class TurnRecord:
    turn: int
    utterance: str
    outcome_kind: str          # action | speech | prompt | timeout
    detail: str = ""
    corrected: bool = False
    gate_ms: float = 0.0
    asr_ms: float = 0.0
    dialogue_ms: float = 0.0
    robot_ms: float = 0.0
    total_ms: float = 0.0


@dataclass(frozen=True)
class _Injected:
    text: str


class Pipeline:
    def __init__(self, config: PipelineConfig, backend, responder, registry):
        self.config = config
        self.backend = backend
        self.responder = responder
        self.registry = registry
        self.history = dialogue.History()
        self.records: list[TurnRecord] = []
        self._injections: _queue.Queue[str] = _queue.Queue()
        self._turn = 0
        self._empty_streak = 0
        self._client: HubClient | None = None

    # -- connection --------------------------------------------------------

    def connect(self) -> "Pipeline":
        self._client = HubClient(self.config.hub_host, self.config.hub_port, SENDER).connect()
        return self

    def _reconnect(self) -> None:
        deadline = time.monotonic() + 30
        while True:
            try:
                self.connect()
                log.info("reconnected to hub, resuming at turn %d", self._turn)
                return
            except HubConnectionError:
                if time.monotonic() > deadline:
                    raise
                time.sleep(1.0)

    def _send(self, frame) -> None:
        try:
            self._client.send(frame)
        except HubConnectionError:
            self._reconnect()
            self._client.send(frame)

    # -- turn execution ----------------------------------------------------

    def run_turn(self, item) -> TurnRecord:
        """One full turn for a manifest entry, wav path or injected text."""
        self._turn += 1
        started = time.perf_counter()
        record = TurnRecord(turn=self._turn, utterance="", outcome_kind="prompt")
        utterance = None
        prompt_reason = None

        if isinstance(item, _Injected):
            utterance = item.text
        else:
            gate_t0 = time.perf_counter()
            if isinstance(item, str):   # wav path: check it gates as speech at all
                try:
                    segments = audio_gate.segment_wav_file(item, self.config.gate)
                except audio_gate.UnsupportedFormat as exc:
                    log.warning("skipping %s: %s", item, exc)
                    segments = []
                if not segments:
                    prompt_reason = "no_speech"
            record.gate_ms = (time.perf_counter() - gate_t0) * 1000.0
            if prompt_reason is None:
                try:
                    result = transcribe(item, self.backend)
                    record.asr_ms = result.recognition_time_ms
                    utterance = result.text
                except EmptyTranscription as exc:
                    record.asr_ms = exc.recognition_time_ms
                    prompt_reason = "empty_transcription"
                except (BackendUnreachable, BackendRejected) as exc:
                    log.warning("turn %d: transcription failed: %s", self._turn, exc)
                    prompt_reason = "backend_failure"

        if utterance is not None and not filter_hallucination(utterance, self.config.hallucination_phrases):
            prompt_reason = "hallucination"
            utterance = None

        if utterance is None:
            self._empty_streak += 1
            if self._empty_streak >= self.config.empty_retry_limit:
                log.warning("turn %d: %d consecutive empty turns", self._turn, self._empty_streak)
            record.outcome_kind = "prompt"
            record.detail = prompt_reason or "empty"
            frame = make_frame(MessageKind.RE_PROMPT, self._turn, SENDER, record.detail)
        else:
            self._empty_streak = 0
            record.utterance = utterance
            dlg_t0 = time.perf_counter()
            outcome = dialogue.step(self.history, utterance, self.responder, self.registry)
            record.dialogue_ms = (time.perf_counter() - dlg_t0) * 1000.0
            record.corrected = outcome.mode_was_corrected
            if outcome.action is not None:
                record.outcome_kind = "action"
                record.detail = outcome.action.action_id
                frame = make_frame(MessageKind.ACTION_COMMAND, self._turn, SENDER,
                                   outcome.action.action_id)
            else:
                record.outcome_kind = "speech"
                record.detail = outcome.reply.text
                frame = make_frame(MessageKind.SPEECH_REPLY, self._turn, SENDER, outcome.reply.text)

        robot_t0 = time.perf_counter()
        self._send(frame)
        if not self._await_end_flag():
            if not self.config.no_wait:
                record.outcome_kind = "timeout" if record.outcome_kind != "prompt" else record.outcome_kind
            record.robot_ms = 0.0
        else:
            record.robot_ms = (time.perf_counter() - robot_t0) * 1000.0
        record.total_ms = (time.perf_counter() - started) * 1000.0
        self.records.append(record)
        return record

    def _await_end_flag(self) -> bool:
        """True when this turn's E frame arrived; stashes T frames meanwhile."""
        deadline = time.monotonic() + self.config.end_flag_timeout_s
        while time.monotonic() < deadline:
            try:
                frame = self._client.inbound.get(timeout=0.05)
            except _queue.Empty:
                if self._client.closed:
                    self._reconnect()
                continue
            if frame.kind is MessageKind.END_FLAG:
                return True
            if frame.kind is MessageKind.TEXT_INJECTION:
                env = parse_envelope(frame)
                if env.body and env.body.strip():
                    self._injections.put(env.body.strip())
            elif frame.kind is MessageKind.STATE_BROADCAST:
                if '"undeliverable"' in frame.payload and self.config.no_wait:
                    return False
        log.warning("turn %d: end flag not received before timeout", self._turn)
        return False

    def _poll_injections(self) -> None:
        while True:
            try:
                frame = self._client.inbound.get_nowait()
            except _queue.Empty:
                return
            if frame.kind is MessageKind.TEXT_INJECTION:
                env = parse_envelope(frame)
                if env.body and env.body.strip():
                    self._injections.put(env.body.strip())

    # -- session loop ------------------------------------------------------

    def run_loop(self, items, wait_for_injections: bool = False) -> dict:
        """Iterate turns over the input items; injected text preempts them.

        With wait_for_injections (text-only mode) the loop keeps serving
        console-injected turns after the items are exhausted, until
        interrupted.
        """
        try:
            iterator = iter(items)
            exhausted = False
            while True:
                self._poll_injections()
                try:
                    injected = self._injections.get_nowait()
                    self.run_turn(_Injected(injected))
                    continue
                except _queue.Empty:
                    pass
                if not exhausted:
                    try:
                        item = next(iterator)
                    except StopIteration:
                        exhausted = True
                        continue
                    self.run_turn(item)
                    continue
                if not wait_for_injections:
                    break
                time.sleep(0.05)
        except KeyboardInterrupt:
            log.info("interrupted, flushing session summary")
        return self.summary()

    def summary(self) -> dict:
        return {
            "turns": [
                {
                    "turn": r.turn,
                    "utterance": r.utterance,
                    "outcome_kind": r.outcome_kind,
                    "detail": r.detail,
                    "corrected": r.corrected,
                    "latencies": {
                        "gate_ms": round(r.gate_ms, 3),
                        "asr_ms": round(r.asr_ms, 3),
                        "dialogue_ms": round(r.dialogue_ms, 3),
                        "robot_ms": round(r.robot_ms, 3),
                        "total_ms": round(r.total_ms, 3),
                    },
                }
                for r in self.records
            ],
            "n_turns": len(self.records),
        }

    def write_summary(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)

    def close(self) -> None:
        if self._client:
            self._client.close()
