"""Energy-threshold voice gating over 16 kHz mono PCM.

Detects voice onset, records, closes the segment on trailing silence and
rejects blips shorter than the minimum speech duration.  A deterministic
three-state machine (Quiet, Candidate, InSpeech) stands in for a neural VAD
behind the same frame-in, events-out contract.  Also hosts the stock-phrase
hallucination filter applied to transcripts of near-empty audio.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SAMPLE_RATE = 16000
FRAME_SAMPLES = 320            # 20 ms at 16 kHz
FRAME_MS = FRAME_SAMPLES * 1000 // SAMPLE_RATE
SILENCE_FLOOR_DBFS = -100.0
FULL_SCALE = 32768.0

DEFAULT_HALLUCINATION_PHRASES = (
    "thank you.",
    "thank you for your watching.",
    "thanks for watching.",
)


class EmptyFrame(Exception):
    pass


class MalformedFrame(Exception):
    pass


class UnsupportedFormat(Exception):
    pass


@dataclass
class GateConfig:
    threshold_dbfs: float = -35.0
    min_speech_ms: int = 300
    hangover_ms: int = 700
    max_utterance_s: float = 30.0

    def __post_init__(self):
        if self.min_speech_ms <= 0 or self.hangover_ms <= 0 or self.max_utterance_s <= 0:
            raise ValueError("gate durations must be positive")
        if self.min_speech_ms >= self.max_utterance_s * 1000:
            raise ValueError("min_speech_ms must be below max_utterance_s")


@dataclass(frozen=True)
class AudioSegment:
    start_ms: int
    end_ms: int
    samples: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, AudioSegment)
            and self.start_ms == other.start_ms
            and self.end_ms == other.end_ms
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True)
class SpeechStart:
    at_ms: int


@dataclass(frozen=True)
class SpeechEnd:
    segment: AudioSegment


class _Phase(Enum):
    QUIET = "quiet"
    CANDIDATE = "candidate"
    IN_SPEECH = "in_speech"


@dataclass
class GateState:
    phase: _Phase = _Phase.QUIET
    t_ms: int = 0                      # stream time at next frame start
    run_start_ms: int = 0              # start of current above-threshold run
    silence_ms: int = 0                # trailing below-threshold duration
    buffer: list = field(default_factory=list)


def rms_dbfs(frame) -> float:
    """RMS level of one PCM frame in dB relative to full scale (32768)."""
    samples = np.asarray(frame, dtype=np.float64)
    if samples.size == 0:
        raise EmptyFrame("cannot measure an empty frame")
    rms = float(np.sqrt(np.mean(samples * samples)))
    if rms <= 0.0:
        return SILENCE_FLOOR_DBFS
    level = 20.0 * np.log10(rms / FULL_SCALE)
    return max(level, SILENCE_FLOOR_DBFS)


def process_frame(frame, state: GateState, config: GateConfig):
    """Advance the gate by one 20 ms frame; returns (state, events).

    The final frame of a stream may be short; every other frame must be
    exactly 320 samples.
    """
    samples = np.asarray(frame, dtype=np.int16)
    if samples.ndim != 1 or samples.size == 0 or samples.size > FRAME_SAMPLES:
        raise MalformedFrame(f"expected <= {FRAME_SAMPLES} mono samples, got shape {samples.shape}")
    events = []
    frame_ms = samples.size * 1000 // SAMPLE_RATE
    start = state.t_ms
    end = start + frame_ms
    above = rms_dbfs(samples) >= config.threshold_dbfs

    if state.phase is _Phase.QUIET:
        if above:
            state.phase = _Phase.CANDIDATE
            state.run_start_ms = start
            state.buffer = [samples]
            if end - state.run_start_ms >= config.min_speech_ms:
                state.phase = _Phase.IN_SPEECH
                state.silence_ms = 0
                events.append(SpeechStart(state.run_start_ms))
    elif state.phase is _Phase.CANDIDATE:
        if above:
            state.buffer.append(samples)
            if end - state.run_start_ms >= config.min_speech_ms:
                state.phase = _Phase.IN_SPEECH
                state.silence_ms = 0
                events.append(SpeechStart(state.run_start_ms))
        else:
            state.phase = _Phase.QUIET
            state.buffer = []
    else:  # IN_SPEECH
        state.buffer.append(samples)
        if above:
            state.silence_ms = 0
        else:
            state.silence_ms += frame_ms
        max_ms = int(config.max_utterance_s * 1000)
        if state.silence_ms >= config.hangover_ms:
            events.append(SpeechEnd(_close_segment(state, end)))
        elif end - state.run_start_ms >= max_ms:
            events.append(SpeechEnd(_close_segment(state, end)))
    state.t_ms = end
    return state, events


def flush(state: GateState):
    """End-of-stream: close a still-open segment, if any."""
    events = []
    if state.phase is _Phase.IN_SPEECH:
        events.append(SpeechEnd(_close_segment(state, state.t_ms)))
    state.phase = _Phase.QUIET
    state.buffer = []
    return state, events


def _close_segment(state: GateState, end_ms: int) -> AudioSegment:
    segment = AudioSegment(
        start_ms=state.run_start_ms,
        end_ms=end_ms,
        samples=np.concatenate(state.buffer) if state.buffer else np.zeros(0, dtype=np.int16),
    )
    state.phase = _Phase.QUIET
    state.buffer = []
    state.silence_ms = 0
    return segment


def iter_frames(samples: np.ndarray):
    """Split a sample array into consecutive 20 ms frames (last may be short)."""
    for off in range(0, len(samples), FRAME_SAMPLES):
        yield samples[off:off + FRAME_SAMPLES]


def segment_stream(samples: np.ndarray, config: GateConfig) -> list[AudioSegment]:
    """Fold process_frame over a whole sample array."""
    state = GateState()
    segments = []
    for frame in iter_frames(np.asarray(samples, dtype=np.int16)):
        state, events = process_frame(frame, state, config)
        segments.extend(e.segment for e in events if isinstance(e, SpeechEnd))
    _, events = flush(state)
    segments.extend(e.segment for e in events if isinstance(e, SpeechEnd))
    return segments


def read_wav(path: str) -> np.ndarray:
    """Read a RIFF PCM wav; only 16-bit mono 16 kHz is accepted."""
    try:
        with wave.open(path, "rb") as wav:
            if wav.getnchannels() != 1:
                raise UnsupportedFormat(f"{path}: expected mono, got {wav.getnchannels()} channels")
            if wav.getsampwidth() != 2:
                raise UnsupportedFormat(f"{path}: expected 16-bit samples")
            if wav.getframerate() != SAMPLE_RATE:
                raise UnsupportedFormat(f"{path}: expected {SAMPLE_RATE} Hz, got {wav.getframerate()}")
            if wav.getcomptype() != "NONE":
                raise UnsupportedFormat(f"{path}: compressed wav not supported")
            raw = wav.readframes(wav.getnframes())
    except wave.Error as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    return np.frombuffer(raw, dtype="<i2")


def segment_wav_file(path: str, config: GateConfig) -> list[AudioSegment]:
    """Offline counterpart of the streaming gate; identical boundaries."""
    return segment_stream(read_wav(path), config)


def filter_hallucination(transcript: str, phrases=DEFAULT_HALLUCINATION_PHRASES) -> bool:
    """True when the transcript should be kept.

    Discards only exact matches (after trim + lowercase) of a configured
    stock-phrase list, so real sentences containing "thank you" survive.
    """
    return transcript.strip().lower() not in {p.strip().lower() for p in phrases}
