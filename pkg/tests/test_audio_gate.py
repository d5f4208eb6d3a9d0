import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import scan_segments
from pgpt.audio_gate import (
    DEFAULT_HALLUCINATION_PHRASES,
    FRAME_MS,
    FRAME_SAMPLES,
    SAMPLE_RATE,
    AudioSegment,
    EmptyFrame,
    GateConfig,
    GateState,
    MalformedFrame,
    UnsupportedFormat,
    filter_hallucination,
    iter_frames,
    process_frame,
    rms_dbfs,
    segment_stream,
    segment_wav_file,
)

TONE_DBFS = -20.0


def silence(ms):
    return np.zeros(ms * SAMPLE_RATE // 1000, dtype=np.int16)


def tone(ms, dbfs=TONE_DBFS, freq=440.0):
    n = ms * SAMPLE_RATE // 1000
    amplitude = 32768.0 * (10 ** (dbfs / 20.0)) * np.sqrt(2.0)
    t = np.arange(n) / SAMPLE_RATE
    return (amplitude * np.sin(2 * np.pi * freq * t)).astype(np.int16)


def write_wav(path, samples, channels=1, rate=SAMPLE_RATE):
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        if channels == 2:
            samples = np.repeat(samples, 2)
        wav.writeframes(samples.astype("<i2").tobytes())


def frame_levels(samples, config):
    return [rms_dbfs(f) for f in iter_frames(samples)]


def oracle_segments(samples, config):
    return scan_segments(
        frame_levels(samples, config), FRAME_MS, config.threshold_dbfs,
        config.min_speech_ms, config.hangover_ms, int(config.max_utterance_s * 1000),
    )


class TestRmsDbfs:
    def test_all_zero_clamps_to_floor(self):
        assert rms_dbfs(np.zeros(320, dtype=np.int16)) == -100.0

    def test_full_scale_square(self):
        square = np.full(320, 32767, dtype=np.int16)
        square[::2] = -32767
        assert abs(rms_dbfs(square)) < 0.01

    def test_full_scale_sine(self):
        sine = (32767 * np.sin(2 * np.pi * 440 * np.arange(3200) / SAMPLE_RATE))
        assert abs(rms_dbfs(sine.astype(np.int16)[:320]) - (-3.01)) < 0.05

    def test_empty_frame(self):
        with pytest.raises(EmptyFrame):
            rms_dbfs(np.zeros(0, dtype=np.int16))


class TestGateStateMachine:
    def test_pure_silence_no_events(self):
        assert segment_stream(silence(10_000), GateConfig()) == []

    def test_single_burst_boundaries_near_oracle(self):
        config = GateConfig()
        samples = np.concatenate([silence(1000), tone(2000), silence(2000)])
        segments = segment_stream(samples, config)
        oracle = oracle_segments(samples, config)
        assert len(segments) == len(oracle) == 1
        (start, end), seg = oracle[0], segments[0]
        assert abs(seg.start_ms - start) <= 2 * FRAME_MS
        assert abs(seg.end_ms - end) <= 2 * FRAME_MS
        assert abs(seg.start_ms - 1000) <= 2 * FRAME_MS
        assert abs(seg.end_ms - (3000 + config.hangover_ms)) <= 2 * FRAME_MS

    def test_short_blip_rejected(self):
        samples = np.concatenate([silence(1000), tone(100), silence(1000)])
        assert segment_stream(samples, GateConfig()) == []

    def test_malformed_frame_rejected(self):
        state = GateState()
        with pytest.raises(MalformedFrame):
            process_frame(np.zeros(FRAME_SAMPLES + 1, dtype=np.int16), state, GateConfig())

    def test_max_utterance_cut(self):
        config = GateConfig(max_utterance_s=2.0)
        samples = np.concatenate([tone(5000), silence(1000)])
        segments = segment_stream(samples, config)
        assert len(segments) >= 2
        assert all(s.end_ms - s.start_ms <= 2000 + FRAME_MS for s in segments)


class TestWavFile:
    def test_silent_wav_empty(self, tmp_path):
        path = tmp_path / "quiet.wav"
        write_wav(path, silence(3000))
        assert segment_wav_file(str(path), GateConfig()) == []

    def test_two_bursts_match_streaming(self, tmp_path):
        samples = np.concatenate(
            [silence(500), tone(1000), silence(1500), tone(800), silence(1200)])
        path = tmp_path / "bursts.wav"
        write_wav(path, samples)
        offline = segment_wav_file(str(path), GateConfig())
        streaming = segment_stream(samples, GateConfig())
        assert len(offline) == 2
        assert offline == streaming

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        write_wav(path, tone(500), channels=2)
        with pytest.raises(UnsupportedFormat):
            segment_wav_file(str(path), GateConfig())

    def test_wrong_rate_rejected(self, tmp_path):
        path = tmp_path / "rate.wav"
        write_wav(path, tone(500), rate=8000)
        with pytest.raises(UnsupportedFormat):
            segment_wav_file(str(path), GateConfig())

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            segment_wav_file("/nonexistent/file.wav", GateConfig())


_burst_layouts = st.lists(
    st.tuples(st.integers(min_value=40, max_value=1500),    # silence gap ms
              st.integers(min_value=40, max_value=2000)),   # burst ms
    min_size=1, max_size=5,
)


def _layout_to_samples(layout):
    parts = []
    for gap, burst in layout:
        parts.append(silence(gap))
        parts.append(tone(burst))
    parts.append(silence(1000))
    return np.concatenate(parts)


@given(layout=_burst_layouts)
@settings(max_examples=60, deadline=None)
def test_segments_disjoint_ordered_bounded(layout):
    config = GateConfig()
    segments = segment_stream(_layout_to_samples(layout), config)
    last_end = -1
    for seg in segments:
        assert seg.start_ms > last_end
        assert seg.end_ms - seg.start_ms >= config.min_speech_ms
        assert seg.end_ms - seg.start_ms <= config.max_utterance_s * 1000 + FRAME_MS
        last_end = seg.end_ms


@given(layout=_burst_layouts)
@settings(max_examples=40, deadline=None)
def test_determinism_and_oracle_boundaries(layout):
    config = GateConfig()
    samples = _layout_to_samples(layout)
    first = segment_stream(samples, config)
    second = segment_stream(samples, config)
    assert first == second
    oracle = oracle_segments(samples, config)
    assert len(first) == len(oracle)
    for seg, (start, end) in zip(first, oracle):
        assert abs(seg.start_ms - start) <= 2 * FRAME_MS
        assert abs(seg.end_ms - end) <= 2 * FRAME_MS


@given(layout=_burst_layouts,
       low=st.floats(min_value=-90, max_value=-40),
       high=st.floats(min_value=-39, max_value=-5))
@settings(max_examples=40, deadline=None)
def test_threshold_monotonicity(layout, low, high):
    samples = _layout_to_samples(layout)
    n_low = len(segment_stream(samples, GateConfig(threshold_dbfs=low)))
    n_high = len(segment_stream(samples, GateConfig(threshold_dbfs=high)))
    assert n_high <= n_low


class TestHallucinationFilter:
    def test_thank_you_discarded(self):
        assert filter_hallucination("Thank you.") is False

    def test_thank_you_for_watching_discarded(self):
        assert filter_hallucination("Thank you for your watching.") is False

    def test_real_sentence_kept(self):
        assert filter_hallucination("Thank you for the help yesterday") is True

    def test_exact_match_after_trim_and_case(self):
        assert filter_hallucination("  THANK YOU.  ") is False

    def test_custom_phrase_list(self):
        assert filter_hallucination("Thank you.", phrases=("bye.",)) is True
        assert filter_hallucination("bye.", phrases=("bye.",)) is False

    def test_default_list_contents(self):
        assert set(DEFAULT_HALLUCINATION_PHRASES) == {
            "thank you.", "thank you for your watching.", "thanks for watching."}
