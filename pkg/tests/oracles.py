"""Independent oracles, written before the implementations they check.

Kept deliberately naive: recursive edit alignment with memoization, and an
offline threshold scan for the audio gate that shares no code with the
streaming state machine.
"""

from __future__ import annotations

import math
from functools import lru_cache


def brute_force_counts(ref: tuple, hyp: tuple):
    """(S, D, I) of the minimal-cost alignment with the fewest substitutions.

    Recursive minimal-edit search over (cost, substitutions) pairs, totally
    independent of the DP-table implementation under test.
    """

    @lru_cache(maxsize=None)
    def best(i: int, j: int):
        # returns (cost, subs) lexicographically minimal for ref[i:], hyp[j:]
        if i == len(ref) and j == len(hyp):
            return (0, 0)
        options = []
        if i < len(ref) and j < len(hyp):
            cost, subs = best(i + 1, j + 1)
            if ref[i] == hyp[j]:
                options.append((cost, subs))
            else:
                options.append((cost + 1, subs + 1))
        if i < len(ref):
            cost, subs = best(i + 1, j)
            options.append((cost + 1, subs))
        if j < len(hyp):
            cost, subs = best(i, j + 1)
            options.append((cost + 1, subs))
        return min(options)

    cost, subs = best(0, 0)
    insertions = (cost - subs - (len(ref) - len(hyp))) // 2
    deletions = insertions + (len(ref) - len(hyp))
    return subs, deletions, insertions


def plain_edit_distance(ref: tuple, hyp: tuple) -> int:
    """Unit-cost edit distance, iterative single-row formulation."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        row = [i]
        for j, h in enumerate(hyp, start=1):
            row.append(min(prev[j - 1] + (r != h), prev[j] + 1, row[-1] + 1))
        prev = row
    return prev[-1]


def scan_segments(levels_dbfs, frame_ms, threshold_dbfs, min_speech_ms, hangover_ms,
                  max_utterance_ms):
    """Offline segment scan over per-frame levels; an analytic gate oracle.

    Walks the level sequence once with plain counters (no state-machine
    object) and returns (start_ms, end_ms) segment boundaries.
    """
    segments = []
    run_start = None        # candidate/in-speech start
    in_speech = False
    silence_ms = 0
    for idx, level in enumerate(levels_dbfs):
        t0 = idx * frame_ms
        t1 = t0 + frame_ms
        above = level >= threshold_dbfs
        if not in_speech:
            if above:
                if run_start is None:
                    run_start = t0
                if t1 - run_start >= min_speech_ms:
                    in_speech = True
                    silence_ms = 0
            else:
                run_start = None
        else:
            silence_ms = silence_ms + frame_ms if not above else 0
            if silence_ms >= hangover_ms or t1 - run_start >= max_utterance_ms:
                segments.append((run_start, t1))
                in_speech = False
                run_start = None
                silence_ms = 0
    if in_speech:
        segments.append((run_start, len(levels_dbfs) * frame_ms))
    return segments


def tone_level_dbfs(amplitude: float) -> float:
    """Analytic RMS level of a sine of the given peak amplitude (16-bit)."""
    return 20.0 * math.log10((amplitude / math.sqrt(2.0)) / 32768.0)
