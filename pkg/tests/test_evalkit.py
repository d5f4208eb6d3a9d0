import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_counts, plain_edit_distance
from pgpt.evalkit import (
    AlignmentCounts,
    BenchReport,
    BenchRow,
    EmptyReference,
    EmptyReport,
    align,
    compute_wer,
    normalize,
    render_report_csv,
    score,
)


class TestNormalize:
    def test_punctuation_stripped(self):
        assert normalize("Hello, World!") == ["hello", "world"]

    def test_intra_word_apostrophe_kept(self):
        assert normalize("don't stop") == ["don't", "stop"]

    def test_whitespace_collapsed(self):
        assert normalize("  a   b ") == ["a", "b"]

    def test_loose_apostrophes_dropped(self):
        assert normalize("'quoted' words") == ["quoted", "words"]

    def test_empty(self):
        assert normalize("") == []


class TestAlign:
    def test_identity(self):
        assert align(["the", "cat"], ["the", "cat"]) == AlignmentCounts(0, 0, 0, 2)

    def test_two_deletions(self):
        counts = align(["the", "cat", "sat", "on", "the", "mat"], ["the", "cat", "sat", "mat"])
        assert counts == AlignmentCounts(S=0, D=2, I=0, N1=6)

    def test_single_substitution(self):
        assert align(["a"], ["b"]) == AlignmentCounts(S=1, D=0, I=0, N1=1)

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            align([], ["word"])

    def test_empty_hypothesis_all_deletions(self):
        assert align(["a", "b"], []) == AlignmentCounts(S=0, D=2, I=0, N1=2)


class TestComputeWer:
    def test_perfect(self):
        assert compute_wer(AlignmentCounts(0, 0, 0, 5)).wer == 0.0

    def test_eq1_spot_value(self):
        assert compute_wer(AlignmentCounts(1, 1, 1, 4)).wer == 0.75

    def test_wer_above_one(self):
        assert compute_wer(AlignmentCounts(0, 0, 6, 3)).wer == 2.0

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            compute_wer(AlignmentCounts(0, 0, 0, 0))


_token_lists = st.lists(st.sampled_from("abcde"), min_size=0, max_size=12)


@given(ref=_token_lists.filter(bool), hyp=_token_lists)
@settings(max_examples=500)
def test_oracle_equivalence(ref, hyp):
    counts = align(ref, hyp)
    s, d, i = brute_force_counts(tuple(ref), tuple(hyp))
    assert (counts.S, counts.D, counts.I) == (s, d, i)
    assert counts.S + counts.D + counts.I == plain_edit_distance(tuple(ref), tuple(hyp))


@given(ref=_token_lists.filter(bool), hyp=_token_lists.filter(bool))
@settings(max_examples=300)
def test_swap_duality(ref, hyp):
    a = align(ref, hyp)
    b = align(hyp, ref)
    assert (a.S, a.D, a.I) == (b.S, b.I, b.D)


@given(ref=_token_lists.filter(bool), hyp=_token_lists)
@settings(max_examples=300)
def test_wer_zero_iff_equal(ref, hyp):
    result = compute_wer(align(ref, hyp))
    assert (result.wer == 0.0) == (ref == hyp)


@given(ref=_token_lists.filter(bool), extra=st.lists(st.sampled_from("abcde"), min_size=1, max_size=5))
@settings(max_examples=200)
def test_insertion_only(ref, extra):
    counts = align(ref, ref + extra)
    assert (counts.S, counts.D, counts.I) == (0, 0, len(extra))


def test_bulk_oracle_random():
    rng = random.Random(42)
    for _ in range(2000):
        ref = [rng.choice("abcde") for _ in range(rng.randint(1, 12))]
        hyp = [rng.choice("abcde") for _ in range(rng.randint(0, 12))]
        counts = align(ref, hyp)
        assert (counts.S, counts.D, counts.I) == brute_force_counts(tuple(ref), tuple(hyp))


def test_score_composes_normalize():
    assert score("Hello, World!", "hello world").wer == 0.0


class TestReport:
    def _report(self):
        return BenchReport(rows=[
            BenchRow("dialog", "mock", 2, 0, 0.01716, 120.0),
            BenchRow("accent", "mock", 3, 1, 0.5, 250.5),
        ])

    def test_csv_shape_and_rounding(self):
        text = render_report_csv(self._report())
        lines = text.splitlines()
        assert lines[0].startswith("# normalization:")
        assert lines[1] == "group,backend,n_utterances,mean_wer,mean_recognition_time_ms"
        # rows sorted by (group, backend); 4-decimal floats
        assert lines[2] == "accent,mock,3,0.5000,250.5000"
        assert lines[3] == "dialog,mock,2,0.0172,120.0000"

    def test_empty_report_rejected(self):
        with pytest.raises(EmptyReport):
            render_report_csv(BenchReport(rows=[]))
