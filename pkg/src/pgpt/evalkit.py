"""Word-error-rate scoring and benchmark reporting.

WER = (S + D + I) / N1 over a minimal unit-cost edit alignment of the
hypothesis against the reference, where S/D/I are substitution, deletion and
insertion counts and N1 is the reference word count.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

NORMALIZATION_POLICY = "lowercase; strip punctuation except intra-word apostrophes; collapse whitespace"

_PUNCT_RE = re.compile(r"[^\w\s']", re.UNICODE)
_LOOSE_APOSTROPHE_RE = re.compile(r"(?<!\w)'|'(?!\w)")


class EmptyReference(Exception):
    """WER is undefined when the reference has no words."""


class EmptyReport(Exception):
    pass


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation (keeping intra-word apostrophes), split."""
    text = text.lower()
    text = _PUNCT_RE.sub(" ", text)
    text = _LOOSE_APOSTROPHE_RE.sub(" ", text)
    return text.split()


@dataclass(frozen=True)
class AlignmentCounts:
    S: int
    D: int
    I: int
    N1: int


@dataclass(frozen=True)
class WerResult:
    counts: AlignmentCounts
    wer: float


def align(ref_tokens: list[str], hyp_tokens: list[str]) -> AlignmentCounts:
    """Minimal edit alignment with deterministic counts.

    Among all minimal-cost alignments, the one with the most matches (fewest
    substitutions) is selected.  Since D - I always equals len(ref) -
    len(hyp), fixing S fixes D and I too, so the counts are fully determined
    and swap-symmetric: align(hyp, ref) swaps D and I and preserves S.
    """
    n, m = len(ref_tokens), len(hyp_tokens)
    if n == 0 and m > 0:
        raise EmptyReference("reference is empty but hypothesis is not")
    # d[i][j] = edit distance between ref[:i] and hyp[:j]
    # s[i][j] = minimal substitution count among minimal-cost alignments
    d = [[0] * (m + 1) for _ in range(n + 1)]
    s = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d[i][0] = i
    for j in range(1, m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = ref_tokens[i - 1]
        drow, dprev = d[i], d[i - 1]
        srow, sprev = s[i], s[i - 1]
        for j in range(1, m + 1):
            sub = 0 if ri == hyp_tokens[j - 1] else 1
            best = min(dprev[j - 1] + sub, dprev[j] + 1, drow[j - 1] + 1)
            drow[j] = best
            cands = []
            if dprev[j - 1] + sub == best:
                cands.append(sprev[j - 1] + sub)
            if dprev[j] + 1 == best:
                cands.append(sprev[j])
            if drow[j - 1] + 1 == best:
                cands.append(srow[j - 1])
            srow[j] = min(cands)
    dist = d[n][m]
    subs = s[n][m]
    ins = (dist - subs - (n - m)) // 2
    dels = ins + (n - m)
    return AlignmentCounts(S=subs, D=dels, I=ins, N1=n)


def compute_wer(counts: AlignmentCounts) -> WerResult:
    if counts.N1 == 0:
        raise EmptyReference("N1 = 0, WER undefined")
    return WerResult(counts, (counts.S + counts.D + counts.I) / counts.N1)


def score(reference: str, hypothesis: str) -> WerResult:
    """Normalize both texts and compute WER in one step."""
    return compute_wer(align(normalize(reference), normalize(hypothesis)))


@dataclass(frozen=True)
class BenchRow:
    group: str
    backend_id: str
    n_utterances: int
    n_failed: int
    mean_wer: float
    mean_recognition_time_ms: float


@dataclass(frozen=True)
class BenchReport:
    rows: list[BenchRow]


def bench_run(manifest, backend, gate_config=None) -> BenchReport:
    """Transcribe each manifest entry, score it and aggregate per group.

    Entries whose transcription fails (empty text or a backend error) are
    excluded from the means; their count is reported per row.
    """
    from .asr import AsrError, transcribe

    per_group: dict[str, list[tuple[float, float]]] = {}
    failures: dict[str, int] = {}
    for entry in manifest:
        per_group.setdefault(entry.group, [])
        failures.setdefault(entry.group, 0)
        try:
            result = transcribe(entry, backend)
        except AsrError:
            failures[entry.group] += 1
            continue
        wer = score(entry.reference_text, result.text).wer
        per_group[entry.group].append((wer, result.recognition_time_ms))
    rows = []
    for group in sorted(per_group):
        scored = per_group[group]
        n = len(scored)
        mean_wer = sum(w for w, _ in scored) / n if n else float("nan")
        mean_time = sum(t for _, t in scored) / n if n else float("nan")
        rows.append(
            BenchRow(
                group=group,
                backend_id=backend.backend_id,
                n_utterances=n,
                n_failed=failures[group],
                mean_wer=mean_wer,
                mean_recognition_time_ms=mean_time,
            )
        )
    return BenchReport(rows=rows)


def render_report_csv(report: BenchReport) -> str:
    if not report.rows:
        raise EmptyReport("report has no rows")
    buf = io.StringIO()
    buf.write(f"# normalization: {NORMALIZATION_POLICY}; pgpt 0.1.0\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group", "backend", "n_utterances", "mean_wer", "mean_recognition_time_ms"])
    for row in sorted(report.rows, key=lambda r: (r.group, r.backend_id)):
        writer.writerow(
            [row.group, row.backend_id, row.n_utterances,
             f"{row.mean_wer:.4f}", f"{row.mean_recognition_time_ms:.4f}"]
        )
    return buf.getvalue()


def render_report_json(report: BenchReport) -> str:
    import json

    if not report.rows:
        raise EmptyReport("report has no rows")
    return json.dumps(
        {
            "normalization": NORMALIZATION_POLICY,
            "rows": [
                {
                    "group": r.group,
                    "backend": r.backend_id,
                    "n_utterances": r.n_utterances,
                    "n_failed": r.n_failed,
                    "mean_wer": round(r.mean_wer, 4),
                    "mean_recognition_time_ms": round(r.mean_recognition_time_ms, 4),
                }
                for r in sorted(report.rows, key=lambda r: (r.group, r.backend_id))
            ],
        },
        indent=2,
    )


def emit_report(report: BenchReport, fmt: str, path: str) -> None:
    if fmt == "csv":
        text = render_report_csv(report)
    elif fmt == "json":
        text = render_report_json(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
