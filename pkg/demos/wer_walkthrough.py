"""Walk through WER scoring on a handful of reference/hypothesis pairs.

    python3 demos/wer_walkthrough.py
"""

from pgpt.evalkit import align, compute_wer, normalize

PAIRS = [
    ("the cat sat on the mat", "the cat sat on the mat"),
    ("the cat sat on the mat", "the bat sat on a mat"),
    ("turn left at the light", "turn left at light"),
    ("hello", "hello hello hello"),
    ("She said, \"don't stop!\"", "she said don't stop"),
]


def main():
    for ref, hyp in PAIRS:
        r, h = normalize(ref), normalize(hyp)
        counts = align(r, h)
        result = compute_wer(counts)
        print(f"ref: {ref!r}")
        print(f"hyp: {hyp!r}")
        print(f"  S={counts.S} D={counts.D} I={counts.I} N={counts.N1}"
              f"  WER={result.wer:.4f}")
        print()


if __name__ == "__main__":
    main()
