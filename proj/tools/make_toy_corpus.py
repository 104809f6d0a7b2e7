#!/usr/bin/env python3
"""Generates the bundled toy corpus under data/toy/.

train.tsv holds 60 documents at three proficiency levels (0, 1, 2). Higher
levels are longer and draw on a richer vocabulary, so token count alone
separates them. reference.txt is an independent sample used to build
unigram.tsv with add-one smoothing.
"""

import random
import sys
from collections import Counter
from pathlib import Path

BASIC = ("i you we he she it is are was like go see have a the my and to "
         "dog cat home school food day good big small run eat play").split()
MIDDLE = ("because yesterday friends weekend usually often travel family "
          "weather morning together decided interesting finally people city "
          "learn study write visit enjoy remember").split()
ADVANCED = ("consequently nevertheless perspective significant environment "
            "opportunity responsibility demonstrate evaluate phenomenon "
            "contribute sustainable approximately furthermore analysis "
            "community development emphasize acknowledge substantial").split()
PUNCT = [".", ",", "!", "?"]

LENGTHS = {0: (4, 10), 1: (16, 28), 2: (40, 64)}
POOLS = {0: BASIC, 1: BASIC + MIDDLE, 2: BASIC + MIDDLE + ADVANCED}


def sentence(rng, pool, n):
    words = [rng.choice(pool) for _ in range(n)]
    words[0] = words[0].capitalize()
    return " ".join(words) + rng.choice(PUNCT[:2] if n > 6 else PUNCT)


def document(rng, level):
    lo, hi = LENGTHS[level]
    remaining = rng.randint(lo, hi)
    parts = []
    while remaining > 0:
        n = min(remaining, rng.randint(3, 9))
        parts.append(sentence(rng, POOLS[level], n))
        remaining -= n
    return " ".join(parts)


def tokens(text):
    out = []
    for chunk in text.split():
        head = []
        tail = []
        while chunk and not chunk[0].isalnum():
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and not chunk[-1].isalnum():
            tail.insert(0, chunk[-1])
            chunk = chunk[:-1]
        out += head + ([chunk] if chunk else []) + tail
    return out


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240607)
    rows = [(level, document(rng, level)) for level in (0, 1, 2) for _ in range(20)]
    rng.shuffle(rows)
    (out / "train.tsv").write_text("".join(f"{lvl}\t{text}\n" for lvl, text in rows))

    ref = random.Random(7)
    reference = [document(ref, ref.choice((0, 1, 2))) for _ in range(200)]
    (out / "reference.txt").write_text("".join(line + "\n" for line in reference))

    counts = Counter(t.lower() for line in reference for t in tokens(line))
    denom = sum(counts.values()) + len(counts) + 1
    lines = [f"{tok}\t{(c + 1) / denom!r}\n" for tok, c in sorted(counts.items())]
    lines.append(f"<unk>\t{1 / denom!r}\n")
    (out / "unigram.tsv").write_text("".join(lines))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "toy")
