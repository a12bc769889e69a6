#!/usr/bin/env python3
"""Regenerate the decomposition tables and the sample corpus under data/.

Inputs (all redistributed by public packages):
  --ids      cjkvi-ids `ids.txt` (shipped inside the `cjkradlib` wheel)
  --strokes  JSON char -> stroke-letter string, extracted from the
             `cnchar-order` npm package (MIT)
  --freq     character frequency list `junda.tsv` (shipped in `cjkradlib`)
  --words    word frequency list `leiden_freq_data.txt` (shipped in `hanzipy`)

Ideograph sequences are the IDS decomposition with the structural operators
removed. Components used by fewer than MIN_SHARED characters of the table are
expanded recursively, so the inventory stays in the hundreds. Stroke letters
are mapped onto code points of the CJK Strokes block.
"""
import argparse
import collections
import json
import random
import re

MIN_SHARED = 5
TABLE_SIZE = 3000
SAMPLE_SIZE = 200
CORPUS_SENTENCES = 1000

# cnchar-order stroke classes -> CJK Strokes block symbols (one per class)
STROKE_SYMBOLS = {
    "j": "㇐", "f": "㇑", "s": "㇒", "k": "㇔", "d": "㇝",
    "l": "㇏", "i": "㇀", "c": "㇕", "e": "㇇", "r": "㇆",
    "g": "㇚", "b": "㇄", "u": "㇟", "h": "㇙", "n": "㇜",
    "m": "㇛", "t": "㇁", "y": "㇂", "o": "㇠", "v": "㇅",
    "p": "㇊", "q": "㇎", "a": "㇋", "w": "㇡", "z": "㇉",
    "x": "㇞",
}

# Decompositions fixed by hand so the worked examples stay exact.
OVERRIDES = {
    "驰": "马 也", "池": "氵 也", "施": "方 也", "弛": "弓 也", "地": "土 也",
    "驱": "马 区", "林": "木 木", "森": "木 木 木", "树": "木 对", "木": "木",
}

OPERATORS = {chr(c) for c in range(0x2FF0, 0x2FFC)}


def load_ids(path):
    ids = {}
    with open(path, encoding="utf8") as fh:
        for line in fh:
            if line.startswith(("#", ";")):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) >= 3:
                ids[parts[1]] = parts[2:]
    return ids


def components(ids, ch):
    alts = ids.get(ch)
    if not alts:
        return None
    ids_str = re.sub(r"\[.*?\]", "", alts[0])
    if "&" in ids_str or any("①" <= c <= "⓿" for c in ids_str):
        return None
    parts = [c for c in ids_str if c not in OPERATORS]
    if parts == [ch]:
        return None
    return parts


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ids", required=True)
    ap.add_argument("--strokes", required=True)
    ap.add_argument("--freq", required=True)
    ap.add_argument("--words", required=True)
    ap.add_argument("--out", default="data")
    args = ap.parse_args()

    ids = load_ids(args.ids)
    with open(args.strokes, encoding="utf8") as fh:
        strokes = json.load(fh)
    with open(args.freq, encoding="utf8") as fh:
        ranked = [line.split("\t")[1] for line in fh if "\t" in line]

    chars = [c for c in ranked if c in strokes and c in ids][:TABLE_SIZE]
    for c in OVERRIDES:
        if c not in chars:
            chars.append(c)

    shared = collections.Counter()
    for c in chars:
        for part in set(components(ids, c) or []):
            shared[part] += 1
    primitives = {p for p, n in shared.items() if n >= MIN_SHARED}

    def expand(part, depth=0):
        if part in primitives or depth > 6:
            return [part]
        sub = components(ids, part)
        if not sub:
            return [part]
        return [u for s in sub for u in expand(s, depth + 1)]

    rows = {}
    for c in chars:
        if c in OVERRIDES:
            ideo = OVERRIDES[c].split()
        elif c in primitives:
            ideo = [c]
        else:
            sub = components(ids, c)
            ideo = [u for s in sub for u in expand(s)] if sub else [c]
        stroke = [STROKE_SYMBOLS[l] for l in strokes[c] if l in STROKE_SYMBOLS]
        if not stroke:
            continue
        rows[c] = (ideo, stroke)

    def write_table(path, keys, title):
        with open(path, "w", encoding="utf8") as fh:
            fh.write(f"# {title}\n")
            fh.write("# character<TAB>ideographs<TAB>strokes\n")
            for c in sorted(keys):
                ideo, stroke = rows[c]
                fh.write(f"{c}\t{' '.join(ideo)}\t{' '.join(stroke)}\n")

    write_table(f"{args.out}/common_table.tsv", rows.keys(),
                f"{len(rows)} frequent characters")

    sample = [c for c in OVERRIDES if c in rows]
    for extra in "区方弓土马也对又寸":
        if extra in rows and extra not in sample:
            sample.append(extra)
    for c in chars:
        if len(sample) >= SAMPLE_SIZE:
            break
        if c in rows and c not in sample:
            sample.append(c)
    write_table(f"{args.out}/sample_table.tsv", sample,
                f"{len(sample)}-character sample table")

    words = []
    with open(args.words, encoding="utf8") as fh:
        for line in fh:
            w, _, f = line.strip().rpartition(",")
            if w and 1 <= len(w) <= 4 and all(c in rows for c in w):
                words.append((w, int(f)))
    rng = random.Random(20180601)
    population = [w for w, _ in words]
    weights = [f ** 0.35 for _, f in words]
    fillers = ["2018", "CPU", "3", "A", "。", "，", "の", "が", "を"]
    with open(f"{args.out}/sample_corpus.txt", "w", encoding="utf8") as fh:
        for _ in range(CORPUS_SENTENCES):
            n = rng.randint(8, 16)
            sent = rng.choices(population, weights, k=n)
            if rng.random() < 0.3:
                sent.insert(rng.randrange(len(sent) + 1), rng.choice(fillers))
            fh.write(" ".join(sent) + "\n")


if __name__ == "__main__":
    main()
