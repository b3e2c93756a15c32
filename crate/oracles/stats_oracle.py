"""Independent statistics for the fixture corpus.

Re-implements tag stripping, sentence splitting and level assignment from
scratch and writes the expected `stats` output and rule rejections next to
the fixture.
"""

import json
import os
import re

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures", "corpus")
TAG = re.compile(r"<(/?)([A-Za-z][A-Za-z0-9_-]*)>")


def l1_tags():
    out = set()
    with open(os.path.join(ROOT, "tags.txt")) as f:
        for line in f:
            line = line.strip()
            if line.startswith("L1:"):
                out.add(line[3:])
    return out


def strip(markup):
    """Plain text plus (start, end, tag) spans in character offsets."""
    text, spans, pos, open_tag = [], [], 0, None
    for m in TAG.finditer(markup):
        chunk = markup[pos:m.start()]
        text.append(chunk)
        offset = sum(len(t) for t in text)
        if m.group(1) == "":
            open_tag = (m.group(2), offset)
        else:
            spans.append((open_tag[1], offset, open_tag[0]))
            open_tag = None
        pos = m.end()
    text.append(markup[pos:])
    return "".join(text), spans


def sentences(text):
    out, start = [], 0
    for i, c in enumerate(text):
        if c in ".!?" and (i + 1 == len(text) or text[i + 1].isspace()):
            out.append((start, i + 1))
            start = i + 1
            while start < len(text) and text[start].isspace():
                start += 1
    if start < len(text) and text[start:].strip():
        out.append((start, len(text)))
    return out


def main():
    l1 = l1_tags()
    records = [json.loads(line) for line in open(os.path.join(ROOT, "index.jsonl")) if line.strip()]
    n = words = n_sent = n_l1 = 0
    rejections = []
    for r in records:
        text, spans = strip(r["summary_markup"])
        sents = sentences(text)
        levels = []
        for s, e in sents:
            is_l1 = any(a < e and s < b and tag in l1 for a, b, tag in spans)
            levels.append("L1" if is_l1 else "L2L3")
        n += 1
        words += len(text.split())
        n_sent += len(sents)
        n_l1 += levels.count("L1")
        reasons = []
        if len(sents) < 3:
            reasons.append("TooFewSentences")
        if "L1" not in levels:
            reasons.append("MissingL1")
        if "L2L3" not in levels:
            reasons.append("MissingL2L3")
        if reasons:
            rejections.append(f"{r['id']} {','.join(reasons)}")
    stats = [
        f"record_count={n}",
        f"sentence_count={n_sent}",
        f"word_count={words}",
        f"l1_sentences={n_l1}",
        f"avg_sentence_count={n_sent / n:.6f}",
        f"avg_word_count={words / n:.6f}",
        f"l1_ratio={n_l1 / n_sent:.6f}",
        f"l2l3_ratio={(n_sent - n_l1) / n_sent:.6f}",
    ]
    with open(os.path.join(ROOT, "stats_oracle.txt"), "w") as f:
        f.write("\n".join(stats))
    with open(os.path.join(ROOT, "rejections_oracle.txt"), "w") as f:
        f.write("\n".join(rejections) + "\n")
    print("\n".join(stats))
    print("\n".join(rejections))


if __name__ == "__main__":
    main()
