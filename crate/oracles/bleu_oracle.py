"""Corpus BLEU-4 reference values.

Tokens are alphanumeric runs or single punctuation characters. A precision
order with zero matches uses 0.1 matches instead; orders with no hypothesis
n-grams are left out of the geometric mean.
"""

import math
import os
import re
from collections import Counter

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")
TOKEN = re.compile(r"[^\W_]+|[^\s\w]|_", re.UNICODE)

CASES = [
    (["the cat sat on the mat"], ["the cat sat on a mat"]),
    (["the cat sat on the mat"], ["the cat sat on the mat"]),
    (["a b c d e"], ["a b x d e f g"]),
    (["Sales rise, then fall."], ["Sales rise sharply, then fall slowly."]),
    (["one two"], ["one two three"]),
    (["nothing here"], ["completely different words"]),
    (["the line rises", "bars are blue"], ["the line rises quickly", "the bars are blue"]),
]


def tokens(s):
    return TOKEN.findall(s)


def ngrams(toks, n):
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def corpus_bleu(hyps, refs):
    matches, totals = [0] * 4, [0] * 4
    hl = rl = 0
    for h, r in zip(hyps, refs):
        ht, rt = tokens(h), tokens(r)
        hl += len(ht)
        rl += len(rt)
        for n in range(1, 5):
            hc, rc = ngrams(ht, n), ngrams(rt, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += sum(hc.values())
    if hl == 0 or matches[0] == 0:
        return 0.0
    logs = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        logs.append(math.log((m if m > 0 else 0.1) / t))
    bp = 1.0 if hl > rl else math.exp(1 - rl / hl)
    return 100.0 * bp * math.exp(sum(logs) / len(logs))


def main():
    lines = []
    for hyps, refs in CASES:
        score = corpus_bleu(hyps, refs)
        lines.append(f"{' | '.join(hyps)}\t{' | '.join(refs)}\t{score:.10f}")
    with open(os.path.join(ROOT, "bleu_oracle.tsv"), "w") as f:
        f.write("\n".join(lines) + "\n")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
