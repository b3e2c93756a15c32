"""Greedy max-min Hamming permutation set, computed with numpy.

Writes fixtures/codebook-g9-n100.txt in the same text format the library
reads, so the Rust build can be compared byte for byte.
"""

import itertools
import os

import numpy as np

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")


def build(count, grid):
    perms = np.array(list(itertools.permutations(range(grid))), dtype=np.int8)
    nearest = np.full(len(perms), grid + 1, dtype=np.int16)
    chosen = [0]
    d_min = None
    while len(chosen) < count:
        d = (perms != perms[chosen[-1]]).sum(axis=1)
        nearest = np.minimum(nearest, d)
        nxt = int(np.argmax(nearest))  # first maximum = lexicographically smallest
        d_min = int(nearest[nxt])
        chosen.append(nxt)
    return perms[chosen], d_min


def main():
    count, grid = 100, 9
    entries, d_min = build(count, grid)
    lines = [f"# grid={grid} count={count} algorithm=greedy-maxmin-hamming-v1 d_min={d_min}"]
    lines += [",".join(str(int(x)) for x in row) for row in entries]
    with open(os.path.join(ROOT, f"codebook-g{grid}-n{count}.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"d_min={d_min}")


if __name__ == "__main__":
    main()
