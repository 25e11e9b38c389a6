"""Regenerate the Matrix Market test fixtures under tests/fixtures/.

Two small least-squares matrices in SuiteSparse-style storage:

* survey219.mtx -- 219x85 sparse coordinate file shaped like a survey
  adjustment problem: one anchoring entry per column plus random +-1
  observation rows. Well conditioned.
* lattice60.mtx -- 60x60 second-difference matrix stored in symmetric
  coordinate form. Moderately ill conditioned, exercises the symmetric
  reader path.

The files are committed; rerunning this script reproduces them bit for bit.
"""

from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def write_survey(path, m=219, n=85, seed=219):
    rng = np.random.default_rng(seed)
    entries = []
    for j in range(n):  # anchor every column
        entries.append((j + 1, j + 1, 2.0))
    for i in range(n, m):  # paired +-1 observation rows
        c1, c2 = rng.choice(n, size=2, replace=False)
        entries.append((i + 1, int(c1) + 1, 1.0))
        entries.append((i + 1, int(c2) + 1, -1.0))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write("% synthetic survey-adjustment style least squares matrix\n")
        fh.write(f"{m} {n} {len(entries)}\n")
        for i, j, v in entries:
            fh.write(f"{i} {j} {v!r}\n")


def write_lattice(path, n=60):
    entries = [(i + 1, i + 1, 2.0) for i in range(n)]
    entries += [(i + 2, i + 1, -1.0) for i in range(n - 1)]
    entries.sort()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write("% 1-d second-difference operator, lower triangle stored\n")
        fh.write(f"{n} {n} {len(entries)}\n")
        for i, j, v in entries:
            fh.write(f"{i} {j} {v!r}\n")


if __name__ == "__main__":
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_survey(FIXTURES / "survey219.mtx")
    write_lattice(FIXTURES / "lattice60.mtx")
    print(f"wrote fixtures to {FIXTURES}")
