"""Norm tables of 1_X on both blow-up families and the growth slopes of the first.

Writes ``first.csv``, ``second.csv`` and ``slopes.csv`` into ``--out``.
"""

import argparse
import csv
import os

from outerlp.suites import counterexample_rows, growth_slope

SLOPE_EXPONENTS = [(2.0, 3.0, 2.0), (2.0, 2.0, 1.5), (1.0, 4.0, 1.0), (3.0, 6.0, 2.0)]


def write(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--m-max", type=int, default=8)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    first = []
    for r in (1.0, 2.0, 4.0):
        first += counterexample_rows("first", range(1, args.m_max + 1), 1.0, 1.0, r)
    write(os.path.join(args.out, "first.csv"), first)

    second = []
    for r in (0.5, 1.0):
        second += counterexample_rows("second", range(1, min(args.m_max, 6) + 1), 1.0, 1.0, r)
    write(os.path.join(args.out, "second.csv"), second)

    slopes = []
    for p, q, r in SLOPE_EXPONENTS:
        predicted = 1 / p - 1 / q + 1 / r
        slope = growth_slope(p, q, r)
        slopes.append({"p": p, "q": q, "r": r, "slope": slope, "predicted": predicted})
        print(f"(p,q,r)=({p},{q},{r}) slope {slope:.4f} predicted {predicted:.4f}")
    write(os.path.join(args.out, "slopes.csv"), slopes)


if __name__ == "__main__":
    main()
