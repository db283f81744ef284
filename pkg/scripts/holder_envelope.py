"""Duality envelope over the structured corpus, one CSV row per (seed, exponents)."""

import argparse
import json

from outerlp.suites import SuiteConfig, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--budget", type=int, default=8)
    ap.add_argument("--out", default="holder_envelope.csv")
    args = ap.parse_args()
    res = run_suite("holder", SuiteConfig(seeds=args.seeds, budget=args.budget))
    keys = list(res.rows[0])
    with open(args.out, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in res.rows:
            fh.write(",".join(str(row[k]) for k in keys) + "\n")
    print(json.dumps(res.summary, indent=2))
    print("passed" if res.passed else f"FAILED ({len(res.witnesses)} witnesses)")


if __name__ == "__main__":
    main()
