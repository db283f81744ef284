"""Ratio of the q = r double iterated norm to the single iterated one on random spaces."""

import argparse
import json

from outerlp.suites import SuiteConfig, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=300)
    args = ap.parse_args()
    res = run_suite("collapse", SuiteConfig(seeds=args.seeds))
    print(json.dumps(res.summary, indent=2))


if __name__ == "__main__":
    main()
