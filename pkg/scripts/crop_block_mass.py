"""Scan cartesian products for dual witnesses whose block-mass link fails.

For q > r the crop step discards members of the covering family whose
relative l^r size on U is small. On products whose slabs are much heavier
than U in nu this can discard all of U, so the block mass drops below c7.
The scan lists every seed where the checker reports that.
"""

import argparse

import numpy as np

from outerlp.duality import build_dual, verify_duality
from outerlp.settings import make_cartesian


def instance(seed):
    st = make_cartesian([2, 2, 2], seed=seed) if seed % 2 else make_cartesian([3, 2, 2], seed=seed)
    rng = np.random.default_rng(seed)
    n = st.space.n
    f = rng.uniform(0, 3, n) ** 3 * (rng.random(n) < 0.8)
    return st, f


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=6.0)
    ap.add_argument("--r", type=float, default=1.2)
    args = ap.parse_args()
    failing = []
    for seed in range(args.seeds):
        st, f = instance(seed)
        wit = build_dual(st.space, f, args.p, args.q, args.r, st.covering, K=st.K)
        rep = verify_duality(st.space, f, wit, spec=st.covering)
        bad = [l for l in rep.links if not l["ok"]]
        if bad:
            failing.append(seed)
            names = ", ".join(f"{l['link']} {l['realized']:.3g} < {l['bound']:.3g}" for l in bad)
            print(f"seed {seed}: {names}; c_lower {rep.c_lower:.3g}")
    print(f"{len(failing)} of {args.seeds} seeds fail: {failing}")


if __name__ == "__main__":
    main()
