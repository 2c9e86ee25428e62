"""Print ln|L_n|/n and the fitted slope for the fixture spaces.

    python scripts/entropy_series.py --n-max 14
"""

import argparse
import math

from ergokit.entropy import EpsScale, entropy_estimate
from ergokit.shift import FullShift, example_hereditary, example_union, golden_mean


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=14)
    ap.add_argument("--scale", type=int, default=1)
    args = ap.parse_args()

    spaces = {
        "full2": FullShift(2),
        "golden": golden_mean(),
        "hereditary": example_hereditary(),
        "union": example_union(),
    }
    scale = EpsScale(args.scale)
    print(f"{'space':<11} {'n':>3} {'count':>8} {'rate':>9}")
    for name, sp in spaces.items():
        est = entropy_estimate(sp, args.n_max, scale)
        for n, c in enumerate(est.counts, start=1):
            print(f"{name:<11} {n:>3} {c:>8} {math.log(c) / n:>9.5f}")
        ref = "-" if est.reference is None else f"{est.reference:.6f}"
        print(f"{name:<11} slope={est.slope:.6f} reference={ref}\n")


if __name__ == "__main__":
    main()
