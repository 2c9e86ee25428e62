"""Solve entropy, exponent and pressure targets on a grid and write a CSV.

    python scripts/spectrum_grid.py --points 21 --out spectrum.csv
"""

import argparse
import csv
import math
import sys

import numpy as np

from ergokit.pressure import BernoulliFamily, PotentialSpec, chi_min, pressure_infimum, spectrum_solve
from ergokit.shift import FullShift


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=21)
    ap.add_argument("--c", type=float, default=1.0, help="weight of the indicator potential c*[1]")
    ap.add_argument("--out", help="CSV path (stdout when omitted)")
    args = ap.parse_args()

    phi = PotentialSpec.indicator((1,), c=args.c)
    p_star = math.exp(args.c) / (1 + math.exp(args.c))
    top = math.log(1 + math.exp(args.c))
    jobs = [
        ("entropy", BernoulliFamily(0.0, 0.5), np.linspace(0, math.log(2), args.points)),
        ("exponent", BernoulliFamily(0.0, 1.0), np.linspace(0, 1, args.points)),
        ("pressure", BernoulliFamily(0.0, p_star), np.linspace(0, top, args.points)[1:]),
    ]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["kind", "target", "p", "achieved", "error"])
    for kind, fam, targets in jobs:
        for v in targets:
            r = spectrum_solve(fam, kind, float(v), phi)
            w.writerow([kind, repr(r.target), repr(r.t), repr(r.achieved), f"{r.error:.3e}"])
    if args.out:
        fh.close()
    val, t = pressure_infimum(BernoulliFamily(0.0, 1.0), phi)
    print(f"P_inf={val:.3e} at p={t:.1e}; chi_min={chi_min(FullShift(2), phi)}", file=sys.stderr)


if __name__ == "__main__":
    main()
