"""Run the Lambda construction on the full 2-shift and print every check.

Defaults reproduce the desk instance (h0=0.3, beta0=0.15, eta0=0.4, n=3, M=10).
"""

import argparse
import json

from ergokit.construction import run_construction
from ergokit.measures import MarkovMeasure
from ergokit.shift import FullShift


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h0", type=float, default=0.3)
    ap.add_argument("--beta0", type=float, default=0.15)
    ap.add_argument("--eta0", type=float, default=0.4)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--M", type=int, default=10)
    ap.add_argument("--p", type=float, default=0.5, help="Bernoulli parameter of the target measure")
    ap.add_argument("--json", action="store_true", help="dump the full report")
    args = ap.parse_args()

    rep = run_construction(
        FullShift(2), MarkovMeasure.bernoulli(args.p), args.h0, args.beta0, args.eta0, args.depth, M=args.M
    )
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2, sort_keys=True, default=str))
        return
    p = rep.params
    print(f"eta={p.eta:.4g} beta={p.beta:.4g} T={p.T} delta1={p.delta1:.4g} delta2={p.delta2:.4g} M1={p.M1}")
    for c in p.ledger:
        print(f"  {'ok ' if c.holds else 'BAD'} {c.name:<45} margin {c.margin:+.4g}")
    lam = rep.lam
    print(f"|Gamma|={len(lam.gamma.words)}  |Y|={len(lam.y_words)}  |Lambda|={len(lam.words)} at length {lam.length}")
    for b in rep.bounds:
        print(f"  {'ok ' if b.holds else 'BAD'} {b.name}: {b.lhs} vs {b.rhs}")
    w = rep.window
    print(f"window [{w.lower:.4f}, {w.upper:.4f}] inside ({w.low_edge:.4f}, {w.high_edge:.4f})  slack {w.slack:.4f}")
    print(f"max D(E, mu)={rep.max_measure_distance:.4f} < 3 eta={3 * p.eta:.4f}")
    print(f"factors at {rep.factor_length}: {rep.factor_count} of {rep.full_count}")
    for name, ok in rep.checks.items():
        print(f"{name:<22} {ok}")


if __name__ == "__main__":
    main()
