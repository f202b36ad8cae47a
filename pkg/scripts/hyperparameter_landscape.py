#!/usr/bin/env python3
"""Sweep the certified gain q(m, w) over widths for several expansion budgets.

Writes one CSV row per (m, w) pair (empty q where the certificate does not
apply) and prints the analytic optimum with its landscape regime.  Useful for
eyeballing the four qualitative regimes as lambda moves relative to the
support diameter.

    python3 scripts/hyperparameter_landscape.py --diam 1.0 --gap 0.1 --lam 3.0
"""

import argparse
import math
import sys

import numpy as np

from geoslice import bounds


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--diam", type=float, default=1.0)
    ap.add_argument("--gap", type=float, default=0.1)
    ap.add_argument("--lam", type=float, default=math.inf,
                    help="sup of geodesic section diameters (inf allowed)")
    ap.add_argument("--m-list", default="1,2,3,5,10,inf")
    ap.add_argument("--w-points", type=int, default=400)
    ap.add_argument("--out", default="q_landscape.csv")
    args = ap.parse_args()

    ms = [math.inf if s.strip() == "inf" else int(s) for s in args.m_list.split(",")]
    if math.isinf(args.lam):
        ms = [m for m in ms if not math.isinf(m)]
    w_hi = 30.0 * args.diam if math.isinf(args.lam) else 30.0 * max(args.diam, args.lam)
    ws = np.geomspace(0.05 * args.diam, w_hi, args.w_points)

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("m,w,q\n")
        for m in ms:
            for w in ws:
                try:
                    q = bounds.hyperparameter_gain(m, float(w), args.diam, args.gap, args.lam)
                    fh.write(f"{'inf' if math.isinf(m) else m},{float(w)!r},{q!r}\n")
                except bounds.ApplicabilityError:
                    fh.write(f"{'inf' if math.isinf(m) else m},{float(w)!r},\n")

    opt = bounds.optimal_hyperparameters(args.diam, args.gap, args.lam)
    m_lab = "inf" if math.isinf(opt.m) else int(opt.m)
    print(f"wrote {args.out}")
    print(
        f"regime {opt.regime}: q* = {opt.q:.6g} at m = {m_lab}, w = {opt.w_label}"
        + ("" if opt.attained else " (supremum, not attained)")
        + (f"  [{opt.note}]" if opt.note else "")
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
