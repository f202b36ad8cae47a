#!/usr/bin/env python3
"""TV decay of endpoint ensembles against the certified envelope.

Runs the verifier for one preset from its worst-start candidate and writes
the decay curve as CSV.  Defaults reproduce the hemisphere-cap experiment at
a desk-friendly scale; crank --replicates for tighter estimates.

    python3 scripts/tv_decay_experiment.py --target cap:sphere:2:psi=1.5707963267948966 \
        --m 1 --w 6.283185307179586 --n-list 1,5,10,20 --replicates 20000
"""

import argparse
import math
import sys

from geoslice import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target", default="cap:sphere:2:psi=1.5707963267948966")
    ap.add_argument("--m", default="1")
    ap.add_argument("--w", type=float, default=2 * math.pi)
    ap.add_argument("--n-list", default="1,5,10,20")
    ap.add_argument("--replicates", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=20260810)
    ap.add_argument("--out", default="tv_decay.csv")
    args = ap.parse_args()
    return cli.main(
        [
            "verify",
            "--target", args.target,
            "--m", str(args.m),
            "--w", str(args.w),
            "--n-list", args.n_list,
            "--replicates", str(args.replicates),
            "--seed", str(args.seed),
            "--out", args.out,
            "--gnuplot",
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
