"""Fig. 3 data: free sum of K = 32 Wigner-Levy matrices against the free stable law.

    python scripts/fig3.py --out results/fig3

Entries have range R = Gamma(1+alpha)**(-1/alpha).  Writes fig3_alpha<A>.csv
with the same columns as fig1.
"""

import argparse
import sys
from pathlib import Path

from levyrmt import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/fig3")
    ap.add_argument("--alphas", type=float, nargs="+", default=[1.0, 1.5])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    for a in args.alphas:
        argv = ["fig3", "--alpha", str(a), "--trials", str(args.trials), "--seed", str(args.seed),
                "--out", args.out, "--stem", f"fig3_alpha{a}"]
        if args.workers:
            argv += ["--workers", str(args.workers)]
        rc = cli.run(argv)
        if rc:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
