"""Fig. 2 data: level spacings of K**-1/2 sum_i O_i D_i O_i^T, N = 200.

    python scripts/fig2.py --out results/fig2

Writes fig2_K<K>.csv (columns s, mc_density, mc_stderr, poisson,
wigner_surmise) for K = 1 and K = 2; the manifests carry the KS distances.
"""

import argparse
import sys
from pathlib import Path

from levyrmt import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/fig2")
    ap.add_argument("--K", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    for k in args.K:
        argv = ["fig2", "--K", str(k), "--trials", str(args.trials), "--seed", str(args.seed),
                "--out", args.out, "--stem", f"fig2_K{k}"]
        if args.workers:
            argv += ["--workers", str(args.workers)]
        rc = cli.run(argv)
        if rc:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
