"""Fig. 1 data: Wigner-Levy density against Monte Carlo, N = 200, R = 1.

    python scripts/fig1.py --out results/fig1

Writes fig1_alpha<A>.csv (columns lambda, density, model, mc_density,
mc_trial_stderr, mc_stderr) and a manifest per alpha.  Running parameters are
cached in the output directory, so a rerun skips the solve.
"""

import argparse
import sys
from pathlib import Path

from levyrmt import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/fig1")
    ap.add_argument("--alphas", type=float, nargs="+", default=[1.0, 1.5])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for a in args.alphas:
        argv = ["fig1", "--alpha", str(a), "--trials", str(args.trials), "--seed", str(args.seed),
                "--out", str(out), "--stem", f"fig1_alpha{a}", "--params", str(out / f"running_params_{a}.json")]
        if args.workers:
            argv += ["--workers", str(args.workers)]
        rc = cli.run(argv)
        if rc:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
