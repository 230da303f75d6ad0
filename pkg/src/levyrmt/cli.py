"""Command-line driver: ``levyrmt <subcommand> [options]``.

Every subcommand writes ``<stem>.csv`` (header row, 17 significant digits)
and ``<stem>.manifest.json`` into ``--out``.  Exit status is 0 on success,
1 for configuration errors and 2 for numerical failures, in which case
``<stem>.diagnostics.json`` describes what went wrong.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import deformed, experiments, free, stable, wigner_levy
from .config import EnsembleConfig, RunManifest, load_config
from .errors import (
    AccuracyError,
    ConfigError,
    ConvergenceError,
    EigensolverError,
    LevyRMTError,
    ParameterDomainError,
)
from .grid import GridFunction, read_csv, write_csv, write_json
from .matrices import ENV_WORKERS, default_workers

NUMERICAL_ERRORS = (ConvergenceError, AccuracyError, EigensolverError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _linspace(args):
    if args.points < 2:
        raise ConfigError("points: must be >= 2")
    if not args.xmin < args.xmax:
        raise ConfigError("xmax: must exceed xmin")
    return np.linspace(args.xmin, args.xmax, args.points)


# --------------------------------------------------------------------------
# subcommands; each returns (columns, config dict, summary)


def cmd_stable_pdf(args):
    p = stable.StableParams(args.alpha, args.beta, args.range)
    x = _linspace(args)
    return {"x": x, "pdf": stable.pdf(x, p)}, vars_of(p), {}


def cmd_wl_density(args):
    rp = experiments.solve_or_load(args.alpha, args.params)
    lam = _linspace(args)
    cols = {"lambda": lam, "density": wigner_levy.density(lam, args.alpha, args.range, rp)}
    summary = {
        "rho0_expected": wigner_levy.rho_zero(args.alpha, args.range),
        "solver_residual": rp.residual,
        "iterations": rp.iterations,
        "validity": rp.validity,
        "normalization": wigner_levy.normalization_check(rp, args.alpha, args.range),
    }
    return cols, {"alpha": args.alpha, "range": args.range}, summary


def cmd_free_density(args):
    p = free.FreeStableParams(args.alpha, args.beta, args.range)
    lam = _linspace(args)
    g = free.resolvent(lam, p)
    cols = {"lambda": lam, "density": free.density(lam, p), "re_green": g.real, "im_green": g.imag}
    return cols, vars_of(p), {}


def cmd_free_potential(args):
    p = free.FreeStableParams(args.alpha, args.beta, args.range)
    lam = _linspace(args)
    return {"lambda": lam, "potential": free.potential(lam, p)}, vars_of(p), {}


def _law_r(spec):
    kind, _, arg = spec.partition(":")
    if kind == "semicircle":
        radius = float(arg) if arg else 2.0
        return free.density_r_evaluator(experiments.semicircle_grid(radius))
    if kind == "free-stable":
        try:
            alpha, beta, r = (float(v) for v in arg.split(","))
        except ValueError as exc:
            raise ConfigError(f"law: expected free-stable:ALPHA,BETA,RANGE, got {spec!r}") from exc
        return free.stable_r_evaluator(free.FreeStableParams(alpha, beta, r))
    if kind == "csv":
        cols = read_csv(arg)
        if "lambda" not in cols or "density" not in cols:
            raise ConfigError(f"law: {arg} needs columns lambda, density")
        return free.density_r_evaluator(GridFunction(cols["lambda"], cols["density"]))
    raise ConfigError(f"law: unknown law {spec!r} (semicircle[:R], free-stable:A,B,R, csv:PATH)")


def cmd_free_add(args):
    if not args.law:
        raise ConfigError("law: at least one --law is required")
    r_sum = free.free_add(*(_law_r(s) for s in args.law))
    lam = _linspace(args)
    return {"lambda": lam, "density": free.density_from_r(r_sum, lam)}, {"laws": list(args.law)}, {}


def _ensemble_config(args):
    if args.config:
        return load_config(args.config)
    fields = {k: getattr(args, k) for k in ("kind", "N", "trials", "alpha", "beta", "range", "K", "T", "a")}
    return EnsembleConfig(**{k: v for k, v in fields.items() if v is not None})


def cmd_mc_spectrum(args):
    cfg = _ensemble_config(args)
    rp = None
    if cfg.kind == "wigner-levy" and args.params:
        rp = experiments.solve_or_load(cfg.alpha, args.params)
    res = experiments.mc_spectrum(cfg, args.seed, args.workers, rp)
    if args.dump_eigenvalues:
        _dump(res.samples, args)
    return res.columns, cfg.to_dict(), res.summary


def cmd_mc_spacing(args):
    cfg = _ensemble_config(args)
    res = experiments.mc_spacing(cfg, args.seed, args.workers, args.bulk_fraction)
    if args.dump_eigenvalues:
        _dump(res.samples, args)
    return res.columns, cfg.to_dict(), res.summary


def cmd_mc_ipr(args):
    if args.mode == "elements":
        res = experiments.element_ipr(args.alpha, args.N, args.trials, args.seed, args.workers)
    else:
        res = experiments.localization(args.alpha, args.N, args.trials, args.seed, args.workers)
    return res.columns, {"alpha": args.alpha, "N": args.N, "trials": args.trials, "mode": args.mode}, res.summary


def cmd_deformed_density(args):
    lam = _linspace(args)
    if args.kind == "wishart" or args.kind == "marchenko-pastur":
        if np.any(lam <= 0):
            raise ConfigError("xmin: Wishart densities need lambda > 0")
    if args.kind == "student":
        m = deformed.MixtureParams(args.alpha, args.a)
        y = deformed.student_pdf(lam, m)
    elif args.kind == "wigner":
        m = deformed.MixtureParams(args.alpha, args.a)
        y = deformed.deformed_wigner_density(lam, m)
    elif args.kind == "wishart":
        y = deformed.deformed_wishart_density(lam, args.alpha, args.ratio)
    else:
        y = deformed.marchenko_pastur_density(lam, args.ratio)
    conf = {"kind": args.kind, "alpha": args.alpha, "a": args.a, "ratio": args.ratio}
    return {"lambda": lam, "density": y}, conf, {}


def cmd_fig1(args):
    rp = experiments.solve_or_load(args.alpha, args.params)
    res = experiments.fig1(args.alpha, args.N, args.trials, args.seed, args.workers, rp)
    cols = {k: res.columns[k] for k in ("lambda", "density", "model", "mc_density", "mc_trial_stderr", "mc_stderr")}
    return cols, {"alpha": args.alpha, "N": args.N, "trials": args.trials, "range": 1.0, "beta": 0.0}, res.summary


def cmd_fig2(args):
    res = experiments.fig2(args.K, args.N, args.trials, args.seed, args.workers, args.bulk_fraction)
    return res.columns, {"K": args.K, "N": args.N, "trials": args.trials, "diag_law": "semicircle"}, res.summary


def cmd_fig3(args):
    res = experiments.fig3(args.alpha, args.K, args.N, args.trials, args.seed, args.workers)
    cols = {k: res.columns[k] for k in ("lambda", "density", "model", "mc_density", "mc_trial_stderr", "mc_stderr")}
    conf = {"alpha": args.alpha, "K": args.K, "N": args.N, "trials": args.trials, "range": res.summary["range"]}
    return cols, conf, res.summary


def vars_of(p):
    return {k: getattr(p, k) for k in ("alpha", "beta", "range")}


def _dump(samples, args):
    out = Path(args.out)
    for i, s in enumerate(samples):
        path = write_csv(out / f"{args.stem}.eigenvalues.{i:05d}.csv", {"eigenvalue": s.eigenvalues})
        args._extra_outputs.append(path)


# --------------------------------------------------------------------------
# parser


def _grid_opts(p, xmin, xmax, points):
    p.add_argument("--xmin", type=float, default=xmin)
    p.add_argument("--xmax", type=float, default=xmax)
    p.add_argument("--points", type=int, default=points)


def _ensemble_opts(p):
    p.add_argument("--config", help="EnsembleConfig JSON file (overrides the flags below)")
    p.add_argument("--kind", default="wigner-levy")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--range", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--dump-eigenvalues", action="store_true", help="one-column CSV per trial")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--stem", default=None, help="output file stem (default: subcommand name)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument(
        "--workers", type=int, default=None, help=f"MC worker processes (default: ${ENV_WORKERS} or 1)"
    )

    ap = _Parser(prog="levyrmt", description="Spectral densities of heavy-tailed random matrices.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stable-pdf", parents=[common], help="stable density L_alpha^{R,beta}(x)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--range", type=float, default=1.0)
    _grid_opts(p, -5.0, 5.0, 101)
    p.set_defaults(fn=cmd_stable_pdf)

    p = sub.add_parser("wl-density", parents=[common], help="Wigner-Levy limiting density")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--range", type=float, default=1.0)
    p.add_argument("--params", help="running-parameter JSON: read if present, else written after solving")
    _grid_opts(p, -5.0, 5.0, 201)
    p.set_defaults(fn=cmd_wl_density)

    for name, fn, help_ in (
        ("free-density", cmd_free_density, "free stable density and resolvent"),
        ("free-potential", cmd_free_potential, "free stable potential V(lambda), V(0) = 0"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--beta", type=float, default=0.0)
        p.add_argument("--range", type=float, default=1.0)
        _grid_opts(p, -5.0, 5.0, 201)
        p.set_defaults(fn=fn)

    p = sub.add_parser("free-add", parents=[common], help="density of a free sum via R-transforms")
    p.add_argument("--law", action="append", help="semicircle[:RADIUS] | free-stable:A,B,R | csv:PATH (repeat)")
    _grid_opts(p, -3.0, 3.0, 31)
    p.set_defaults(fn=cmd_free_add)

    p = sub.add_parser("mc-spectrum", parents=[common], help="MC eigenvalue histogram")
    _ensemble_opts(p)
    p.add_argument("--params", help="Wigner-Levy running-parameter JSON for the analytic column")
    p.set_defaults(fn=cmd_mc_spectrum)

    p = sub.add_parser("mc-spacing", parents=[common], help="MC unfolded level-spacing histogram")
    _ensemble_opts(p)
    p.add_argument("--bulk-fraction", type=float, default=0.5)
    p.set_defaults(fn=cmd_mc_spacing)

    p = sub.add_parser("mc-ipr", parents=[common], help="element IPR or eigenvector localization")
    p.add_argument("--mode", choices=("elements", "eigenvectors"), default="elements")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(fn=cmd_mc_ipr)

    p = sub.add_parser("deformed-density", parents=[common], help="scale-mixture densities")
    p.add_argument("--kind", choices=("student", "wigner", "wishart", "marchenko-pastur"), required=True)
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--ratio", type=float, default=0.25)
    _grid_opts(p, 0.05, 8.0, 160)
    p.set_defaults(fn=cmd_deformed_density)

    p = sub.add_parser("fig1", parents=[common], help="Wigner-Levy density vs MC, N=200, R=1")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--params", help="running-parameter JSON cache")
    p.set_defaults(fn=cmd_fig1)

    p = sub.add_parser("fig2", parents=[common], help="spacings of sums of rotated diagonal matrices")
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--bulk-fraction", type=float, default=0.5)
    p.set_defaults(fn=cmd_fig2)

    p = sub.add_parser("fig3", parents=[common], help="free sum of K Wigner-Levy matrices vs free stable law")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--K", type=int, default=32)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(fn=cmd_fig3)
    return ap


def _diagnostics(exc):
    d = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("residuals", "error_estimate"):
        v = getattr(exc, attr, None)
        if v is not None:
            d[attr] = v
    d["traceback"] = traceback.format_exception(exc)
    return d


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # usage errors exit 1 (see _Parser.error); --help exits 0
        return exc.code if isinstance(exc.code, int) else 1
    if args.stem is None:
        args.stem = args.command
    if args.workers is None:
        try:
            args.workers = default_workers()
        except ConfigError as exc:
            print(f"levyrmt: config error: {exc}", file=sys.stderr)
            return 1
    if args.workers < 1:
        print("levyrmt: config error: workers: must be >= 1", file=sys.stderr)
        return 1
    args._extra_outputs = []
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cols, conf, summary = args.fn(args)
    except (ConfigError, ParameterDomainError) as exc:
        print(f"levyrmt: config error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        path = write_json(out / f"{args.stem}.diagnostics.json", _diagnostics(exc))
        print(f"levyrmt: numerical failure: {exc} (see {path})", file=sys.stderr)
        return 2
    except LevyRMTError as exc:
        print(f"levyrmt: error: {exc}", file=sys.stderr)
        return 1
    csv_path = write_csv(out / f"{args.stem}.csv", cols)
    man = RunManifest(command=args.command, config=_jsonable(conf), seed=args.seed, workers=args.workers,
                      summary=_jsonable(summary))
    for pth in [csv_path, *args._extra_outputs]:
        man.add_output(pth)
    params = getattr(args, "params", None)
    if params and Path(params).exists():
        man.add_output(params)
    man.write(out / f"{args.stem}.manifest.json")
    print(csv_path)
    return 0


def _jsonable(d):
    return json.loads(json.dumps(d, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
