"""Monte Carlo runs behind the figures and acceptance checks.

Each function returns plot-ready columns plus a small summary dict; the CLI
writes them to disk and the tests assert on the summaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
from scipy import special, stats

from . import deformed, free, matrices, wigner_levy
from .config import EnsembleConfig
from .grid import GridFunction, read_csv, write_json
from .stable import StableParams

__all__ = [
    "RunResult",
    "bin_average",
    "semicircle_grid",
    "ensemble_trial",
    "sample_ensemble",
    "spectrum_model",
    "mc_spectrum",
    "mc_spacing",
    "fig1",
    "fig2",
    "fig3",
    "element_ipr",
    "localization",
    "deformed_wishart_mc",
    "solve_or_load",
]

_XG, _WG = special.roots_legendre(8)


@dataclass
class RunResult:
    columns: dict
    summary: dict = field(default_factory=dict)
    samples: list | None = None


def bin_average(f, edges):
    """Mean of f over each bin (8-point Gauss-Legendre per bin)."""
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    pts = mid[:, None] + half[:, None] * _XG[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    return 0.5 * (vals * _WG).sum(axis=1)


def semicircle_grid(radius=2.0, n=2001):
    x = np.linspace(-radius, radius, n)
    y = 2.0 * np.sqrt(np.maximum(radius * radius - x * x, 0.0)) / (math.pi * radius * radius)
    return GridFunction(x, y, name="semicircle")


def _diag_density(cfg: EnsembleConfig):
    if cfg.diag_law == "semicircle":
        return semicircle_grid()
    cols = read_csv(cfg.diag_law[4:])
    return GridFunction(cols["lambda"], cols["density"], name="density")


def _mixture(cfg: EnsembleConfig):
    a = cfg.a if cfg.a is not None else math.sqrt(cfg.alpha)
    return deformed.MixtureParams(cfg.alpha, a)


def ensemble_trial(cfg: EnsembleConfig, want_vectors, rng, i):
    """One draw of the configured ensemble, eigenvalues of the raw matrix."""
    k = cfg.kind
    if k == "wigner-levy":
        a = matrices.sample_wigner_levy(cfg.N, StableParams(cfg.alpha, cfg.beta, cfg.range), rng)
        return matrices.eigen_sym(a, want_vectors=want_vectors)
    if k == "goe":
        return matrices.eigen_sym(matrices.sample_goe(cfg.N, cfg.sigma, rng), want_vectors=want_vectors)
    if k == "free-sum-diag":
        fc = free.FreeSumConfig(cfg.N, cfg.alpha, "diag", diag_density=_diag_density(cfg))
        return free.free_stable_sum_matrix(fc, cfg.K, rng)
    if k == "free-sum-wl":
        fc = free.FreeSumConfig(cfg.N, cfg.alpha, "wigner-levy", beta=cfg.beta, range=cfg.range)
        return free.free_stable_sum_matrix(fc, cfg.K, rng)
    if k == "deformed-wigner":
        return deformed.deformed_wigner_sample(cfg.N, _mixture(cfg), rng)
    wc = deformed.WishartConfig(cfg.N, cfg.T, _mixture(cfg), cfg.scale_model)
    return deformed.sample_deformed_wishart(wc, rng)


def sample_ensemble(cfg: EnsembleConfig, seed, workers=None, want_vectors=False):
    out = matrices.run_trials(partial(ensemble_trial, cfg, want_vectors), cfg.trials, seed, workers)
    for s in out:
        s.seed = seed
    return out


def spectrum_model(cfg: EnsembleConfig, rp=None):
    """Limiting density of the histogrammed spectrum, or None when there is no closed form."""
    k = cfg.kind
    if k == "goe":
        r = 2.0 * cfg.sigma
        return lambda x: 2.0 * np.sqrt(np.maximum(r * r - x * x, 0.0)) / (math.pi * r * r)
    if k == "wigner-levy" and rp is not None:
        return lambda x: wigner_levy.density(x, cfg.alpha, cfg.range, rp)
    if k == "free-sum-wl" and cfg.beta == 0.0:
        # same tail amplitude as the Wigner-Levy ingredient
        r = cfg.range * special.gamma(1.0 + cfg.alpha) ** (1.0 / cfg.alpha)
        p = free.FreeStableParams(cfg.alpha, 0.0, r)
        return lambda x: free.density(x, p)
    if k == "free-sum-diag" and cfg.diag_law == "semicircle" and cfg.alpha == 2.0:
        return lambda x: 2.0 * np.sqrt(np.maximum(4.0 - x * x, 0.0)) / (4.0 * math.pi)
    if k == "deformed-wigner":
        m = _mixture(cfg)
        return lambda x: deformed.deformed_wigner_density(x, m)
    if k == "wishart-student" and cfg.scale_model == "global":
        m = _mixture(cfg)
        # sigma^2 scales as a^2 / alpha relative to the standardised law
        s = m.a**2 / m.alpha
        ratio = cfg.N / cfg.T
        return lambda x: _positive(lambda y: deformed.deformed_wishart_density(y / s, m.alpha, ratio) / s, x)
    return None


def _positive(f, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = f(x[pos])
    return out


def _edges(cfg: EnsembleConfig):
    return np.linspace(cfg.lambda_min, cfg.lambda_max, cfg.bins + 1)


def _hist_columns(h: matrices.Histogram, model_vals=None):
    cols = {
        "lambda": h.centers,
        "lambda_lo": h.edges[:-1],
        "lambda_hi": h.edges[1:],
        "mc_density": h.absolute_density,
        "mc_stderr": h.stderr * h.coverage,
        "mc_trial_stderr": h.band(),
    }
    if model_vals is not None:
        cols["model"] = model_vals
    return cols


def mc_spectrum(cfg: EnsembleConfig, seed, workers=None, rp=None) -> RunResult:
    samples = sample_ensemble(cfg, seed, workers)
    edges = _edges(cfg)
    h = matrices.spectral_histogram(samples, cfg.exponent(), edges)
    model = spectrum_model(cfg, rp)
    summary = {"trials": cfg.trials, "coverage": h.coverage}
    mv = None
    if model is not None:
        mv = bin_average(model, edges)
        summary["fraction_within_3sigma"] = h.agreement(mv)
    return RunResult(_hist_columns(h, mv), summary, samples)


def _spacing_result(samples, bulk_fraction, edges=None):
    u = matrices.unfold_spacings(samples, bulk_fraction)
    if edges is None:
        edges = np.linspace(0.0, 4.0, 41)
    h = matrices.Histogram.from_values(u, edges)
    s = h.centers
    cols = {
        "s": s,
        "mc_density": h.density,
        "mc_stderr": h.stderr,
        "poisson": np.exp(-s),
        "wigner_surmise": 0.5 * math.pi * s * np.exp(-0.25 * math.pi * s * s),
    }
    summary = {
        "n_spacings": int(u.size),
        "mean_spacing": float(u.mean()),
        "ks_poisson": float(stats.kstest(u, lambda x: 1.0 - np.exp(-x)).statistic),
        "ks_wigner_surmise": float(stats.kstest(u, lambda x: 1.0 - np.exp(-0.25 * math.pi * x * x)).statistic),
    }
    return cols, summary


def mc_spacing(cfg: EnsembleConfig, seed, workers=None, bulk_fraction=0.5) -> RunResult:
    samples = sample_ensemble(cfg, seed, workers)
    cols, summary = _spacing_result(samples, bulk_fraction)
    summary["trials"] = cfg.trials
    return RunResult(cols, summary, samples)


def solve_or_load(alpha, path=None):
    """Running parameters for unit range; read from ``path`` if it exists, else solved (and saved there)."""
    if path is not None and Path(path).exists():
        rp = wigner_levy.RunningParams.from_json(json.loads(Path(path).read_text()))
        if rp.alpha == alpha:
            return rp
    rp = wigner_levy.solve_running_params(alpha)
    if path is not None:
        write_json(path, rp.to_json())
    return rp


def fig1(alpha, n=200, trials=500, seed=0, workers=None, rp=None, lam_max=5.0, bins=40) -> RunResult:
    """Wigner-Levy spectrum, entries L_alpha^{1,0}: analytic density against the MC histogram."""
    cfg = EnsembleConfig(
        kind="wigner-levy", N=n, trials=trials, alpha=alpha, lambda_min=-lam_max, lambda_max=lam_max, bins=bins
    )
    if rp is None:
        rp = wigner_levy.solve_running_params(alpha)
    res = mc_spectrum(cfg, seed, workers, rp)
    res.columns["density"] = wigner_levy.density(res.columns["lambda"], alpha, 1.0, rp)
    res.summary.update({"alpha": alpha, "N": n, "solver_residual": rp.residual, "validity": rp.validity})
    return res


def fig2(k, n=200, trials=100, seed=7, workers=None, bulk_fraction=0.5) -> RunResult:
    """Spacings of K**-1/2 sum_i O_i D_i O_i^T with semicircle-distributed diagonal D_i."""
    cfg = EnsembleConfig(kind="free-sum-diag", N=n, trials=trials, alpha=2.0, K=k)
    res = mc_spacing(cfg, seed, workers, bulk_fraction)
    res.summary.update({"K": k, "N": n})
    return res


def fig3(alpha, k=32, n=200, trials=200, seed=0, workers=None, lam_max=5.0, bins=40) -> RunResult:
    """Free sum of K Wigner-Levy matrices with R = Gamma(1+alpha)**(-1/alpha) against the standard free stable law."""
    r = special.gamma(1.0 + alpha) ** (-1.0 / alpha)
    cfg = EnsembleConfig(
        kind="free-sum-wl", N=n, trials=trials, alpha=alpha, range=float(r), K=k,
        lambda_min=-lam_max, lambda_max=lam_max, bins=bins,
    )
    res = mc_spectrum(cfg, seed, workers)
    res.columns["density"] = free.density(res.columns["lambda"], free.FreeStableParams(alpha, 0.0, 1.0))
    res.summary.update({"alpha": alpha, "K": k, "N": n, "range": float(r)})
    return res


def _ipr_trial(n, p, rng, i):
    return matrices.ipr_elements(matrices.sample_wigner_levy(n, p, rng))


def element_ipr(alpha, n=1000, trials=100, seed=0, workers=None) -> RunResult:
    y = np.array(matrices.run_trials(partial(_ipr_trial, n, StableParams(alpha)), trials, seed, workers))
    summary = {
        "alpha": alpha,
        "N": n,
        "mean": float(y.mean()),
        "stderr": float(y.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
    }
    return RunResult({"trial": np.arange(trials), "ipr_elements": y}, summary)


def _loc_trial(n, p, rng, i):
    a = matrices.sample_wigner_levy(n, p, rng) / n ** (1.0 / p.alpha)
    s = matrices.eigen_sym(a, want_vectors=True)
    return s.eigenvalues, np.sum(s.eigenvectors**4, axis=0)


def localization(alpha, n=400, trials=50, seed=0, workers=None, n_bins=10) -> RunResult:
    """Eigenvector IPR y2 against |lambda|, binned by |lambda| deciles."""
    out = matrices.run_trials(partial(_loc_trial, n, StableParams(alpha)), trials, seed, workers)
    lam = np.abs(np.concatenate([o[0] for o in out]))
    y2 = np.concatenate([o[1] for o in out])
    q = np.quantile(lam, np.linspace(0.0, 1.0, n_bins + 1))
    idx = np.clip(np.searchsorted(q, lam, side="right") - 1, 0, n_bins - 1)
    mean = np.array([y2[idx == j].mean() for j in range(n_bins)])
    err = np.array([y2[idx == j].std(ddof=1) / math.sqrt((idx == j).sum()) for j in range(n_bins)])
    centre = np.array([np.median(lam[idx == j]) for j in range(n_bins)])
    summary = {
        "alpha": alpha,
        "N": n,
        "y2_central_decile": float(mean[0]),
        "y2_top_decile": float(mean[-1]),
    }
    cols = {"abs_lambda_lo": q[:-1], "abs_lambda_hi": q[1:], "abs_lambda": centre, "y2_mean": mean, "y2_stderr": err}
    return RunResult(cols, summary)


def deformed_wishart_mc(alpha=3.0, n=200, t=800, trials=200, seed=0, workers=None, bins=40, lam_max=8.0,
                        tail_range=(20.0, 200.0), tail_scales=1000) -> RunResult:
    """Global-sigma Student-Wishart spectra against the scale-mixture density, plus a tail fit.

    The tail slope uses the same spectra, each re-scaled by ``tail_scales``
    fresh sigma draws from an auxiliary stream.
    """
    m = deformed.MixtureParams.standardized(alpha)
    wc = deformed.WishartConfig(n, t, m)
    samples = matrices.run_trials(partial(_wishart_trial, wc), trials, seed, workers)
    edges = np.linspace(0.0, lam_max, bins + 1)
    h = matrices.spectral_histogram(samples, 0.0, edges)
    ratio = n / t
    model = bin_average(lambda x: _positive(lambda y: deformed.deformed_wishart_density(y, alpha, ratio), x), edges)
    lo, hi = tail_range
    tail_edges = np.geomspace(lo, hi, 9)
    counts, total = deformed.rescaled_spectra(samples, m, tail_scales, matrices.aux_rng(seed, 1), edges=tail_edges)
    slope = deformed.tail_slope(None, lo, hi, counts=counts, total=total)
    summary = {
        "alpha": alpha,
        "N": n,
        "T": t,
        "trials": trials,
        "fraction_within_3sigma": h.agreement(model),
        "tail_slope": slope,
        "tail_slope_expected": -(alpha / 2 + 1),
        "tail_range": [lo, hi],
        "tail_scales_per_sample": tail_scales,
    }
    return RunResult(_hist_columns(h, model), summary, samples)


def _wishart_trial(wc, rng, i):
    return deformed.sample_deformed_wishart(wc, rng)
