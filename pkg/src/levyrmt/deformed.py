"""Heavy-tailed deformations of Gaussian ensembles by a fluctuating scale factor.

x = sigma * xi with xi ~ N(0, 1) and sigma drawn from

    f(sigma) = (2 / (sigma Gamma(alpha/2))) (a^2 / (2 sigma^2))**(alpha/2) exp(-a^2 / (2 sigma^2)),

i.e. zeta = a^2 / (2 sigma^2) is Gamma(alpha/2) distributed.  The same common
factor applied to a whole GOE matrix or a whole Wishart data matrix gives the
deformed Wigner and deformed Wishart ensembles.

The Wishart density below is written without a; it is the sigma-mixture of
Marchenko-Pastur laws with a^2 = alpha, the choice for which E[sigma^-2] = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, InsufficientDataError, ParameterDomainError
from .matrices import SpectralSample, eigen_sym, sample_goe

__all__ = [
    "MixtureParams",
    "WishartConfig",
    "scale_frequency_pdf",
    "sample_scale",
    "student_pdf",
    "student_sample",
    "deformed_wigner_density",
    "marchenko_pastur_edges",
    "marchenko_pastur_density",
    "deformed_wishart_density",
    "sample_deformed_wishart",
    "deformed_wigner_sample",
    "multivariate_student_log_norm",
    "rescaled_spectra",
    "tail_slope",
]


@dataclass(frozen=True)
class MixtureParams:
    alpha: float
    a: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterDomainError(f"alpha must be positive, got {self.alpha}")
        if not self.a > 0:
            raise ParameterDomainError(f"a must be positive, got {self.a}")

    @classmethod
    def standardized(cls, alpha):
        """a = sqrt(alpha): the scale for which E[sigma^-2] = 1."""
        return cls(alpha, math.sqrt(alpha))


def scale_frequency_pdf(sigma, m: MixtureParams):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ParameterDomainError("sigma must be positive")
    k = m.alpha / 2
    zeta = m.a**2 / (2 * sigma**2)
    logf = math.log(2.0) - np.log(sigma) - special.gammaln(k) + k * np.log(zeta) - zeta
    out = np.exp(logf)
    return out[()] if out.ndim == 0 else out


def sample_scale(m: MixtureParams, rng, size=None):
    zeta = rng.gamma(m.alpha / 2, 1.0, size=size)
    return m.a / np.sqrt(2.0 * zeta)


def student_pdf(x, m: MixtureParams):
    x = np.asarray(x, dtype=float)
    al, a = m.alpha, m.a
    c = math.exp(special.gammaln((al + 1) / 2) - special.gammaln(al / 2)) / (a * math.sqrt(math.pi))
    out = c * (1.0 + (x / a) ** 2) ** (-(al + 1) / 2)
    return out[()] if out.ndim == 0 else out


def student_sample(m: MixtureParams, rng, size=None):
    sigma = sample_scale(m, rng, size)
    return sigma * rng.standard_normal(size)


def multivariate_student_log_norm(m: MixtureParams, n_entries):
    """log of Gamma((alpha+NT)/2) / ((a sqrt(pi))**NT Gamma(alpha/2)), the Student measure constant."""
    nt = n_entries
    return (
        special.gammaln((m.alpha + nt) / 2)
        - nt * math.log(m.a * math.sqrt(math.pi))
        - special.gammaln(m.alpha / 2)
    )


def _quad(fn, lo, hi, wvar, what):
    val, err = integrate.quad(fn, lo, hi, weight="alg", wvar=wvar, epsabs=0.0, epsrel=1e-11, limit=200)
    if not np.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300) + 1e-300:
        raise AccuracyError(f"{what}: quadrature error {err:.3g} for value {val:.3g}", err)
    return val


def deformed_wigner_density(lam, m: MixtureParams):
    """Semicircle averaged over the scale factor.

    rho(lam) = sqrt(2) / (a pi Gamma(alpha/2)) int_0^Z zeta**((alpha-1)/2) e**-zeta sqrt(1 - zeta/Z) dzeta,
    Z = 2 a^2 / lam^2.
    """
    lam = np.asarray(lam, dtype=float)
    al, a = m.alpha, m.a
    pref = math.sqrt(2.0) / (a * math.pi * special.gamma(al / 2))
    out = np.empty(lam.shape)
    for idx, x in np.ndenumerate(lam):
        if x == 0.0:
            out[idx] = pref * special.gamma((al + 1) / 2)
            continue
        z_top = 2 * a * a / (x * x)
        # weight zeta**((alpha-1)/2) (Z - zeta)**(1/2); remaining factor smooth
        val = _quad(
            lambda t: math.exp(-t), 0.0, z_top, ((al - 1) / 2, 0.5), "deformed Wigner density"
        )
        out[idx] = pref * val / math.sqrt(z_top)
    return out[()] if out.ndim == 0 else out


def marchenko_pastur_edges(ratio):
    s = math.sqrt(ratio)
    return (1 - s) ** 2, (1 + s) ** 2


def marchenko_pastur_density(lam, ratio):
    """Limiting spectrum of (1/T) xi xi^T with N/T = ratio <= 1."""
    if not (0.0 < ratio <= 1.0):
        raise ParameterDomainError("ratio must lie in (0, 1]")
    lam = np.asarray(lam, dtype=float)
    lo, hi = marchenko_pastur_edges(ratio)
    inside = (lam > lo) & (lam < hi)
    out = np.zeros(lam.shape)
    li = lam[inside]
    out[inside] = np.sqrt((hi - li) * (li - lo)) / (2 * math.pi * ratio * li)
    return out[()] if out.ndim == 0 else out


def deformed_wishart_density(lam, alpha, ratio):
    """Scale-mixture of Marchenko-Pastur laws (standardised scale a^2 = alpha).

    rho(lam) = (alpha/2)**(alpha/2) / (2 pi r Gamma(alpha/2)) lam**(-alpha/2-1)
               int_{l-}^{l+} sqrt((l+ - z)(z - l-)) exp(-alpha z / (2 lam)) z**(alpha/2-1) dz
    """
    if not (0.0 < ratio <= 1.0):
        raise ParameterDomainError("ratio must lie in (0, 1]")
    if alpha <= 0:
        raise ParameterDomainError("alpha must be positive")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ParameterDomainError("lambda must be positive")
    lo, hi = marchenko_pastur_edges(ratio)
    k = alpha / 2
    log_pref = k * math.log(k) - math.log(2 * math.pi * ratio) - special.gammaln(k)
    out = np.empty(lam.shape)
    for idx, x in np.ndenumerate(lam):
        c = alpha / (2 * x)
        # factor out exp(-c lo) so the integrand stays O(1) for small lambda
        if lo > 0:
            fn = lambda z: math.exp(-c * (z - lo)) * z ** (k - 1)
            wvar = (0.5, 0.5)
        else:
            fn = lambda z: math.exp(-c * z)
            wvar = (0.5 + k - 1, 0.5)
        val = _quad(fn, lo, hi, wvar, "deformed Wishart density")
        out[idx] = math.exp(log_pref - (k + 1) * math.log(x) - c * lo) * val
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class WishartConfig:
    """A_it = sigma xi_it (global), sigma_i xi_it (per-row), or sigma sum_j S_i O_ij xi_jt (rotated)."""

    n: int
    t: int
    mixture: MixtureParams
    scale_model: str = "global"
    s: np.ndarray | None = field(default=None, compare=False)
    o: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.t < 1:
            raise ParameterDomainError("N and T must be >= 1")
        if self.scale_model not in ("global", "per-row", "rotated"):
            raise ParameterDomainError(f"unknown scale model {self.scale_model!r}")
        if self.scale_model == "rotated":
            if self.s is None or self.o is None:
                raise ParameterDomainError("rotated scale model needs S and O")
            s = np.asarray(self.s, dtype=float)
            o = np.asarray(self.o, dtype=float)
            if s.shape != (self.n,) or np.any(s <= 0):
                raise ParameterDomainError("S must be a positive vector of length N")
            if o.shape != (self.n, self.n) or not np.allclose(o @ o.T, np.eye(self.n), atol=1e-10):
                raise ParameterDomainError("O must be an N x N orthogonal matrix")

    @property
    def ratio(self):
        return self.n / self.t

    def to_json(self):
        d = {"N": self.n, "T": self.t, "alpha": self.mixture.alpha, "a": self.mixture.a,
             "scale_model": self.scale_model}
        if self.s is not None:
            d["S"] = np.asarray(self.s).tolist()
        if self.o is not None:
            d["O"] = np.asarray(self.o).tolist()
        return d


def sample_deformed_wishart(cfg: WishartConfig, rng, seed=None) -> SpectralSample:
    xi = rng.standard_normal((cfg.n, cfg.t))
    extra = {}
    if cfg.scale_model == "global":
        sigma = sample_scale(cfg.mixture, rng)
        a = sigma * xi
        extra["sigma"] = float(sigma)
    elif cfg.scale_model == "per-row":
        a = sample_scale(cfg.mixture, rng, size=cfg.n)[:, None] * xi
    else:
        sigma = sample_scale(cfg.mixture, rng)
        a = sigma * (np.asarray(cfg.s)[:, None] * (np.asarray(cfg.o) @ xi))
        extra["sigma"] = float(sigma)
    w = a @ a.T / cfg.t
    ev = eigen_sym(0.5 * (w + w.T)).eigenvalues
    return SpectralSample(ev, config={"ensemble": "wishart-student", **cfg.to_json(), **extra}, seed=seed)


def rescaled_spectra(samples, m: MixtureParams, n_scales, rng, edges=None):
    """Global-sigma spectra with fresh scale draws.

    With one common sigma the spectrum is sigma^2 times the spectrum of the
    unscaled Wishart matrix, so each sample (which records its sigma) yields
    ``n_scales`` further independent draws of sigma^2 * spectrum at the cost of
    a multiplication.  The tail of the pooled eigenvalue law is set by the
    sigma draws alone, so this is what makes tail fits feasible.

    Returns the pooled values, or (counts, total) on ``edges`` when given,
    which avoids holding all values in memory.
    """
    values, counts, total = [], None, 0
    if edges is not None:
        counts = np.zeros(len(edges) - 1, dtype=np.int64)
    for smp in samples:
        if "sigma" not in smp.config:
            raise ParameterDomainError("sample does not record a global sigma")
        base = smp.eigenvalues / smp.config["sigma"] ** 2
        s2 = sample_scale(m, rng, size=n_scales) ** 2
        v = (s2[:, None] * base[None, :]).ravel()
        if counts is None:
            values.append(v)
        else:
            counts += np.histogram(v, edges)[0]
            total += v.size
    if counts is not None:
        return counts, total
    return np.concatenate(values) if values else np.array([])


def tail_slope(values, lo, hi, n_bins=8, counts=None, total=None):
    """Least-squares slope of log density vs log lambda on log-spaced bins in [lo, hi].

    Pass ``counts`` and ``total`` (on ``np.geomspace(lo, hi, n_bins + 1)``)
    instead of ``values`` for pre-binned data.
    """
    edges = np.geomspace(lo, hi, n_bins + 1)
    if counts is None:
        values = np.asarray(values, dtype=float)
        counts, _ = np.histogram(values, edges)
        total = values.size
    counts = np.asarray(counts)
    ok = counts > 0
    if ok.sum() < 3:
        raise InsufficientDataError(f"only {ok.sum()} populated tail bins in [{lo}, {hi}]")
    dens = counts / (total * np.diff(edges))
    mid = np.sqrt(edges[1:] * edges[:-1])
    return float(np.polyfit(np.log(mid[ok]), np.log(dens[ok]), 1)[0])


def deformed_wigner_sample(n, m: MixtureParams, rng, seed=None) -> SpectralSample:
    """One sigma per matrix; eigenvalues of sigma * GOE / sqrt(N) (off-diagonal variance sigma^2 / N)."""
    sigma = sample_scale(m, rng)
    a = sigma * sample_goe(n, 1.0, rng) / math.sqrt(n)
    ev = eigen_sym(a).eigenvalues
    return SpectralSample(
        ev, config={"ensemble": "deformed-wigner", "N": n, "alpha": m.alpha, "a": m.a, "sigma": float(sigma)},
        seed=seed,
    )
