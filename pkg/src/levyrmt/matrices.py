"""Matrix samplers, a dense symmetric eigensolver and spectral statistics."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigError, DegenerateTailError, EigensolverError, ParameterDomainError
from .stable import StableParams, sample as stable_sample

__all__ = [
    "SpectralSample",
    "Histogram",
    "sample_wigner_levy",
    "sample_goe",
    "eigen_sym",
    "ipr_elements",
    "ipr_eigenvector",
    "unfold_spacings",
    "spacing_histogram",
    "spectral_histogram",
    "trial_rng",
    "aux_rng",
    "run_trials",
    "default_workers",
]


@dataclass
class SpectralSample:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    config: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be ascending")

    @property
    def n(self):
        return self.eigenvalues.size


# --------------------------------------------------------------------------
# histograms


@dataclass
class Histogram:
    """Binned density.

    ``density`` integrates to one over the bins and ``stderr`` is the Poisson
    error sqrt(count) / (total * width), both relative to the in-range total.
    ``coverage`` is the in-range share of all values, so density * coverage
    estimates the absolute density of the full law.  ``trial_stderr``, when
    present, is the between-trial standard error of that absolute density;
    unlike the Poisson error it accounts for eigenvalues of one matrix being
    correlated.
    """

    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    coverage: float = 1.0
    trial_stderr: np.ndarray | None = None
    n_trials: int = 1

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def absolute_density(self):
        return self.density * self.coverage

    def band(self):
        """1-sigma error of the absolute density (between-trial if available)."""
        if self.trial_stderr is not None:
            return self.trial_stderr
        return self.stderr * self.coverage

    def agreement(self, model, n_sigma=3.0):
        """Fraction of bins with |hist - model| <= n_sigma * band (model given per bin)."""
        diff = np.abs(self.absolute_density - np.asarray(model))
        band = self.band()
        ok = diff <= n_sigma * band
        ok |= (self.counts == 0) & (np.asarray(model) * self.widths * self.counts.sum() < 1.0)
        return float(np.mean(ok))

    @classmethod
    def from_values(cls, values, edges, groups=None):
        """Histogram of ``values``; ``groups`` (list of arrays) enables trial errors."""
        values = np.asarray(values, dtype=float)
        edges = np.asarray(edges, dtype=float)
        counts, _ = np.histogram(values, edges)
        width = np.diff(edges)
        total = counts.sum()
        coverage = total / values.size if values.size else 0.0
        if total > 0:
            density = counts / (total * width)
            stderr = np.sqrt(counts) / (total * width)
        else:
            density = np.zeros_like(width)
            stderr = np.zeros_like(width)
        trial_err = None
        n_trials = 1
        if groups is not None and len(groups) > 1:
            per = np.array(
                [np.histogram(g, edges)[0] / (max(len(g), 1) * width) for g in groups]
            )
            n_trials = len(groups)
            trial_err = per.std(axis=0, ddof=1) / math.sqrt(n_trials)
        return cls(edges, counts, density, stderr, float(coverage), trial_err, n_trials)


# --------------------------------------------------------------------------
# samplers


def sample_wigner_levy(n, p: StableParams, rng):
    """Symmetric matrix with i.i.d. L_alpha^{R, beta} entries on and above the diagonal (unscaled)."""
    if n < 1:
        raise ParameterDomainError("N must be >= 1")
    iu = np.triu_indices(n)
    vals = np.asarray(stable_sample(p, rng, size=iu[0].size), dtype=float)
    a = np.empty((n, n))
    a[iu] = vals
    a.T[iu] = vals
    return a


def sample_goe(n, sigma, rng):
    """GOE: off-diagonal variance sigma**2, diagonal 2 sigma**2."""
    if n < 1:
        raise ParameterDomainError("N must be >= 1")
    g = rng.standard_normal((n, n)) * sigma
    return (g + g.T) / math.sqrt(2.0)


# --------------------------------------------------------------------------
# eigensolver: Householder tridiagonalisation + QL with implicit shifts


@numba.njit(cache=True)
def _tridiagonalize(z, want):
    n = z.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        scale = 0.0
        if l > 0:
            for k in range(i):
                scale += abs(z[i, k])
            if scale == 0.0:
                e[i] = z[i, l]
            else:
                for k in range(i):
                    z[i, k] /= scale
                    h += z[i, k] * z[i, k]
                f = z[i, l]
                g = -math.sqrt(h) if f >= 0.0 else math.sqrt(h)
                e[i] = scale * g
                h -= f * g
                z[i, l] = f - g
                f = 0.0
                for j in range(i):
                    if want:
                        z[j, i] = z[i, j] / h
                    g = 0.0
                    for k in range(j + 1):
                        g += z[j, k] * z[i, k]
                    for k in range(j + 1, i):
                        g += z[k, j] * z[i, k]
                    e[j] = g / h
                    f += e[j] * z[i, j]
                hh = f / (h + h)
                for j in range(i):
                    f = z[i, j]
                    g = e[j] - hh * f
                    e[j] = g
                    for k in range(j + 1):
                        z[j, k] -= f * e[k] + g * z[i, k]
        else:
            e[i] = z[i, l]
        d[i] = h
    d[0] = 0.0
    e[0] = 0.0
    for i in range(n):
        if want:
            if d[i] != 0.0:
                for j in range(i):
                    g = 0.0
                    for k in range(i):
                        g += z[i, k] * z[k, j]
                    for k in range(i):
                        z[k, j] -= g * z[k, i]
            d[i] = z[i, i]
            z[i, i] = 1.0
            for j in range(i):
                z[j, i] = 0.0
                z[i, j] = 0.0
        else:
            d[i] = z[i, i]
    return d, e


@numba.njit(cache=True)
def _ql_implicit(d, e, z, want, max_iter):
    """Eigen-decomposition of the tridiagonal (d, e); returns 0 or -1 on failure."""
    n = d.shape[0]
    eps = 2.220446049250313e-16
    for i in range(1, n):
        e[i - 1] = e[i]
    if n > 0:
        e[n - 1] = 0.0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want:
                    for k in range(n):
                        f = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f
                        z[k, i] = c * z[k, i] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


def eigen_sym(a, want_vectors=False, max_iter=60) -> SpectralSample:
    """All eigenvalues (ascending) and optionally orthonormal eigenvectors of symmetric ``a``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterDomainError("matrix must be square")
    z = np.ascontiguousarray(a, dtype=np.float64).copy()
    d, e = _tridiagonalize(z, want_vectors)
    status = _ql_implicit(d, e, z, want_vectors, max_iter)
    if status != 0:
        raise EigensolverError("QL iteration did not converge")
    order = np.argsort(d, kind="stable")
    vecs = z[:, order] if want_vectors else None
    return SpectralSample(d[order], vecs)


# --------------------------------------------------------------------------
# localisation


def ipr_elements(a):
    """Sum of squared weights w_ij = |a_ij| / sum |a_ij| over i <= j (one matrix).

    The ensemble quantity is the mean of this over matrices.
    """
    a = np.asarray(a, dtype=float)
    w = np.abs(a[np.triu_indices(a.shape[0])])
    s = w.sum()
    if s == 0.0:
        raise DegenerateTailError("all-zero matrix has no participation ratio")
    w = w / s
    return float(np.dot(w, w))


def ipr_eigenvector(v, tol=1e-8):
    v = np.asarray(v, dtype=float)
    nrm = float(np.dot(v, v))
    if abs(nrm - 1.0) > tol:
        raise ParameterDomainError(f"vector is not normalised (|v|^2 = {nrm})")
    return float(np.sum(v**4))


# --------------------------------------------------------------------------
# spacings


def _window(n):
    return 2 * math.ceil(math.sqrt(n))


def unfold_spacings(samples, bulk_fraction=0.5):
    """Unfolded nearest-neighbour spacings from the bulk of each spectrum, unit mean.

    Each spacing is divided by the mean of the 2 ceil(sqrt(N)) spacings
    centred on it (the local mean level spacing).
    """
    if not samples:
        raise ConfigError("need at least one sample")
    if not (0.0 < bulk_fraction <= 1.0):
        raise ConfigError("bulk_fraction must lie in (0, 1]")
    out = []
    for smp in samples:
        ev = np.sort(np.asarray(smp.eigenvalues if hasattr(smp, "eigenvalues") else smp, dtype=float))
        n = ev.size
        w = _window(n)
        if n < w + 2:
            raise ConfigError(f"N = {n} is too small for an unfolding window of {w}")
        s = np.diff(ev)
        m = s.size
        # centred moving average of the spacings, window shifted inward at the ends
        csum = np.concatenate([[0.0], np.cumsum(s)])
        lo = np.clip(np.arange(m) - w // 2, 0, m - w)
        local = (csum[lo + w] - csum[lo]) / w
        k0 = int(round(0.5 * (1.0 - bulk_fraction) * m))
        k1 = max(k0 + 1, int(round(0.5 * (1.0 + bulk_fraction) * m)))
        u = s[k0:k1] / local[k0:k1]
        out.append(u[np.isfinite(u)])
    u = np.concatenate(out)
    return u / u.mean()


def spacing_histogram(samples, bulk_fraction=0.5, edges=None):
    u = unfold_spacings(samples, bulk_fraction)
    if edges is None:
        edges = np.linspace(0.0, 4.0, 41)
    return Histogram.from_values(u, edges)


def spectral_histogram(samples, scaling_exponent, edges):
    """Pooled histogram of eigenvalues of A / N**scaling_exponent with trial errors."""
    groups = []
    for smp in samples:
        n = smp.eigenvalues.size
        groups.append(smp.eigenvalues / n**scaling_exponent)
    values = np.concatenate(groups) if groups else np.array([])
    return Histogram.from_values(values, edges, groups=groups)


# --------------------------------------------------------------------------
# trials


ENV_WORKERS = "LEVYRMT_WORKERS"


def default_workers():
    try:
        return max(1, int(os.environ.get(ENV_WORKERS, "1")))
    except ValueError as exc:
        raise ConfigError(f"{ENV_WORKERS} must be an integer") from exc


def trial_rng(seed, index):
    """Generator for trial ``index`` of a run seeded with ``seed``; independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def aux_rng(seed, tag):
    """Generator for auxiliary draws of a run, disjoint from every trial stream."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(tag),)))


def _call(args):
    fn, seed, i = args
    return fn(trial_rng(seed, i), i)


def run_trials(fn, n_trials, seed, workers=None):
    """[fn(rng_i, i) for i < n_trials], results ordered by trial index.

    ``fn`` must be picklable when ``workers`` > 1.  Because every trial owns a
    generator derived from (seed, i), the results do not depend on ``workers``.
    """
    workers = default_workers() if workers is None else int(workers)
    jobs = [(fn, seed, i) for i in range(n_trials)]
    if workers <= 1 or n_trials <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_call, jobs, chunksize=max(1, n_trials // (4 * workers))))
