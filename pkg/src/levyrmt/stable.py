"""One-dimensional alpha-stable (Levy) laws.

Parameterisation is (alpha, beta, range) with the log-characteristic function

    c(k) = -R**alpha |k|**alpha (1 + i beta sgn(k) tan(pi alpha / 2))       alpha != 1
    c(k) = -R |k| (1 + i (2 beta / pi) sgn(k) ln|R k|)                      alpha == 1

Densities, tails and the sampler use the orientation in which beta = +1 puts
the heavy tail (and, for alpha < 1, the whole support) on the positive axis:

    L(x) ~ (1 +- beta) gamma_alpha R**alpha / |x|**(alpha + 1),  x -> +-inf.

In those terms a law with parameters (alpha, beta, R) is Samorodnitsky-Taqqu
S(alpha, beta, sigma=R, mu=0) (Nolan's S1 parameterisation) for alpha != 1.
For alpha == 1 the family is a pure scale family, X = R * X_1, i.e. the S1
law with sigma=R shifted by -(2/pi) beta R ln R; for beta == 0 the two agree.
The mapping of the printed ``c(k)`` onto that orientation is a convention
choice; see ``c_transform`` for the formula returned verbatim.

Densities are computed from Zolotarev's integral representation with
Gauss-Legendre panels clustered around the peak of the integrand, never by
direct oscillatory Fourier inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import (
    AccuracyError,
    DegenerateTailError,
    InsufficientDataError,
    ParameterDomainError,
    StabilityMismatchError,
    TailUndefinedError,
)

__all__ = [
    "StableParams",
    "TailAmplitudes",
    "gamma_alpha",
    "c_transform",
    "pdf",
    "standard_pdf",
    "tail_asymptote",
    "tail_amplitudes",
    "sample",
    "add_params",
    "sum_location_shift",
    "tail_to_stable_params",
    "frechet_max_check",
]

DEFAULT_TOL = 1e-8
_NEAR0 = 1e-6
_BETA0 = 1e-8
_FAR = 1e6


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 0.0
    range: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ParameterDomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (-1.0 <= self.beta <= 1.0):
            raise ParameterDomainError(f"beta must lie in [-1, 1], got {self.beta}")
        if not (self.range > 0.0 and math.isfinite(self.range)):
            raise ParameterDomainError(f"range must be positive, got {self.range}")


@dataclass(frozen=True)
class TailAmplitudes:
    c_plus: float
    c_minus: float

    def __post_init__(self):
        if self.c_plus < 0 or self.c_minus < 0:
            raise ParameterDomainError("tail amplitudes must be non-negative")


def gamma_alpha(alpha):
    """Tail constant Gamma(1 + alpha) sin(pi alpha / 2) / pi."""
    return special.gamma(1.0 + alpha) * np.sin(np.pi * alpha / 2.0) / np.pi


def c_transform(k, p: StableParams):
    """Log of the characteristic function, exactly as parameterised above.

    For alpha == 1 the logarithm is taken of |R k|, the sign being carried by
    sgn(k); this keeps c(-k) = conj(c(k)).
    """
    k = np.asarray(k, dtype=float)
    a, b, r = p.alpha, p.beta, p.range
    ak = np.abs(k)
    sgn = np.sign(k)
    if a == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            # ln r + ln|k| rather than ln(r|k|): r|k| can underflow for tiny k
            log_term = np.where(ak > 0, math.log(r) + np.log(np.where(ak > 0, ak, 1.0)), 0.0)
        out = -r * ak * (1.0 + 1j * (2.0 * b / np.pi) * sgn * log_term)
    else:
        tan_term = 0.0 if a == 2.0 else math.tan(math.pi * a / 2.0)
        out = -(r**a) * ak**a * (1.0 + 1j * b * sgn * tan_term)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# density

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


# Panel breakpoints (as fractions of the distance from the peak to the end of
# the interval).  Geometric towards the peak and towards the endpoint, where the
# integrand can have algebraic behaviour.
_FRACTIONS = np.array(
    [0.0]
    + [10.0**k for k in range(-16, 0)]
    + [0.2, 0.35, 0.5, 0.65, 0.8, 0.9]
    + [1.0 - 10.0**k for k in range(-2, -11, -1)]
    + [1.0]
)


def _col(v, like):
    return v[:, None] if np.ndim(like) == 2 else v


def _lng_factory(alpha, beta):
    """Return (log g(theta; y), theta_lo, theta_hi, prefactor(y)) for y > 0.

    ``beta`` is an array (one value per point, after reflection).
    """
    if alpha == 1.0:
        bb = beta

        def lng(theta, y):
            bb_ = _col(bb, theta)
            t = np.pi / 2.0 + bb_ * theta
            return (
                -np.pi * y / (2.0 * bb_)
                + np.log(2.0 / np.pi)
                + np.log(t)
                - np.log(np.cos(theta))
                + t * np.tan(theta) / bb_
            )

        lo = np.full_like(bb, -np.pi / 2.0)
        hi = np.full_like(bb, np.pi / 2.0)

        def pref(y):
            return 1.0 / (2.0 * np.abs(bb))

        return lng, lo, hi, pref, True

    tan_a = 0.0 if alpha == 2.0 else math.tan(math.pi * alpha / 2.0)
    th0 = np.arctan(beta * tan_a) / alpha
    am1 = alpha - 1.0
    c0 = np.log(np.cos(alpha * th0)) / am1

    def lng(theta, y):
        t0 = _col(th0, theta)
        cth = np.cos(theta)
        return (
            (alpha / am1) * np.log(y)
            + _col(c0, theta)
            + (alpha / am1) * (np.log(cth) - np.log(np.sin(alpha * (t0 + theta))))
            + np.log(np.cos(alpha * t0 + am1 * theta))
            - np.log(cth)
        )

    def pref(y):
        return alpha / (np.pi * abs(am1) * y)

    return lng, -th0, np.full_like(th0, np.pi / 2.0), pref, alpha < 1.0


def _peak(lng, lo, hi, y, increasing, iters=70):
    a = lo.copy()
    b = hi.copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        with np.errstate(all="ignore"):
            v = lng(m, y)
        below = v < 0.0 if increasing else v > 0.0
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    return 0.5 * (a + b)


def _side_panels(start, end, n):
    """Nodes/weights on panels from ``start`` (peak) to ``end``; arrays (npts,)."""
    x, w = _gauss_legendre(n)
    d = (end - start)[:, None]
    br = start[:, None] + d * _FRACTIONS[None, :]
    a = br[:, :-1]
    b = br[:, 1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[..., None] + half[..., None] * x
    weights = np.abs(half)[..., None] * w
    return nodes.reshape(len(start), -1), weights.reshape(len(start), -1)


def _integral(lng, lo, hi, y, increasing, n):
    with np.errstate(all="ignore"):
        ts = _peak(lng, lo, hi, y, increasing)
        total = np.zeros_like(y)
        for end in (lo, hi):
            nodes, weights = _side_panels(ts, end, n)
            v = lng(nodes, y[:, None])
            integrand = np.exp(v - np.exp(v))
            integrand = np.where(np.isfinite(integrand), integrand, 0.0)
            total += np.sum(integrand * weights, axis=1)
    return total


def _standard_pdf_core(y, alpha, beta, n=16, estimate=False):
    """Range-1 density for a flat array ``y``; ``beta`` scalar or per-point array."""
    y = np.asarray(y, dtype=float)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), y.shape)
    out = np.zeros_like(y)
    err = np.zeros_like(y)
    if alpha == 1.0:
        # the skewed alpha = 1 law differs from Cauchy by ~0.1 |beta| while its
        # integral form degenerates as beta -> 0
        cauchy = np.abs(beta) < _BETA0
        out[cauchy] = 1.0 / (np.pi * (1.0 + y[cauchy] ** 2))
        # f(x; beta) = f(-x; -beta)
        yy = y * np.sign(beta)
        bb = np.abs(beta)
        mask = ~cauchy
    else:
        zero = y == 0
        yy = np.abs(y)
        bb = np.where(y > 0, beta, -beta)
        mask = ~zero
        if np.any(zero):
            tan_a = 0.0 if alpha == 2.0 else math.tan(math.pi * alpha / 2.0)
            bz = beta[zero]
            th0 = np.arctan(bz * tan_a) / alpha
            out[zero] = (
                special.gamma(1.0 + 1.0 / alpha)
                * np.cos(th0)
                / (np.pi * (1.0 + (bz * tan_a) ** 2) ** (1.0 / (2.0 * alpha)))
            )
    if 1.0 <= alpha < 2.0:
        # theta nodes cannot resolve the peak next to pi/2 this far out; the
        # leading tail term is exact to ~|y|**-alpha relative there.
        far = mask & (np.abs(y) > _FAR)
        if np.any(far):
            yf = y[far]
            out[far] = (1.0 + np.sign(yf) * beta[far]) * gamma_alpha(alpha) / np.abs(yf) ** (alpha + 1.0)
            mask &= ~far
    if alpha != 1.0:
        # the theta integrand collapses onto a sliver as y -> 0; the density is
        # smooth there, so interpolate between f(0) and f(+-_NEAR0)
        near = mask & (np.abs(y) < _NEAR0)
        if np.any(near):
            yn = y[near]
            h = np.sign(yn) * _NEAR0
            ends, e_end = _standard_pdf_core(np.concatenate([np.zeros_like(yn), h]), alpha,
                                             np.concatenate([beta[near], beta[near]]), n, estimate)
            f0, fh = ends[: yn.size], ends[yn.size :]
            out[near] = f0 + (fh - f0) * (yn / h)
            err[near] = e_end[yn.size :]
            mask &= ~near
    if not np.any(mask):
        return out, err

    ym = yy[mask]
    lng, lo, hi, pref, increasing = _lng_factory(alpha, bb[mask])
    empty = lo >= hi - 1e-15  # one-sided law evaluated off its support
    val = _integral(lng, lo, hi, ym, increasing, n) * pref(ym)
    if estimate:
        coarse = _integral(lng, lo, hi, ym, increasing, (3 * n) // 4) * pref(ym)
        e = np.abs(val - coarse)
        e[empty] = 0.0
        err[mask] = e
    val[empty] = 0.0
    out[mask] = np.maximum(val, 0.0)
    return out, err


def standard_pdf(y, alpha, beta, n=16, chunk=4096):
    """Density of the range-1 law at ``y``; vectorised, no error control.

    ``beta`` may be an array broadcastable against ``y``.
    """
    y = np.asarray(y, dtype=float)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), y.shape).ravel()
    flat = y.ravel()
    out = np.empty_like(flat)
    for s in range(0, flat.size, chunk):
        sl = slice(s, s + chunk)
        out[sl] = _standard_pdf_core(flat[sl], alpha, beta[sl], n)[0]
    return out.reshape(y.shape)


def pdf(x, p: StableParams, tol=DEFAULT_TOL, chunk=4096):
    """Density L_alpha^{R, beta}(x).

    Raises ``AccuracyError`` when the quadrature error estimate exceeds ``tol``
    (absolute) at any point.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel() / p.range
    out = np.empty_like(flat)
    worst = 0.0
    for s in range(0, flat.size, chunk):
        v, e = _standard_pdf_core(flat[s : s + chunk], p.alpha, p.beta, 32, estimate=True)
        if tol is not None:
            # second pass with more nodes where the estimate is too large
            redo = e * (1.0 / p.range) > tol
            if np.any(redo):
                v2, e2 = _standard_pdf_core(flat[s : s + chunk][redo], p.alpha, p.beta, 64, estimate=True)
                v[redo] = v2
                e[redo] = e2
        out[s : s + chunk] = v
        if e.size:
            worst = max(worst, float(np.max(e)) / p.range)
    if tol is not None and worst > tol:
        raise AccuracyError(
            f"stable pdf quadrature error {worst:.3g} exceeds tolerance {tol:.3g}",
            error_estimate=worst,
        )
    out = (out / p.range).reshape(x.shape)
    return out[()] if out.ndim == 0 else out


def tail_asymptote(x, p: StableParams):
    """Leading power-law tail (1 +- beta) gamma_alpha R**alpha / |x|**(alpha+1)."""
    if p.alpha >= 2.0:
        raise TailUndefinedError("alpha = 2 is Gaussian: no power-law tail")
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise ParameterDomainError("tail asymptote is undefined at x = 0")
    amp = gamma_alpha(p.alpha) * p.range**p.alpha
    out = (1.0 + np.sign(x) * p.beta) * amp / np.abs(x) ** (p.alpha + 1.0)
    return out[()] if out.ndim == 0 else out


def tail_amplitudes(p: StableParams) -> TailAmplitudes:
    if p.alpha >= 2.0:
        raise TailUndefinedError("alpha = 2 is Gaussian: no power-law tail")
    amp = gamma_alpha(p.alpha) * p.range**p.alpha
    return TailAmplitudes((1.0 + p.beta) * amp, (1.0 - p.beta) * amp)


def tail_to_stable_params(alpha, t: TailAmplitudes) -> StableParams:
    """Stable law in whose basin of attraction a density with tails C+- lies."""
    if not (0.0 < alpha < 2.0):
        raise ParameterDomainError(f"alpha must lie in (0, 2), got {alpha}")
    s = t.c_plus + t.c_minus
    if s <= 0:
        raise DegenerateTailError("C+ + C- must be positive")
    r = (s / (2.0 * gamma_alpha(alpha))) ** (1.0 / alpha)
    return StableParams(alpha, (t.c_plus - t.c_minus) / s, float(r))


def add_params(p1: StableParams, p2: StableParams) -> StableParams:
    """Parameters of x1 + x2 for independent stable x1, x2 of equal index."""
    if p1.alpha != p2.alpha:
        raise StabilityMismatchError(f"cannot add alpha={p1.alpha} and alpha={p2.alpha}")
    a = p1.alpha
    w1 = p1.range**a
    w2 = p2.range**a
    beta = (p1.beta * w1 + p2.beta * w2) / (w1 + w2)
    return StableParams(a, float(np.clip(beta, -1.0, 1.0)), float((w1 + w2) ** (1.0 / a)))


def sum_location_shift(p1: StableParams, p2: StableParams) -> float:
    """Location offset of x1 + x2 relative to the law ``add_params(p1, p2)``.

    Zero except for alpha = 1 with skewness: there ln(R|k|) in the exponent
    makes the sum R-scaled only up to a shift,
    x1 + x2 ~ L(add_params) + (2/pi)(beta R ln R - beta1 R1 ln R1 - beta2 R2 ln R2).
    """
    p = add_params(p1, p2)
    if p.alpha != 1.0:
        return 0.0

    def t(q):
        return q.beta * q.range * math.log(q.range)

    return float((2.0 / np.pi) * (t(p) - t(p1) - t(p2)))


# --------------------------------------------------------------------------
# sampling


def sample(p: StableParams, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draws; returns a float when ``size`` is None."""
    a, b = p.alpha, p.beta
    v = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size)
    w = rng.standard_exponential(size)
    if a == 1.0:
        h = np.pi / 2.0 + b * v
        x = (2.0 / np.pi) * (h * np.tan(v) - b * np.log((np.pi / 2.0) * w * np.cos(v) / h))
    else:
        tan_a = 0.0 if a == 2.0 else math.tan(math.pi * a / 2.0)
        shift = math.atan(b * tan_a) / a
        scale = (1.0 + (b * tan_a) ** 2) ** (1.0 / (2.0 * a))
        x = (
            scale
            * np.sin(a * (v + shift))
            / np.cos(v) ** (1.0 / a)
            * (np.cos(v - a * (v + shift)) / w) ** ((1.0 - a) / a)
        )
    x = p.range * x
    return float(x) if size is None else x


# --------------------------------------------------------------------------
# extreme elements


class FrechetFit(NamedTuple):
    slope: float
    intercept: float
    expected: float


def frechet_max_check(sizes, samples, alpha) -> FrechetFit:
    """Least-squares slope of log|a_max| against log N.

    ``samples[i]`` holds one or more max-|entry| values observed at ``sizes[i]``;
    repeated draws are averaged in log space before the fit.
    """
    sizes = np.asarray(sizes, dtype=float)
    if len(np.unique(sizes)) < 3:
        raise InsufficientDataError("need at least three distinct matrix sizes")
    ys = np.array([np.mean(np.log(np.abs(np.atleast_1d(s)))) for s in samples])
    slope, intercept = np.polyfit(np.log(sizes), ys, 1)
    return FrechetFit(float(slope), float(intercept), 2.0 / alpha)
