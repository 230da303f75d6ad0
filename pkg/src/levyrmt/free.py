"""Free probability: Green functions, R-transforms and free stable laws.

Conventions.  G(z) = int rho(l) dl / (z - l) is Herglotz: Im z > 0 gives
Im G < 0, so every G met here lives in the closed lower half-plane.  Powers
G**(alpha-1) and logarithms of such points use the branch that is continuous
from below, i.e. arg G in [-pi, 0].  This is the principal branch everywhere
except on the negative real axis itself, where the principal value (arg = pi)
would jump to the wrong sheet.

The boundary value G(lam + i0+) is first approximated at z = lam + 1e-8 i and
then polished by Newton on the real axis.  Roots of
z = R(G) + 1/G are tracked along the vertical ray z = lam + iY from large Y,
where G ~ 1/z is unambiguous, down to the target; G is analytic in the upper
half-plane, so this path never meets a branch point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np
from scipy import special

from .errors import BranchError, ConvergenceError, ParameterDomainError
from .grid import GridFunction, TailModel

I0 = 1e-8  # stands in for i0+

__all__ = [
    "FreeStableParams",
    "GreenValue",
    "BCoefficient",
    "b_coefficient",
    "stable_r_transform",
    "resolvent",
    "green",
    "density",
    "density_tail",
    "density_function",
    "potential",
    "green_from_density",
    "green_derivative_from_density",
    "r_from_green",
    "free_add",
    "density_r_evaluator",
    "resolvent_from_r",
    "density_from_r",
    "haar_orthogonal",
    "sample_from_density",
    "FreeSumConfig",
    "free_stable_sum_matrix",
]


@dataclass(frozen=True)
class FreeStableParams:
    alpha: float
    beta: float = 0.0
    range: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ParameterDomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not (-1.0 <= self.beta <= 1.0):
            raise ParameterDomainError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.range > 0.0:
            raise ParameterDomainError(f"range must be positive, got {self.range}")


@dataclass(frozen=True)
class GreenValue:
    z: complex
    g: complex


@dataclass(frozen=True)
class BCoefficient:
    value: complex

    def __post_init__(self):
        if abs(abs(self.value) - 1.0) > 1e-12:
            raise ValueError("|b| must be 1")


def b_coefficient(p: FreeStableParams) -> BCoefficient:
    a, beta = p.alpha, p.beta
    if a == 1.0:
        raise ParameterDomainError("alpha = 1 has no b coefficient (logarithmic R-transform)")
    if a < 1.0:
        return BCoefficient(-np.exp(1j * a * (1 + beta) * np.pi / 2))
    return BCoefficient(np.exp(1j * (a - 2) * (1 + beta) * np.pi / 2))


# --------------------------------------------------------------------------
# branch helpers


def _arg_lower(w):
    """arg w, continued from the lower half-plane onto the negative real axis."""
    th = np.angle(w)
    return np.where(th > np.pi / 2, th - 2 * np.pi, th)


def _pow_lower(w, e):
    return np.abs(w) ** e * np.exp(1j * e * _arg_lower(w))


def _log_lower(w):
    return np.log(np.abs(w)) + 1j * _arg_lower(w)


# --------------------------------------------------------------------------
# R-transform


def stable_r_transform(z, p: FreeStableParams):
    """R(z) = b z**(alpha-1), or -i(1+beta) - (2 beta/pi) ln z at alpha = 1.

    A range r enters through R_r(z) = r R_1(r z).  Principal branches; a
    non-integer power or a logarithm evaluated on the negative real axis is
    ambiguous and raises ``BranchError``.
    """
    z = np.asarray(z, dtype=complex)
    a, beta, r = p.alpha, p.beta, p.range
    w = r * z
    needs_cut = (a != 1.0 and a != 2.0) or (a == 1.0 and beta != 0.0)
    if needs_cut and np.any((w.imag == 0.0) & (w.real < 0.0)):
        raise BranchError("argument on the negative real axis: branch is ambiguous")
    if a == 1.0:
        if beta != 0.0 and np.any(w == 0):
            raise ParameterDomainError("ln z is singular at z = 0")
        with np.errstate(divide="ignore"):
            out = -1j * (1 + beta) - (2 * beta / np.pi) * np.log(np.where(w == 0, 1.0, w))
    else:
        if a < 1.0 and np.any(w == 0):
            raise ParameterDomainError("z**(alpha-1) is singular at z = 0")
        out = b_coefficient(p).value * w ** (a - 1)
    out = r * out
    return out[()] if out.ndim == 0 else out


def _r_lower(g, p: FreeStableParams):
    """Stable R-transform on the lower-half-plane sheet used by the resolvent."""
    a, beta, r = p.alpha, p.beta, p.range
    w = r * g
    if a == 1.0:
        return r * (-1j * (1 + beta) - (2 * beta / np.pi) * _log_lower(w))
    return r * b_coefficient(p).value * _pow_lower(w, a - 1)


# --------------------------------------------------------------------------
# root tracking


def _track(f, fprime, z, tol=1e-13, max_newton=50, y_start=None, shrink=0.6, ftol=0.0):
    """Solve f(G, z) = 0 along z_t = Re z + i Y_t, Y_t decreasing to Im z.

    ``f`` and ``fprime`` take (G, z) arrays.  Returns G at ``z``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    target = z.imag
    if np.any(target <= 0):
        raise ParameterDomainError("resolvent arguments must lie in the upper half-plane")
    if y_start is None:
        y_start = 1e3 * (1.0 + np.abs(z.real))
    y = np.maximum(y_start, target)
    zt = z.real + 1j * y
    g = 1.0 / zt
    g = _newton(f, fprime, g, zt, tol, max_newton, ftol=ftol)
    step = np.full(z.shape, shrink)
    active = y > target
    while np.any(active):
        y_new = np.where(active, np.maximum(y * step, target), y)
        zt = z.real + 1j * y_new
        g_new, ok = _newton(f, fprime, g, zt, tol, max_newton, report=True, ftol=ftol)
        # a failed step is retried from the old point with a gentler shrink
        ok = ok | ~active
        g = np.where(ok, g_new, g)
        y = np.where(ok, y_new, y)
        step = np.where(ok, np.maximum(step * step, shrink), np.sqrt(step))
        if np.any(step > 1 - 1e-9):
            bad = np.flatnonzero(step > 1 - 1e-9)
            raise ConvergenceError(
                f"root tracking stalled at z = {z[bad[0]]}", residuals=[abs(f(g, zt))[bad[0]]]
            )
        active = y > target
    return g


def _newton(f, fprime, g, z, tol, max_iter, report=False, ftol=0.0):
    """Vectorised Newton; a root is accepted on a small step or |f| <= ftol."""
    ok = np.zeros(g.shape, dtype=bool)
    for _ in range(max_iter):
        fv = f(g, z)
        ok = ok | (np.abs(fv) <= ftol)
        if np.all(ok):
            break
        d = fv / fprime(g, z)
        g = g - np.where(ok, 0.0, d)
        ok = ok | (np.abs(d) <= tol * np.maximum(np.abs(g), 1e-300))
        if np.all(ok):
            break
    if report:
        return g, ok & np.isfinite(g)
    if not np.all(ok):
        bad = np.flatnonzero(~ok)[0]
        raise ConvergenceError(
            f"Newton stagnated at z = {z[bad]} (last iterate {g[bad]})",
            residuals=[abs(f(g, z)[bad])],
        )
    return g


def _herglotz_check(g, z, tol=1e-10):
    if np.any(g.imag > tol):
        bad = np.flatnonzero(g.imag > tol)[0]
        raise BranchError(f"non-Herglotz root Im G = {g.imag[bad]:.3g} at z = {z[bad]}")


# --------------------------------------------------------------------------
# free stable laws


def _stable_equations(p: FreeStableParams):
    """f(G, z) = G R(G) + 1 - z G for the standardised law, and its derivative."""
    a, beta = p.alpha, p.beta
    if a == 1.0:
        c = -1j * (1 + beta)
        k = 2 * beta / np.pi

        def f(g, z):
            return c * g - k * g * _log_lower(g) + 1 - z * g

        def fp(g, z):
            return c - k * (_log_lower(g) + 1) - z

    else:
        b = b_coefficient(p).value

        def f(g, z):
            return b * _pow_lower(g, a) - z * g + 1

        def fp(g, z):
            return a * b * _pow_lower(g, a - 1) - z

    return f, fp


def green(z, p: FreeStableParams):
    """G(z) of the free stable law for z in the upper half-plane."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    r = p.range
    # G_r(z) = G_1(z / r) / r
    std = FreeStableParams(p.alpha, p.beta, 1.0)
    f, fp = _stable_equations(std)
    zs = np.atleast_1d(z) / r
    g = _track(f, fp, zs) / r
    _herglotz_check(g, zs)
    return g.reshape(shape)[()] if shape == () else g.reshape(shape)


def resolvent(lam, p: FreeStableParams, tol=1e-10):
    """G(lam + i0+) on the Herglotz branch of b G**alpha - z G + 1 = 0."""
    lam = np.asarray(lam, dtype=float)
    g = green(lam + 1j * I0 * p.range, p)
    # Newton on the axis itself removes the O(I0 |G'|) offset; keep the
    # off-axis value where the polish wanders (double roots at hard edges)
    f, fp = _stable_equations(FreeStableParams(p.alpha, p.beta, 1.0))
    g0 = np.atleast_1d(g) * p.range
    zs = np.atleast_1d(lam).astype(complex) / p.range
    gp, ok = _newton(f, fp, g0.copy(), zs, 1e-15, 30, report=True, ftol=1e-15)
    ok &= (gp.imag <= 1e-14) & (np.abs(gp - g0) <= 1e-6 * np.maximum(np.abs(g0), 1e-3))
    out = np.where(ok, gp, g0) / p.range
    return out.reshape(lam.shape)[()] if lam.ndim == 0 else out.reshape(lam.shape)


def density(lam, p: FreeStableParams):
    """rho(lam) = -Im G(lam + i0+) / pi."""
    lam = np.asarray(lam, dtype=float)
    if p.alpha == 1.0 and p.beta == 0.0:
        out = p.range / (np.pi * (p.range**2 + lam**2))
    else:
        out = np.maximum(-resolvent(lam, p).imag / np.pi, 0.0)
    return out[()] if np.ndim(out) == 0 else out


def tail_amplitudes(p: FreeStableParams):
    """(c_plus, c_minus) with rho ~ c_pm |lam|**-(alpha+1) as lam -> +-inf."""
    a, r = p.alpha, p.range
    if a == 2.0:
        return 0.0, 0.0
    if a == 1.0:
        return (1 + p.beta) * r / np.pi, (1 - p.beta) * r / np.pi
    b = b_coefficient(p).value
    c_plus = -b.imag / np.pi
    c_minus = (b * np.exp(-1j * np.pi * a)).imag / np.pi
    return c_plus * r**a, c_minus * r**a


def density_tail(lam, p: FreeStableParams):
    """Large-|lam| power law; sin(pi alpha/2) |lam|**(-alpha-1) / pi when beta = 0, r = 1."""
    lam = np.asarray(lam, dtype=float)
    cp, cm = tail_amplitudes(p)
    amp = np.where(lam >= 0, cp, cm)
    out = amp * np.abs(lam) ** (-p.alpha - 1)
    return out[()] if out.ndim == 0 else out


def density_function(p: FreeStableParams, lam_max=None, n=4001) -> GridFunction:
    """Density on a sinh grid with the power-law tail model attached."""
    if lam_max is None:
        lam_max = 2.0 * p.range if p.alpha == 2.0 else 200.0 * p.range
    s = np.linspace(-1, 1, n)
    stretch = 1e-9 if p.alpha == 2.0 else 4.0
    lam = lam_max * np.sinh(stretch * s) / math.sinh(stretch)
    cp, cm = tail_amplitudes(p)
    tail = None if p.alpha == 2.0 else TailModel(p.alpha + 1.0, cp, cm)
    return GridFunction(lam, density(lam, p), name="density", tail=tail, meta={"alpha": p.alpha})


# --------------------------------------------------------------------------
# potential


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _potential_edges(r):
    inner = np.linspace(0.0, 4.0 * r, 81)
    outer = 4.0 * r * np.geomspace(1.0, 2.5e3, 120)[1:]
    return np.concatenate([inner, outer])


def potential(lam, p: FreeStableParams):
    """V(lam) with V' = 2 Re G(lam + i0+) and V(0) = 0.

    Integrated with Gauss panels out to |lam| = 1e4 r; further out the
    large-|lam| form 2 ln|lam| - (2/alpha) Re(b lam**-alpha), matched to the
    integral at the end of the grid, is used.
    """
    lam = np.asarray(lam, dtype=float)
    r = p.range
    edges = _potential_edges(r)
    x_end = edges[-1]

    def vprime(x):
        return 2.0 * resolvent(x, p).real

    flat = lam.ravel()
    res = np.empty(flat.size)
    res[flat == 0] = 0.0
    for sign in (1.0, -1.0):
        sel = np.flatnonzero(sign * flat > 0)
        if sel.size == 0:
            continue
        e = sign * edges
        lo, hi = e[:-1], e[1:]
        nodes = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * _GL_X
        vals = vprime(nodes.ravel()).reshape(nodes.shape)
        panel = 0.5 * (hi - lo) * (vals @ _GL_W)
        cum = np.concatenate([[0.0], np.cumsum(panel)])
        x = flat[sel]
        ax = np.abs(x)
        inside = ax <= x_end
        v = np.empty(x.size)
        if np.any(inside):
            xi = x[inside]
            k = np.clip(np.searchsorted(edges, np.abs(xi), side="right") - 1, 0, edges.size - 2)
            a0 = sign * edges[k]
            pn = 0.5 * (a0 + xi)[:, None] + 0.5 * (xi - a0)[:, None] * _GL_X
            part = 0.5 * (xi - a0) * (vprime(pn.ravel()).reshape(pn.shape) @ _GL_W)
            v[inside] = cum[k] + part
        if np.any(~inside):
            far = _v_asym(x[~inside], p)
            v[~inside] = cum[-1] + far - _v_asym(np.array([sign * x_end]), p)[0]
        res[sel] = v
    out = res.reshape(lam.shape)
    return out[()] if out.ndim == 0 else out


def _v_asym(x, p: FreeStableParams):
    """2 ln|x| - (2/alpha) Re(b x**-alpha) up to a constant (leading term only at alpha = 1)."""
    a, r = p.alpha, p.range
    base = 2.0 * np.log(np.abs(x))
    if a in (1.0, 2.0):
        return base
    b = b_coefficient(p).value
    # x**-alpha on the boundary of the upper half-plane: arg x in {0, pi}
    ph = np.where(x > 0, 1.0 + 0j, np.exp(-1j * np.pi * a))
    return base - (2.0 / a) * (b * ph * (np.abs(x) / r) ** (-a)).real


def potential_asymptote(lam, p: FreeStableParams):
    """2 ln lam - (2/alpha) Re(b lam**-alpha), the large-lam form of V."""
    return _v_asym(np.asarray(lam, dtype=float), p)


# --------------------------------------------------------------------------
# generic pipeline: density -> G -> R -> (sum) -> G -> density


def _as_points(rho: GridFunction, z):
    z = np.asarray(z, dtype=complex)
    zf = np.atleast_1d(z).ravel()
    x, y = rho.x, rho.y
    on_axis = zf.imag == 0
    if np.any(on_axis):
        zr = zf.real[on_axis]
        inside = (zr >= x[0]) & (zr <= x[-1])
        if rho.tail is not None or np.any(inside & (np.interp(zr, x, y) > 0)):
            raise ParameterDomainError("z on the support with Im z = 0")
    return z, zf


def _segments(rho: GridFunction, zf):
    x, y = rho.x, rho.y
    a, b = x[:-1], x[1:]
    s = np.diff(y) / np.diff(x)
    zc = zf[:, None]
    rho_z = y[:-1] + s * (zc - a)
    # log((z-a)/(z-b)) = log1p(u) avoids cancellation on fine grids; z - a and
    # z - b share a half-plane off the axis, so no branch is crossed
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = _log1p_complex((b - a) / (zc - b))
    return a, b, s, zc, rho_z, logs


def green_from_density(rho: GridFunction, z):
    """Cauchy transform of a tabulated density.

    The density is taken piecewise linear between grid points (exact product
    integration); power-law tails in ``rho.tail`` are added beyond the grid.
    """
    z, zf = _as_points(rho, z)
    a, b, s, _, rho_z, logs = _segments(rho, zf)
    g = (rho_z * logs - s * (b - a)).sum(axis=1)
    if rho.tail is not None:
        g = g + _tail_green(rho.tail, rho.x[0], rho.x[-1], zf)
    g = g.reshape(z.shape)
    return g[()] if z.ndim == 0 else g


def green_derivative_from_density(rho: GridFunction, z):
    """dG/dz of ``green_from_density``, in closed form."""
    z, zf = _as_points(rho, z)
    a, b, s, zc, rho_z, logs = _segments(rho, zf)
    dg = (s * logs - rho_z * (b - a) / ((zc - a) * (zc - b))).sum(axis=1)
    if rho.tail is not None:
        dg = dg + _tail_green(rho.tail, rho.x[0], rho.x[-1], zf, derivative=True)
    dg = dg.reshape(z.shape)
    return dg[()] if z.ndim == 0 else dg


def _log1p_complex(u):
    """Accurate log(1 + u) for complex u (numpy's complex log1p is not)."""
    w = 1.0 + u
    d = w - 1.0
    return np.where(d == 0, u, np.log(w) * (u / np.where(d == 0, 1.0, d)))


_GJ_CACHE: dict = {}


def _tail_green(tail: TailModel, x_lo, x_hi, z, derivative=False):
    """int_{x_hi}^inf A+ x**-p/(z - x) dx + int_{-inf}^{x_lo} A- |x|**-p/(z - x) dx, or its z-derivative."""
    p = tail.exponent
    key = round(p, 12)
    if key not in _GJ_CACHE:
        # weight u**(p-1) on [0, 1]: Jacobi (0, p-1) on [-1, 1] mapped
        t, w = special.roots_jacobi(40, 0.0, p - 1.0)
        _GJ_CACHE[key] = (0.5 * (t + 1.0), w / 2.0**p)
    u, w = _GJ_CACHE[key]
    zc = z[:, None]
    out = np.zeros(z.shape, dtype=complex)
    if tail.amp_plus:
        X = x_hi
        # x = X / u: dx/(z-x) x**-p -> X**(1-p) u**(p-1) du / (z u - X)
        den = zc * u - X
        out += tail.amp_plus * X ** (1 - p) * np.sum(-w * u / den**2 if derivative else w / den, axis=1)
    if tail.amp_minus:
        X = -x_lo
        den = zc * u + X
        out += tail.amp_minus * X ** (1 - p) * np.sum(-w * u / den**2 if derivative else w / den, axis=1)
    return out


def r_from_green(green_eval: Callable, z, tol=1e-12, mean=0.0, max_iter=60, derivative=None):
    """R(z) = w - 1/z where G(w) = z.

    ``z`` should be small and in the lower half-plane, so that w lies in the
    upper half-plane.  Newton's method seeded from w = 1/z + mean, using
    ``derivative`` (a callable for G') if given and central differences
    otherwise; iterates are kept in Im w > 0.
    """
    z = np.asarray(z, dtype=complex)
    zf = np.atleast_1d(z).ravel()
    w = 1.0 / zf + mean
    w = np.where(w.imag > 0, w, w.real + 1j * np.abs(1.0 / zf))
    for _ in range(max_iter):
        g = green_eval(w)
        if derivative is not None:
            dg = derivative(w)
        else:
            h = 1e-6 * np.maximum(np.abs(w), 1.0)
            dg = (green_eval(w + h) - green_eval(w - h)) / (2 * h)
        step = (g - zf) / dg
        w_new = w - step
        # roots may sit on the real axis (G(w) = z with z on the boundary
        # curve); project onto a thin strip above it, where G is continuous
        floor = 1e-14 * np.maximum(np.abs(w_new.real), 1.0)
        w_new = np.where(w_new.imag < floor, w_new.real + 1j * floor, w_new)
        step = w - w_new
        w = w_new
        if np.all(np.abs(step) <= tol * np.maximum(np.abs(w), 1.0)):
            break
    resid = np.abs(green_eval(w) - zf)
    if np.any(resid > 1e3 * tol * np.maximum(np.abs(zf), 1.0)):
        raise ConvergenceError(
            f"inversion G(w) = z failed, residual {resid.max():.3g}", residuals=list(resid)
        )
    out = (w - 1.0 / zf).reshape(z.shape)
    return out[()] if z.ndim == 0 else out


def density_r_evaluator(rho: GridFunction, tol=1e-12) -> Callable:
    """Callable R(z) of a tabulated density via its Cauchy transform.

    R exists only on G(upper half-plane).  A lone tabulated law evaluated on
    its own support asks for R on the boundary of that set, which is resolved
    only to the accuracy of the table; genuine sums stay inside it.
    """
    mean = float(np.trapezoid(rho.x * rho.y, rho.x)) if rho.tail is None else 0.0

    def r_eval(z):
        return r_from_green(
            partial(green_from_density, rho), z, tol=tol, mean=mean,
            derivative=partial(green_derivative_from_density, rho),
        )

    return r_eval


def free_add(*r_evals: Callable) -> Callable:
    """R-transform of the free sum: the pointwise sum of R-transforms."""

    def r_sum(z):
        z = np.asarray(z, dtype=complex)
        return sum(np.asarray(r(z), dtype=complex) for r in r_evals) if r_evals else np.zeros_like(z)

    return r_sum


def resolvent_from_r(r_eval: Callable, z, tol=1e-10):
    """G(z) solving z = R(G) + 1/G on the Herglotz branch (upper half-plane z).

    ``r_eval`` may itself be numerical, so roots are accepted once the
    residual of G R(G) + 1 - z G drops below ``tol``.
    """
    z = np.asarray(z, dtype=complex)

    def f(g, zz):
        return g * r_eval(g) + 1.0 - zz * g

    def fp(g, zz):
        h = 1e-6 * np.maximum(np.abs(g), 1e-12)
        return (f(g + h, zz) - f(g, zz)) / h

    zf = np.atleast_1d(z).ravel()
    y0 = 10.0 * (1.0 + np.abs(zf.real))
    g = _track(f, fp, zf, tol=0.0, y_start=y0, shrink=0.4, ftol=tol)
    _herglotz_check(g, zf)
    g = g.reshape(z.shape)
    return g[()] if z.ndim == 0 else g


def density_from_r(r_eval: Callable, lam):
    """rho(lam) = -Im G(lam + i0+) / pi for the law with R-transform ``r_eval``."""
    lam = np.asarray(lam, dtype=float)
    g = resolvent_from_r(r_eval, lam + 1j * I0)
    return np.maximum(-np.asarray(g).imag / np.pi, 0.0)


def stable_r_evaluator(p: FreeStableParams) -> Callable:
    """Callable R(z) on the sheet used by the resolvent solvers."""
    return partial(_r_lower, p=p)


# --------------------------------------------------------------------------
# matrix realisations


def haar_orthogonal(n, rng):
    """Haar-distributed orthogonal matrix: QR of a Gaussian matrix, R-diagonal signs fixed."""
    if n < 1:
        raise ParameterDomainError("N must be >= 1")
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def sample_from_density(rho: GridFunction, size, rng):
    """i.i.d. draws by inverting the tabulated CDF (piecewise-linear density).

    Tail mass from ``rho.tail`` is sampled exactly as a Pareto law beyond the grid.
    """
    x, y = rho.x, np.maximum(rho.y, 0.0)
    # exact CDF of the piecewise-linear density at the nodes
    seg = 0.5 * (y[1:] + y[:-1]) * np.diff(x)
    body = float(seg.sum())
    left = right = 0.0
    p_exp = None
    if rho.tail is not None:
        p_exp = rho.tail.exponent - 1.0
        right = rho.tail.amp_plus * x[-1] ** (-p_exp) / p_exp if x[-1] > 0 else 0.0
        left = rho.tail.amp_minus * (-x[0]) ** (-p_exp) / p_exp if x[0] < 0 else 0.0
    total = body + left + right
    u = rng.random(size) * total
    out = np.empty(np.shape(u))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    mid = (u >= left) & (u < left + body)
    if np.any(mid):
        v = u[mid] - left
        k = np.clip(np.searchsorted(cum, v, side="right") - 1, 0, seg.size - 1)
        # solve the quadratic for the position inside segment k
        h = x[k + 1] - x[k]
        y0, y1 = y[k], y[k + 1]
        rem = v - cum[k]
        sl = (y1 - y0) / h
        with np.errstate(invalid="ignore", divide="ignore"):
            t_quad = (-y0 + np.sqrt(np.maximum(y0**2 + 2 * sl * rem, 0.0))) / sl
            t_lin = rem / y0
        t = np.where(np.abs(sl) * h > 1e-12 * np.maximum(y0, 1e-300), t_quad, t_lin)
        t = np.where(np.isfinite(t), t, 0.5 * h)
        out[mid] = x[k] + np.clip(t, 0.0, h)
    lo = u < left
    if np.any(lo):
        q = u[lo] / left
        out[lo] = x[0] * q ** (-1.0 / p_exp)
    hi = u >= left + body
    if np.any(hi):
        q = (total - u[hi]) / right
        out[hi] = x[-1] * np.maximum(q, 1e-300) ** (-1.0 / p_exp)
    return out


@dataclass(frozen=True)
class FreeSumConfig:
    """Ingredients for K**(-1/alpha) sum_i O_i A_i O_i^T.

    ``variant`` is "diag" (A_i diagonal with i.i.d. entries drawn from
    ``diag_density``) or "wigner-levy" (A_i Wigner-Levy matrices with entries
    L_alpha^{R, beta} scaled by N**(-1/alpha)).
    """

    n: int
    alpha: float
    variant: str = "diag"
    diag_density: GridFunction | None = field(default=None, compare=False)
    beta: float = 0.0
    range: float = 1.0

    def __post_init__(self):
        if self.variant not in ("diag", "wigner-levy"):
            raise ParameterDomainError(f"unknown free-sum variant {self.variant!r}")
        if self.variant == "diag" and self.diag_density is None:
            raise ParameterDomainError("variant 'diag' needs diag_density")
        if self.n < 1:
            raise ParameterDomainError("N must be >= 1")


def free_stable_sum_matrix(cfg: FreeSumConfig, k, rng, seed=None):
    """Eigenvalues of K**(-1/alpha) sum_{i<K} O_i A_i O_i^T with independent Haar O_i."""
    from .matrices import SpectralSample, eigen_sym, sample_wigner_levy
    from .stable import StableParams

    if k < 1:
        raise ParameterDomainError("K must be >= 1")
    n = cfg.n
    acc = np.zeros((n, n))
    for _ in range(k):
        if cfg.variant == "diag":
            d = sample_from_density(cfg.diag_density, n, rng)
            o = haar_orthogonal(n, rng)
            acc += (o * d) @ o.T
        else:
            a = sample_wigner_levy(n, StableParams(cfg.alpha, cfg.beta, cfg.range), rng)
            a = a / n ** (1.0 / cfg.alpha)
            o = haar_orthogonal(n, rng)
            acc += o @ a @ o.T
    acc = 0.5 * (acc + acc.T) / k ** (1.0 / cfg.alpha)
    ev = eigen_sym(acc).eigenvalues
    return SpectralSample(
        eigenvalues=ev,
        config={"ensemble": f"free-sum-{cfg.variant}", "N": n, "K": k, "alpha": cfg.alpha},
        seed=seed,
    )
