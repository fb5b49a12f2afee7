"""Plasmon resonance for a polarized dipole source.

With lambda = lambda0 + i delta the induced density phi_delta solves
(lambda I - K*) phi = d_nu q.  Its H* norm is an integral of the spectral
density of d_nu q against a Poisson kernel,

    ||phi_delta||^2 = int mu'(t) / ((lambda0 - t)^2 + delta^2) dt,

and for a dipole the density is explicit:
mu'(t) = 2 g_j(s) / |eta'(s)| with s = eta^{-1}(|t|), j = 1 for t > 0 and
j = 2 for t < 0.  All integrals here are carried out in the frequency s:
t = eta(s) turns the square-root endpoint at t = +-b and the logarithmic
endpoint at t = 0 into smooth behaviour at s = 0 and s = infinity.  The
Lorentzian peak is resolved with the arctangent substitution.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import MINUS, PLUS, Geometry, GeometryError, boundary_point, corner_offset, is_exterior, psi, psi_gradients
from .multipliers import bound, eta, eta_gap, eta_inverse, eta_prime, p1, s2p2
from .spectral_core import BoundaryDensity, XiGrid

QUAD_RTOL = 1e-6


class SourceError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, msg, value, error):
        super().__init__(f"{msg}: value {value:.6e}, estimated error {error:.3e}")
        self.value = value
        self.error = error


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class DipoleSource:
    z: complex
    a: tuple  # unit polarization (a1, a2)

    def __post_init__(self):
        n = math.hypot(*self.a)
        if not abs(n - 1.0) < 1e-12:
            raise SourceError(f"polarization must be a unit vector, |a| = {n}")

    @property
    def avec(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float)

    def validate(self, g: Geometry, *, strict: bool = True) -> list[str]:
        """Check the source conditions; raise (strict) or return the violations."""
        if not bool(is_exterior(g, self.z)):
            raise SourceError("the dipole must lie outside the closed domain")
        problems = []
        w = complex(psi(g, self.z))
        if abs(w.imag) < 1e-12:
            problems.append("Psi2(z) = 0: the source lies on the x1-axis")
        gr1, gr2 = psi_gradients(g, self.z)
        if abs(float(self.avec @ gr1)) < 1e-12:
            problems.append("a . grad Psi1(z) = 0")
        if abs(float(self.avec @ gr2)) < 1e-12:
            problems.append("a . grad Psi2(z) = 0")
        if strict and problems:
            raise SourceError("; ".join(problems))
        return problems

    def depth(self, g: Geometry) -> float:
        """|Psi2(z)| / theta0 in [0, 1): 1 means on the boundary."""
        return abs(complex(psi(g, self.z)).imag) / g.theta0


def dipole_at_depth(g: Geometry, kappa: float, xi: float = 0.3, a=None) -> DipoleSource:
    """Dipole at bipolar point (xi, kappa * theta0), polarization along (1, 1)/sqrt 2."""
    from .geometry import phi as phi_map

    if not 0 < kappa < 1:
        raise SourceError("depth must lie in (0, 1)")
    z = complex(phi_map(g, xi + 1j * kappa * g.theta0))
    if a is None:
        a = (1 / math.sqrt(2), 1 / math.sqrt(2))
    return DipoleSource(z, tuple(a))


def dipole_potential(src: DipoleSource, x) -> np.ndarray:
    """q(x) = a.(x - z) / (2 pi |x - z|^2)."""
    d = np.asarray(x, dtype=complex) - src.z
    if np.any(d == 0):
        raise SourceError("potential is singular at the source")
    a = src.avec
    return (a[0] * d.real + a[1] * d.imag) / (2 * math.pi * np.abs(d) ** 2)


def dipole_gradient(src: DipoleSource, x) -> np.ndarray:
    """grad q as complex numbers q_x1 + i q_x2."""
    d = np.asarray(x, dtype=complex) - src.z
    a = complex(*src.a)
    r2 = np.abs(d) ** 2
    adot = (np.conj(a) * d).real
    return (a / r2 - 2 * adot * d / r2**2) / (2 * math.pi)


def dipole_normal_derivative(g: Geometry, src: DipoleSource, grid: XiGrid | None = None) -> BoundaryDensity:
    """d_nu q sampled on both arcs, projected onto mean zero."""
    src.validate(g, strict=False)
    grid = XiGrid() if grid is None else grid
    vals = {}
    for side in (PLUS, MINUS):
        corner, off = corner_offset(g, grid.xi, side)
        x = corner + off
        nu = (x - g.center_of(side)) / g.a
        gq = dipole_gradient(src, x)
        vals[side] = (np.conj(nu) * gq).real.astype(complex)
    dens = BoundaryDensity(grid, vals[PLUS], vals[MINUS])
    return dens.project_mean_zero(g)


# --------------------------------------------------------------------------
# g_j and the spectral density
# --------------------------------------------------------------------------


def _ratio_sinh(num, den, s):
    """sinh(num s)/sinh(den s) for 0 <= |num| < den, s >= 0 (overflow safe)."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < 1e-8
    out[small] = num / den
    sl = s[~small]
    an = abs(num)
    out[~small] = math.copysign(1.0, num) * np.exp((an - den) * sl) * np.expm1(-2 * an * sl) / np.expm1(-2 * den * sl)
    return out


def _ratio_cosh_sinh(num, den, s):
    """s cosh(num s)/sinh(den s), s >= 0, |num| < den."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < 1e-8
    out[small] = 1.0 / den
    sl = s[~small]
    an = abs(num)
    out[~small] = sl * np.exp((an - den) * sl) * (1 + np.exp(-2 * an * sl)) / (-np.expm1(-2 * den * sl))
    return out


def _ratio_cosh(num, den, s):
    """cosh(num s)/cosh(den s)."""
    s = np.asarray(s, dtype=float)
    an = abs(num)
    return np.exp((an - den) * s) * (1 + np.exp(-2 * an * s)) / (1 + np.exp(-2 * den * s))


def _ratio_sinh_cosh(num, den, s):
    """sinh(num s)/cosh(den s)."""
    s = np.asarray(s, dtype=float)
    an = abs(num)
    return math.copysign(1.0, num) * np.exp((an - den) * s) * (-np.expm1(-2 * an * s)) / (1 + np.exp(-2 * den * s))


@functools.lru_cache(maxsize=64)
def _source_frame(g: Geometry, src: DipoleSource) -> tuple[float, float, float]:
    """(Psi2(z), a . grad Psi1(z), a . grad Psi2(z))."""
    w = complex(psi(g, src.z))
    gr1, gr2 = psi_gradients(g, src.z)
    return w.imag, float(src.avec @ gr1), float(src.avec @ gr2)


def gradient_sq(g: Geometry, src: DipoleSource, s, j: int):
    """|a . grad S[psi^{s,j}](z)|^2 in closed form."""
    s = np.abs(np.asarray(s, dtype=float))
    th0 = g.theta0
    y, a1, a2 = _source_frame(g, src)
    if j == 1:
        # s^2 p1 / sinh^2(s th0) [a2^2 cosh^2(s y) + a1^2 sinh^2(s y)] / (4 pi)
        pc = _ratio_cosh_sinh(y, th0, s)  # s cosh(s y)/sinh(s th0)
        ps = s * _ratio_sinh(y, th0, s)  # s sinh(s y)/sinh(s th0)
        return p1(s, th0) * (a2**2 * pc**2 + a1**2 * ps**2) / (4 * math.pi)
    if j == 2:
        # s^2 p2 / cosh^2(s th0) [a2^2 sinh^2(s y) + a1^2 cosh^2(s y)] / (4 pi)
        return s2p2(s, th0) * (
            a2**2 * _ratio_sinh_cosh(y, th0, s) ** 2 + a1**2 * _ratio_cosh(y, th0, s) ** 2
        ) / (4 * math.pi)
    raise ValueError("j must be 1 or 2")


def g_j(g: Geometry, src: DipoleSource, s, j: int):
    """g_j(eta(s)) = |-1/2 + (-1)^{j+1} eta(s)|^2 |a . grad S[psi^{s,j}](z)|^2."""
    e = eta(s, g.theta0)
    fac = (-0.5 + e) ** 2 if j == 1 else (-0.5 - e) ** 2
    return fac * gradient_sq(g, src, s, j)


def mu_prime(g: Geometry, src: DipoleSource, t):
    """Spectral density of d_nu q at t in [-b, b] without 0."""
    b = bound(g.theta0)
    t = np.asarray(t, dtype=float)
    if np.any(t == 0) or np.any(np.abs(t) > b):
        raise ValueError("mu' is defined on [-b, b] without 0")
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    s = eta_inverse(np.abs(t), g.theta0)
    de = np.abs(eta_prime(s, g.theta0))
    out = np.where(t > 0, 2 * g_j(g, src, s, 1), 2 * g_j(g, src, s, 2))
    with np.errstate(divide="ignore"):
        out = out / de
    return out[0] if scalar else out


# --------------------------------------------------------------------------
# resonance integral
# --------------------------------------------------------------------------


def lambda_from_permittivity(eps_c: complex, delta: float = 0.0) -> complex:
    """lambda = (eps_c + 1 + i delta) / (2 (eps_c - 1) + 2 i delta), eps_m = 1."""
    return (eps_c + 1 + 1j * delta) / (2 * (eps_c - 1) + 2j * delta)


@dataclass(frozen=True)
class ResonanceQuery:
    source: DipoleSource
    lambda0: float
    deltas: tuple
    eps_c: complex | None = None

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.size == 0 or np.any(d <= 0) or np.any(np.diff(d) >= 0):
            raise SweepError("deltas must be positive and strictly decreasing")


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_GL_XH, _GL_WH = np.polynomial.legendre.leggauss(10)


def _adaptive(f, a: float, b: float, *, rtol: float = 1e-11, panels: int = 8, max_panels: int = 20000):
    """Adaptive composite Gauss-Legendre rule for a vectorised integrand.

    Each panel is integrated with 20 and 10 points; panels whose two values
    disagree beyond their share of the tolerance are bisected.  Returns
    (value, error estimate).
    """
    if b <= a:
        return 0.0, 0.0
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    total_est = None
    while lo.size:
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x20 = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        x10 = (mid[:, None] + half[:, None] * _GL_XH[None, :]).ravel()
        v20 = (f(x20).reshape(lo.size, -1) @ _GL_W) * half
        v10 = (f(x10).reshape(lo.size, -1) @ _GL_WH) * half
        err = np.abs(v20 - v10)
        est = done_val + float(np.sum(v20))
        total_est = est if total_est is None else est
        tol = rtol * max(abs(total_est), 1e-300)
        # accept panels whose error is small relative to their width share
        share = tol * (hi - lo) / (b - a)
        ok = err <= np.maximum(share, 1e-300)
        done_val += float(np.sum(v20[ok]))
        done_err += float(np.sum(err[ok]))
        lo, hi = lo[~ok], hi[~ok]
        if lo.size == 0:
            break
        if done_err + float(np.sum(err[~ok])) <= tol:
            done_val += float(np.sum(v20[~ok]))
            done_err += float(np.sum(err[~ok]))
            break
        if 2 * lo.size > max_panels:
            done_val += float(np.sum(v20[~ok]))
            done_err += float(np.sum(err[~ok]))
            break
        m = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, m]), np.concatenate([m, hi])
    return done_val, done_err


def _branch_integral(g, src, j, lam0, delta, sign):
    """int_0^inf 2 g_j(s) / ((lam0 - sign*eta(s))^2 + delta^2) ds.

    ``sign`` is +1 for the positive half of the spectrum (j = 1) and -1 for
    the negative half (j = 2), so in both cases the Poisson peak sits where
    eta(s) = sign * lam0.
    """
    th0 = g.theta0
    b = bound(th0)
    mu = sign * lam0

    def F(s):
        return 2.0 * g_j(g, src, s, j)

    def plain(s):
        return F(s) / ((mu - eta(s, th0)) ** 2 + delta**2)

    pieces = []
    y = abs(_source_frame(g, src)[0])
    decay = max(2 * (th0 - y), 1e-3)  # g_j ~ s e^{-decay s} for large s
    s_start = 0.0
    if 0 < mu < b:
        W = 1e3 * delta
        t_lo = max(mu - W, 0.5 * mu)
        t_hi = min(mu + W, 0.5 * (mu + b))
        s_a = float(eta_inverse(t_hi, th0))
        s_b = float(eta_inverse(t_lo, th0))

        def peak(u):
            # u = arctan((mu - t)/delta) flattens the Lorentzian
            t = mu - delta * np.tan(u)
            s = eta_inverse(t, th0)
            return F(s) / (delta * np.abs(eta_prime(s, th0)))

        pieces.append(_adaptive(peak, math.atan((mu - t_hi) / delta), math.atan((mu - t_lo) / delta)))
        pieces.append(_adaptive(plain, 0.0, s_a))
        s_start = s_b
    elif mu == b:
        # peak at s = 0 where eta' vanishes: gap = delta tan(v^2)
        W = min(1e3 * delta, 0.5 * b)
        v_hi = math.sqrt(math.atan(W / delta))

        def peak_top(v):
            v = np.maximum(v, 1e-150)
            gap = delta * np.tan(v * v)
            s = eta_inverse(None, th0, gap=gap)
            return 2 * v * F(s) / (delta * np.abs(eta_prime(s, th0)))

        pieces.append(_adaptive(peak_top, 0.0, v_hi))
        s_start = float(eta_inverse(None, th0, gap=W))
    s_mid = s_start
    if mu <= 0 and delta < b:
        # ramp while eta(s) >> delta before the decaying tail
        s_d = math.log(0.5 / delta) / (2 * th0)
        if s_d > s_start:
            pieces.append(_adaptive(plain, s_start, s_d))
            s_mid = s_d
    knee = s_mid + 4.0 / decay
    pieces.append(_adaptive(plain, s_mid, knee))
    pieces.append(_adaptive(plain, knee, knee + 60.0 / decay))
    return sum(p[0] for p in pieces), sum(p[1] for p in pieces)


def phi_norm_sq_detail(g: Geometry, src: DipoleSource, lambda0: float, delta: float):
    """(value, estimated absolute error) of ||phi_delta||^2_{H*}."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    v1, e1 = _branch_integral(g, src, 1, lambda0, delta, +1)
    v2, e2 = _branch_integral(g, src, 2, lambda0, delta, -1)
    return v1 + v2, e1 + e2


def phi_norm_sq(g: Geometry, src: DipoleSource, lambda0: float, delta: float) -> float:
    val, err = phi_norm_sq_detail(g, src, lambda0, delta)
    if err > QUAD_RTOL * abs(val):
        raise QuadratureError("resonance integral did not converge", val, err)
    return val


def spectral_mass(g: Geometry, src: DipoleSource) -> float:
    """int mu' dt = ||d_nu q||^2_{H*}, integrated in s."""
    th0 = g.theta0
    y = abs(complex(psi(g, src.z)).imag)
    decay = 2 * (th0 - y)
    tot = 0.0
    for j in (1, 2):
        f = lambda s, j=j: 2.0 * g_j(g, src, s, j)
        tot += _adaptive(f, 0.0, 4.0 / decay)[0] + _adaptive(f, 4.0 / decay, 64.0 / decay)[0]
    return tot


# --------------------------------------------------------------------------
# rate laws
# --------------------------------------------------------------------------


def default_deltas(n: int = 12, hi: float = 1e-2, lo: float = 1e-6) -> np.ndarray:
    return np.geomspace(hi, lo, n)


@dataclass
class RateFit:
    lambda0: float
    deltas: np.ndarray
    values: np.ndarray
    slope: float
    log_corrected_slope: float | None
    limit_constant: float | None
    exponent: float | None
    local_slopes: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _check_sweep(deltas):
    d = np.asarray(deltas, dtype=float)
    if d.size < 6:
        raise SweepError(f"need at least 6 delta values, got {d.size}")
    if np.any(d <= 0):
        raise SweepError("deltas must be positive")
    if math.log10(d.max() / d.min()) < 3 - 1e-9:
        raise SweepError("delta sweep must span at least 3 decades")
    return np.sort(d)[::-1]


def extrapolate_limit(deltas, y, order: float, npts: int = 4) -> float:
    """Fit y = L + c delta^order on the smallest deltas and return L."""
    d = np.asarray(deltas, dtype=float)
    y = np.asarray(y, dtype=float)
    idx = np.argsort(d)[:npts]
    A = np.column_stack([np.ones(idx.size), d[idx] ** order])
    coef, *_ = np.linalg.lstsq(A, y[idx], rcond=None)
    return float(coef[0])


def rate_fit(g: Geometry, src: DipoleSource, lambda0: float, deltas=None) -> RateFit:
    """Slope of log ||phi_delta||^2 against log delta, plus limit constants.

    At the interior of the spectrum delta ||phi||^2 tends to a constant, at
    the endpoints delta^{3/2} ||phi||^2 does; at lambda0 = 0 the slope is
    also reported after dividing by |log delta|.
    """
    deltas = _check_sweep(default_deltas() if deltas is None else deltas)
    b = bound(g.theta0)
    vals = np.array([phi_norm_sq(g, src, lambda0, d) for d in deltas])
    x = np.log(deltas)
    slope = float(np.polyfit(x, np.log(vals), 1)[0])
    local = np.gradient(np.log(vals), x)
    log_slope = None
    limit = None
    exponent = None
    if lambda0 == 0:
        log_slope = float(np.polyfit(x, np.log(vals / np.abs(x)), 1)[0])
        exponent = -log_slope
        limit = float(np.median((deltas**exponent * vals / np.abs(x))[-3:]))
    elif abs(abs(lambda0) - b) < 1e-15:
        exponent = 1.5
        limit = extrapolate_limit(deltas, deltas**1.5 * vals, 0.5)
    elif abs(lambda0) < b:
        exponent = 1.0
        limit = extrapolate_limit(deltas, deltas * vals, 1.0)
    return RateFit(lambda0, deltas, vals, slope, log_slope, limit, exponent, local)


def interior_limit(g: Geometry, src: DipoleSource, lambda0: float) -> float:
    """Closed-form limit of delta ||phi_delta||^2 for 0 < |lambda0| < b."""
    b = bound(g.theta0)
    if not 0 < abs(lambda0) < b:
        raise ValueError("interior limit needs 0 < |lambda0| < b")
    s = float(eta_inverse(abs(lambda0), g.theta0))
    j = 1 if lambda0 > 0 else 2
    return 2 * math.pi * float(g_j(g, src, s, j)) / abs(float(eta_prime(s, g.theta0)))


def never_order_check(g: Geometry, src: DipoleSource, lambda0: float, deltas=None) -> np.ndarray:
    """delta ||phi_delta|| over the sweep (expected to decrease to 0)."""
    deltas = np.sort(np.asarray(default_deltas() if deltas is None else deltas, dtype=float))[::-1]
    return np.array([d * math.sqrt(phi_norm_sq(g, src, lambda0, d)) for d in deltas])
