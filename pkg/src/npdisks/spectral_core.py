"""Diagonalised calculus on the bipolar strip.

Boundary densities are sampled on a uniform ``xi`` grid on both arcs.  The
unitary map ``U = Lambda F C`` takes a mean-zero density to a pair of
functions ``(f1, f2)`` of the frequency ``s``:

    C[phi]  = (phi_plus / h, phi_minus / h)          (pullback to the strip)
    F       = (2 pi)^{-1/2} int f(xi) e^{-i s xi} d xi   (applied per arc)
    Lambda  = [[1, -1], [1, 1]]

so ``f1`` carries the part of the density that is odd under x2 -> -x2 and
``f2`` the even part.  In these coordinates the NP operator is the multiplier
``(eta f1, -eta f2)`` and the single layer is ``(-p1 f1, -p2 f2)``.

The discrete Fourier transform uses ``xi_n = -L + n dxi`` (``dxi = 2L/N``)
and ``s_k = (k - N/2) pi/L``, with the symmetric ``(2 pi)^{-1/2}`` scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .geometry import MINUS, PLUS, Geometry, scale_factor
from .multipliers import bound, eta, eta_inverse, eta_prime, p1, p2, s2p2

_SQ2PI = math.sqrt(2.0 * math.pi)


class GridMismatchError(ValueError):
    pass


class NotInWStarError(ValueError):
    """Pair whose even component does not vanish at s = 0."""


@dataclass(frozen=True)
class XiGrid:
    L: float = 30.0
    N: int = 4096

    def __post_init__(self):
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 8, got {self.N!r}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def dxi(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def ds(self) -> float:
        return math.pi / self.L

    @property
    def xi(self) -> np.ndarray:
        return -self.L + self.dxi * np.arange(self.N)

    @property
    def s(self) -> np.ndarray:
        return self.ds * (np.arange(self.N) - self.N // 2)

    @property
    def zero_index(self) -> int:
        return self.N // 2

    # -- transforms -------------------------------------------------------
    def fourier(self, u) -> np.ndarray:
        """Samples of F[u] on the s-grid from samples of u on the xi-grid."""
        u = np.asarray(u, dtype=complex)
        return (self.dxi / _SQ2PI) * np.exp(1j * self.s * self.L) * np.fft.fftshift(
            np.fft.fft(u)
        )

    def inverse_fourier(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        n = np.arange(self.N)
        sign = np.where(n % 2 == 0, 1.0, -1.0)
        return (self.ds / _SQ2PI) * self.N * sign * np.fft.ifft(
            f * np.exp(-1j * self.s * self.L)
        )

    def fourier_at(self, u, s) -> np.ndarray:
        """F[u] at arbitrary frequencies (direct sum, exact for the sampled u)."""
        u = np.asarray(u, dtype=complex)
        s = np.asarray(s, dtype=float)
        out = np.exp(-1j * np.multiply.outer(s, self.xi)) @ u
        return (self.dxi / _SQ2PI) * out

    def fourier_at_pm(self, u, s, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
        """F[u] at +s and -s from shared cosine and sine sums; ``u`` may have columns."""
        u = np.asarray(u, dtype=complex)
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        shape = flat.shape + u.shape[1:]
        plus = np.empty(shape, dtype=complex)
        minus = np.empty(shape, dtype=complex)
        c = self.dxi / _SQ2PI
        ur = np.concatenate([u.real.reshape(u.shape[0], -1), u.imag.reshape(u.shape[0], -1)], axis=1)
        m = ur.shape[1] // 2
        for k in range(0, flat.size, chunk):
            arg = np.multiply.outer(flat[k : k + chunk], self.xi)
            Cr = np.cos(arg) @ ur
            Sr = np.sin(arg) @ ur
            A = (Cr[:, :m] + 1j * Cr[:, m:]).reshape((-1,) + u.shape[1:])
            B = (Sr[:, :m] + 1j * Sr[:, m:]).reshape((-1,) + u.shape[1:])
            plus[k : k + chunk] = c * (A - 1j * B)
            minus[k : k + chunk] = c * (A + 1j * B)
        return plus.reshape(s.shape + u.shape[1:]), minus.reshape(s.shape + u.shape[1:])

    def inverse_fourier_at(self, f, xi) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        xi = np.asarray(xi, dtype=float)
        out = np.exp(1j * np.multiply.outer(xi, self.s)) @ f
        return (self.ds / _SQ2PI) * out

    def moments(self, u, orders=(1, 2)) -> tuple:
        """Derivatives of F[u] at s = 0: (2 pi)^{-1/2} int (-i xi)^n u d xi."""
        u = np.asarray(u, dtype=complex)
        return tuple(
            (self.dxi / _SQ2PI) * np.sum((-1j * self.xi) ** n * u) for n in orders
        )


# --------------------------------------------------------------------------
# boundary densities
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryDensity:
    """Samples of a density on the lower (plus) and upper (minus) arcs."""

    grid: XiGrid
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        for v in (self.plus, self.minus):
            if np.shape(v) != (self.grid.N,):
                raise GridMismatchError("density samples do not match the xi-grid")

    @classmethod
    def from_function(cls, g: Geometry, grid: XiGrid, func: Callable) -> "BoundaryDensity":
        """Sample ``func(xi, side)`` on both arcs."""
        xi = grid.xi
        return cls(
            grid,
            np.asarray(func(xi, PLUS), dtype=complex),
            np.asarray(func(xi, MINUS), dtype=complex),
        )

    @classmethod
    def from_pullback(cls, g: Geometry, grid: XiGrid, func: Callable) -> "BoundaryDensity":
        """Density whose pullback ``phi/h`` is ``func(xi, side)``."""
        h = scale_factor(g, grid.xi, g.theta0)
        xi = grid.xi
        return cls(
            grid,
            h * np.asarray(func(xi, PLUS), dtype=complex),
            h * np.asarray(func(xi, MINUS), dtype=complex),
        )

    def pullback(self, g: Geometry) -> tuple[np.ndarray, np.ndarray]:
        h = scale_factor(g, self.grid.xi, g.theta0)
        return self.plus / h, self.minus / h

    def integral(self, g: Geometry) -> complex:
        """Boundary integral of the density, int phi d sigma."""
        up, um = self.pullback(g)
        return complex(np.sum(up + um) * self.grid.dxi)

    def project_mean_zero(self, g: Geometry) -> "BoundaryDensity":
        m = self.integral(g) / g.perimeter
        return BoundaryDensity(self.grid, self.plus - m, self.minus - m)

    def odd_part(self) -> "BoundaryDensity":
        d = 0.5 * (self.plus - self.minus)
        return BoundaryDensity(self.grid, d, -d)

    def even_part(self) -> "BoundaryDensity":
        e = 0.5 * (self.plus + self.minus)
        return BoundaryDensity(self.grid, e, e.copy())

    def __add__(self, other: "BoundaryDensity") -> "BoundaryDensity":
        _check_grids(self.grid, other.grid)
        return BoundaryDensity(self.grid, self.plus + other.plus, self.minus + other.minus)

    def __sub__(self, other: "BoundaryDensity") -> "BoundaryDensity":
        _check_grids(self.grid, other.grid)
        return BoundaryDensity(self.grid, self.plus - other.plus, self.minus - other.minus)

    def scale(self, c) -> "BoundaryDensity":
        return BoundaryDensity(self.grid, c * self.plus, c * self.minus)


def _check_grids(a: XiGrid, b: XiGrid):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


# --------------------------------------------------------------------------
# spectral pairs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralPair:
    """A pair (f1, f2) on the s-grid of ``grid``.

    ``jet`` holds (f2'(0), f2''(0)).  The even weight p2 has a double pole at
    s = 0, so the zero-frequency terms need these derivatives; when absent
    they are read off the xi-representation.  ``pole`` is set only for pairs
    whose second component behaves like ``pole / s`` at the origin (the image
    of the single layer); the stored value at s = 0 is then the regular part.
    """

    grid: XiGrid
    theta0: float
    f1: np.ndarray
    f2: np.ndarray
    jet: Optional[tuple] = None
    pole: complex = 0.0

    def __post_init__(self):
        for v in (self.f1, self.f2):
            if np.shape(v) != (self.grid.N,):
                raise GridMismatchError("pair samples do not match the s-grid")

    @property
    def s(self) -> np.ndarray:
        return self.grid.s

    def xi_representation(self) -> tuple[np.ndarray, np.ndarray]:
        if self.pole != 0:
            raise NotInWStarError("pair with a pole has no decaying xi-representation")
        return self.grid.inverse_fourier(self.f1), self.grid.inverse_fourier(self.f2)

    def zero_jet(self) -> tuple:
        if self.jet is not None:
            return self.jet
        _, u2 = self.xi_representation()
        return self.grid.moments(u2)

    def at(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate (f1, f2) off the grid via the xi-representation."""
        u1, u2 = self.xi_representation()
        return self.grid.fourier_at(u1, s), self.grid.fourier_at(u2, s)

    def multiply(self, m1, m2, m2_at_zero=None) -> "SpectralPair":
        """Componentwise multiplication by arrays m1, m2 sampled on the s-grid.

        ``m2`` must be even and smooth at 0 so the zero jet scales by m2(0).
        """
        m20 = m2[self.grid.zero_index] if m2_at_zero is None else m2_at_zero
        d1, d2 = self.zero_jet()
        return replace(
            self,
            f1=self.f1 * m1,
            f2=self.f2 * m2,
            jet=(m20 * d1, m20 * d2),
        )

    def __add__(self, other: "SpectralPair") -> "SpectralPair":
        _check_pairs(self, other)
        a, b = self.zero_jet(), other.zero_jet()
        return replace(
            self,
            f1=self.f1 + other.f1,
            f2=self.f2 + other.f2,
            jet=(a[0] + b[0], a[1] + b[1]),
            pole=self.pole + other.pole,
        )

    def scale(self, c) -> "SpectralPair":
        d1, d2 = self.zero_jet() if self.pole == 0 else (0.0, 0.0)
        return replace(self, f1=c * self.f1, f2=c * self.f2, jet=(c * d1, c * d2), pole=c * self.pole)


def _check_pairs(a: SpectralPair, b: SpectralPair):
    _check_grids(a.grid, b.grid)
    if a.theta0 != b.theta0:
        raise GridMismatchError("pairs belong to different geometries")


def forward_transform(g: Geometry, density: BoundaryDensity, *, project: bool = True) -> SpectralPair:
    """U[phi] = Lambda F C[phi].  The mean is removed first unless ``project`` is False."""
    if project:
        density = density.project_mean_zero(g)
    grid = density.grid
    up, um = density.pullback(g)
    u1, u2 = up - um, up + um
    jet = grid.moments(u2)
    f1 = grid.fourier(u1)
    f2 = grid.fourier(u2)
    return SpectralPair(grid, g.theta0, f1, f2, jet=jet)


def inverse_transform(g: Geometry, pair: SpectralPair) -> BoundaryDensity:
    """U^{-1}[f] = C^{-1} F^{-1} Lambda^{-1} f."""
    if pair.pole != 0:
        raise NotInWStarError("cannot invert a pair with a pole at s = 0")
    grid = pair.grid
    h = scale_factor(g, grid.xi, g.theta0)
    a = grid.inverse_fourier(0.5 * (pair.f1 + pair.f2))
    b = grid.inverse_fourier(0.5 * (pair.f2 - pair.f1))
    return BoundaryDensity(grid, h * a, h * b)


def inverse_fourier_with_pole(grid: XiGrid, f, pole: complex, xi=None):
    """Inverse transform (principal value) of ``f`` with f(s) ~ pole/s at 0.

    The pole is carried by (pi/2) csch(pi s/2), whose inverse transform is
    i sqrt(pi/2) tanh(xi); the remainder is regular and decays.
    """
    s = grid.s
    f = np.asarray(f, dtype=complex)
    if pole != 0:
        with np.errstate(divide="ignore", over="ignore"):
            k = np.where(s == 0, 0.0, 0.5 * math.pi / np.sinh(0.5 * math.pi * s))
        reg = f - pole * k
    else:
        reg = f
    if xi is None:
        out = grid.inverse_fourier(reg)
        xi = grid.xi
    else:
        out = grid.inverse_fourier_at(reg, xi)
    if pole != 0:
        out = out + 1j * pole * math.sqrt(math.pi / 2) * np.tanh(xi)
    return out


# --------------------------------------------------------------------------
# multipliers on pairs
# --------------------------------------------------------------------------


def apply_K_multiplier(f: SpectralPair) -> SpectralPair:
    """Diagonal NP operator: (eta f1, -eta f2)."""
    e = eta(f.s, f.theta0)
    return f.multiply(e, -e, m2_at_zero=-bound(f.theta0))


def apply_resolvent_multiplier(f: SpectralPair, lam: complex) -> SpectralPair:
    """(lam I - K*)^{-1} in diagonal form: (f1/(lam - eta), f2/(lam + eta))."""
    e = eta(f.s, f.theta0)
    b = bound(f.theta0)
    return f.multiply(1.0 / (lam - e), 1.0 / (lam + e), m2_at_zero=1.0 / (lam + b))


def apply_S_multiplier(f: SpectralPair) -> SpectralPair:
    """Diagonal single layer: (-p1 f1, -p2 f2).

    The second component has a simple pole at s = 0 (p2 ~ 1/(pi s^2) and
    f2 ~ f2'(0) s); the returned pair records the pole coefficient and stores
    the regular part at s = 0.
    """
    s = f.s
    z = f.grid.zero_index
    d1, d2 = f.zero_jet()
    w2 = np.empty_like(s)
    nz = s != 0
    w2[nz] = p2(s[nz], f.theta0)
    w2[~nz] = 0.0
    g2 = -w2 * f.f2
    g2[z] = -d2 / (2.0 * math.pi)
    return SpectralPair(
        f.grid, f.theta0, -p1(s, f.theta0) * f.f1, g2, jet=None, pole=-d1 / math.pi
    )


def _check_w_star(f: SpectralPair, tol: float = 1e-8):
    z = f.grid.zero_index
    scale = max(np.max(np.abs(f.f2)), np.max(np.abs(f.f1)), 1e-300)
    if abs(f.f2[z]) > tol * scale:
        raise NotInWStarError(
            f"f2(0) = {f.f2[z]:.3e} does not vanish; project onto mean-zero first"
        )


def wstar_inner(f: SpectralPair, g: SpectralPair) -> complex:
    """<f, g>_{W*} = (1/2) int [p1 f1 conj(g1) + p2 f2 conj(g2)] ds (trapezoid rule).

    The s = 0 term of the even part uses the limit s^2 p2 -> 1/pi together
    with f2'(0) conj(g2'(0)).
    """
    _check_pairs(f, g)
    if f.pole != 0 or g.pole != 0:
        raise NotInWStarError("pairs with a pole are not in W*")
    _check_w_star(f)
    _check_w_star(g)
    s = f.s
    z = f.grid.zero_index
    w1 = p1(s, f.theta0)
    w2 = np.zeros_like(s)
    nz = s != 0
    w2[nz] = p2(s[nz], f.theta0)
    term = w1 * f.f1 * np.conj(g.f1) + w2 * f.f2 * np.conj(g.f2)
    term[z] += (1.0 / math.pi) * f.zero_jet()[0] * np.conj(g.zero_jet()[0])
    return complex(0.5 * f.grid.ds * np.sum(term))


def wstar_norm_sq(f: SpectralPair) -> float:
    return wstar_inner(f, f).real


# --------------------------------------------------------------------------
# resolution of the identity
# --------------------------------------------------------------------------


def resolution_projector(t: float, f: SpectralPair) -> SpectralPair:
    """Apply E_t to a pair, following the piecewise definition on [-b, b]."""
    b = bound(f.theta0)
    if not (-b - 1e-15 <= t <= b + 1e-15):
        raise ValueError(f"t = {t} outside [-b, b] = [{-b}, {b}]")
    s = np.abs(f.s)
    one = np.ones_like(s)
    zero = np.zeros_like(s)
    if t > 0:
        s0 = eta_inverse(min(t, b), f.theta0)
        m1 = np.where(s >= s0, 1.0, 0.0) if t < b else one
        return f.multiply(m1, one, m2_at_zero=1.0)
    if t < 0:
        if t <= -b:
            return f.multiply(zero, zero, m2_at_zero=0.0)
        s0 = eta_inverse(-t, f.theta0)
        m2 = np.where(s <= s0, 1.0, 0.0)
        return f.multiply(zero, m2, m2_at_zero=1.0)
    return f.multiply(zero, one, m2_at_zero=1.0)


def _gauss_integral(fn, a, b, n=64, panels=8):
    """Composite Gauss-Legendre integral of a smooth vectorised fn on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(a, b, panels + 1)
    mid, half = 0.5 * (edges[:-1] + edges[1:]), 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = fn(nodes).reshape(panels, n)
    return float(np.sum(half * (vals @ w)))


def spectral_distribution(f: SpectralPair, t: float, *, s_cut: float | None = None) -> float:
    """<f, E_t f>_{W*} as a continuous function of t (off-grid quadrature in s)."""
    b = bound(f.theta0)
    th = f.theta0
    total = wstar_norm_sq(f)
    if t >= b:
        return total
    if t <= -b:
        return 0.0

    u1, u2 = f.xi_representation()

    def dens1(s):
        a1, b1 = f.grid.fourier_at_pm(u1, s)
        return 0.5 * p1(s, th) * (np.abs(a1) ** 2 + np.abs(b1) ** 2)

    def dens2(s):
        a2, b2 = f.grid.fourier_at_pm(u2, s)
        return 0.5 * s2p2(s, th) / s**2 * (np.abs(a2) ** 2 + np.abs(b2) ** 2)

    if t > 0:
        s0 = eta_inverse(t, th)
        return total - float(_gauss_integral(dens1, 0.0, s0)) if s0 > 0 else total
    if t < 0:
        s0 = eta_inverse(-t, th)
        return float(_gauss_integral(dens2, 0.0, s0)) if s0 > 0 else 0.0
    # E_0 = Pi_2
    z = f.grid.zero_index
    w2 = np.zeros_like(f.s)
    nz = f.s != 0
    w2[nz] = p2(f.s[nz], th)
    val = w2 * np.abs(f.f2) ** 2
    val[z] = abs(f.zero_jet()[0]) ** 2 / math.pi
    return float(0.5 * f.grid.ds * np.sum(val))


def spectral_density(obj, t, *, g: Geometry | None = None):
    """Density d/dt <f, E_t f> of the spectral measure at t in [-b, b] \\ {0}.

    ``obj`` is a :class:`SpectralPair` or a :class:`BoundaryDensity` (then
    ``g`` is required and the density is transformed first).
    """
    if isinstance(obj, BoundaryDensity):
        if g is None:
            raise ValueError("geometry required to transform a boundary density")
        obj = forward_transform(g, obj)
    f = obj
    th = f.theta0
    b = bound(th)
    t = np.asarray(t, dtype=float)
    if np.any(t == 0) or np.any(np.abs(t) > b):
        raise ValueError("spectral density is defined on [-b, b] without 0")
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    s = eta_inverse(np.abs(t), th)
    plus, minus = f.grid.fourier_at_pm(np.column_stack(f.xi_representation()), s)
    a1, a2 = plus[:, 0], plus[:, 1]
    c1, c2 = minus[:, 0], minus[:, 1]
    de = np.abs(eta_prime(s, th))
    out = np.empty_like(t)
    pos = t > 0
    out[pos] = p1(s[pos], th) / (2 * de[pos]) * (np.abs(a1[pos]) ** 2 + np.abs(c1[pos]) ** 2)
    neg = ~pos
    out[neg] = p2(s[neg], th) / (2 * de[neg]) * (np.abs(a2[neg]) ** 2 + np.abs(c2[neg]) ** 2)
    return out[0] if scalar else out


# --------------------------------------------------------------------------
# CSV serialization
# --------------------------------------------------------------------------


def _grid_from_column(col: np.ndarray) -> XiGrid:
    grid = XiGrid(-col[0], col.size)
    if not np.allclose(grid.xi, col, rtol=0, atol=1e-9 * max(1.0, grid.L)):
        raise GridMismatchError("grid column is not a uniform symmetric grid")
    return grid


def write_density_csv(path, density: BoundaryDensity) -> None:
    """Columns xi, plus_re, plus_im, minus_re, minus_im."""
    d = density
    table = np.column_stack([d.grid.xi, d.plus.real, d.plus.imag, d.minus.real, d.minus.imag])
    np.savetxt(path, table, delimiter=",", fmt="%.17g", header="xi,plus_re,plus_im,minus_re,minus_im", comments="")


def read_density_csv(path) -> BoundaryDensity:
    t = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = _grid_from_column(t[:, 0])
    return BoundaryDensity(grid, t[:, 1] + 1j * t[:, 2], t[:, 3] + 1j * t[:, 4])


def write_pair_csv(path, pair: SpectralPair) -> None:
    """Columns s, f1_re, f1_im, f2_re, f2_im; theta0, zero jet and pole in a comment line."""
    d1, d2 = pair.zero_jet() if pair.pole == 0 else (pair.jet or (0.0, 0.0))
    meta = (
        f"# L={pair.grid.L!r} theta0={pair.theta0!r} jet1={complex(d1)!r} jet2={complex(d2)!r} "
        f"pole={complex(pair.pole)!r}\n"
    )
    table = np.column_stack([pair.s, pair.f1.real, pair.f1.imag, pair.f2.real, pair.f2.imag])
    with open(path, "w") as fh:
        fh.write(meta)
        np.savetxt(fh, table, delimiter=",", fmt="%.17g", header="s,f1_re,f1_im,f2_re,f2_im", comments="")


def read_pair_csv(path) -> SpectralPair:
    with open(path) as fh:
        meta = fh.readline()
    if not meta.startswith("#"):
        raise ValueError("missing metadata line")
    fields = dict(item.split("=", 1) for item in meta[1:].split())
    t = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    grid = XiGrid(float(fields["L"]), t.shape[0])
    if not np.allclose(grid.s, t[:, 0], rtol=0, atol=1e-9):
        raise GridMismatchError("s column does not match the recorded grid")
    return SpectralPair(
        grid,
        float(fields["theta0"]),
        t[:, 1] + 1j * t[:, 2],
        t[:, 3] + 1j * t[:, 4],
        jet=(complex(fields["jet1"]), complex(fields["jet2"])),
        pole=complex(fields["pole"]),
    )
