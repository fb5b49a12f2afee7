"""Potentials in the plane from the diagonalised calculus.

A mean-zero density is split into its odd and even parts under x2 -> -x2.
In strip coordinates ``(xi, theta)`` the single layer of each part is the
inverse Fourier transform (in xi) of an explicit multiplier times the
transformed density:

    odd,  |theta| < th0:   -sinh(s(pi-th0)) sinh(s theta)   / (s sinh pi s)
    odd,  th0 < theta < pi: sinh(s th0) sinh(s(theta-pi))   / (s sinh pi s)
    even, |theta| < th0:   -cosh(s(pi-th0)) cosh(s theta)   / (s sinh pi s)
    even, th0 < theta < pi: -cosh(s th0) cosh(s(theta-pi))  / (s sinh pi s)

(odd continuation to negative theta for the odd part, even for the even part).
The even multipliers have a 1/s^2 pole at s = 0 which is handled by
:func:`spectral_core.inverse_fourier_with_pole`; the additive constant is
fixed by requiring the potential to vanish at infinity, i.e. at
``(xi, theta) = (0, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import MINUS, PLUS, Geometry, GeometryError, is_exterior, psi, psi_gradients, psi_prime, scale_factor
from .multipliers import bound, eta, p1, p2
from .spectral_core import (
    BoundaryDensity,
    SpectralPair,
    XiGrid,
    apply_K_multiplier,
    apply_resolvent_multiplier,
    forward_transform,
    inverse_fourier_with_pole,
    inverse_transform,
)

_SQPI = math.sqrt(math.pi)


class NotMeanZeroError(ValueError):
    pass


class OutOfStripError(ValueError):
    """Point whose xi coordinate lies beyond the truncated grid."""


def _ss(A: float, B, x):
    """sinh(A x) sinh(B x) / (x sinh(pi x)) for x >= 0, A, B in [0, pi]."""
    x = np.asarray(x, dtype=float)
    B = np.broadcast_to(np.asarray(B, dtype=float), x.shape)
    out = np.empty(x.shape)
    small = x < 1e-6
    out[small] = A * B[small] / math.pi
    xl, Bl = x[~small], B[~small]
    out[~small] = (
        np.exp((A + Bl - math.pi) * xl)
        * np.expm1(-2 * A * xl) * np.expm1(-2 * Bl * xl)
        / (-2.0 * xl * np.expm1(-2 * math.pi * xl))
    )
    return out


def _cc(A: float, B, x):
    """cosh(A x) cosh(B x) / (x sinh(pi x)) for x > 0."""
    x = np.asarray(x, dtype=float)
    B = np.broadcast_to(np.asarray(B, dtype=float), x.shape)
    return (
        np.exp((A + B - math.pi) * x)
        * (1.0 + np.exp(-2 * A * x)) * (1.0 + np.exp(-2 * B * x))
        / (-2.0 * x * np.expm1(-2 * math.pi * x))
    )


def odd_multiplier(theta0: float, s, theta: float):
    """Multiplier taking f1/2 to the transformed odd potential at angle theta."""
    x = np.abs(np.asarray(s, dtype=float))
    th = abs(theta)
    sg = math.copysign(1.0, theta) if theta != 0 else 0.0
    if th <= theta0:
        return -sg * _ss(math.pi - theta0, th, x)
    return -sg * _ss(theta0, math.pi - th, x)


def even_multiplier(theta0: float, s, theta: float):
    """Multiplier taking f2/2 to the transformed even potential (s != 0)."""
    x = np.abs(np.asarray(s, dtype=float))
    th = abs(theta)
    if th <= theta0:
        return -_cc(math.pi - theta0, th, x)
    return -_cc(theta0, math.pi - th, x)


@dataclass(frozen=True)
class StripSolution:
    """Single layer potential of a mean-zero density in strip coordinates."""

    geometry: Geometry
    pair: SpectralPair
    constant: float  # additive constant of the even part

    @property
    def grid(self) -> XiGrid:
        return self.pair.grid

    def _even_transform(self, theta: float):
        f = self.pair
        s = f.s
        z = f.grid.zero_index
        d1, d2 = f.zero_jet()
        m = np.zeros_like(s)
        nz = s != 0
        m[nz] = even_multiplier(f.theta0, s[nz], theta)
        v = 0.5 * m * f.f2
        v[z] = -d2 / (4 * math.pi)
        return v, -d1 / (2 * math.pi)

    def _odd_transform(self, theta: float):
        f = self.pair
        return 0.5 * odd_multiplier(f.theta0, f.s, theta) * f.f1

    def on_line(self, theta: float, xi=None) -> np.ndarray:
        """Potential along the line ``theta`` = const at ``xi`` (default: the grid)."""
        grid = self.grid
        vo = self._odd_transform(theta)
        ve, pole = self._even_transform(theta)
        out = inverse_fourier_with_pole(grid, vo + ve, pole, xi)
        return out + self.constant

    def at(self, xi, theta) -> np.ndarray:
        """Potential at strip points; ``theta`` may vary per point."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        theta = np.broadcast_to(np.asarray(theta, dtype=float), xi.shape)
        if np.any(np.abs(xi) > self.grid.L):
            raise OutOfStripError("xi beyond the truncated grid; point too close to a corner")
        out = np.empty(xi.shape, dtype=complex)
        for th in np.unique(theta):
            sel = theta == th
            out[sel] = self.on_line(float(th), xi[sel])
        return out

    def at_points(self, z) -> np.ndarray:
        """Potential at plane points (exterior or interior, off the boundary)."""
        w = np.atleast_1d(psi(self.geometry, z))
        return self.at(w.real, w.imag)


def solve_transmission(g: Geometry, phi: BoundaryDensity, *, tol: float = 1e-10) -> StripSolution:
    """Strip solution of the transmission problem with jump ``phi``."""
    mean = phi.integral(g)
    scale = max(np.max(np.abs(phi.pullback(g)[0])), np.max(np.abs(phi.pullback(g)[1])), 1e-300)
    if abs(mean) > tol * scale * g.perimeter:
        raise NotMeanZeroError(f"density has nonzero mean {mean:.3e}; project it first")
    return strip_solution_from_pair(g, forward_transform(g, phi, project=False))


def strip_solution_from_pair(g: Geometry, pair: SpectralPair) -> StripSolution:
    sol = StripSolution(g, pair, 0.0)
    value_at_infinity = sol.on_line(0.0, np.array([0.0]))[0]
    return StripSolution(g, pair, -value_at_infinity)


def single_layer_boundary(g: Geometry, phi: BoundaryDensity) -> BoundaryDensity:
    """Boundary values of the single layer, sampled on the density's xi-grid."""
    sol = solve_transmission(g, phi.project_mean_zero(g))
    return BoundaryDensity(phi.grid, sol.on_line(g.theta0), sol.on_line(-g.theta0))


def single_layer_at(g: Geometry, phi: BoundaryDensity, xi, side: str) -> np.ndarray:
    """Boundary values of the single layer at arbitrary xi on one arc."""
    sol = solve_transmission(g, phi.project_mean_zero(g))
    th = g.theta0 if side == PLUS else -g.theta0
    return sol.on_line(th, np.asarray(xi, dtype=float))


def np_apply_boundary(g: Geometry, phi: BoundaryDensity) -> BoundaryDensity:
    """K*[phi] = U^{-1} (eta f1, -eta f2) U[phi]."""
    return inverse_transform(g, apply_K_multiplier(forward_transform(g, phi)))


def pair_to_boundary_at(g: Geometry, pair: SpectralPair, xi, side: str) -> np.ndarray:
    """Value of U^{-1}[pair] at arbitrary xi on one arc."""
    xi = np.asarray(xi, dtype=float)
    grid = pair.grid
    comb = 0.5 * (pair.f1 + pair.f2) if side == PLUS else 0.5 * (pair.f2 - pair.f1)
    return scale_factor(g, xi, g.theta0) * grid.inverse_fourier_at(comb, xi)


def np_apply_at(g: Geometry, phi: BoundaryDensity, xi, side: str) -> np.ndarray:
    return pair_to_boundary_at(g, apply_K_multiplier(forward_transform(g, phi)), xi, side)


# --------------------------------------------------------------------------
# generalised eigenfunctions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GenEigenfunction:
    s: float
    j: int

    def __post_init__(self):
        if self.j not in (1, 2):
            raise ValueError(f"parity index must be 1 or 2, got {self.j!r}")
        if not (math.isfinite(self.s) and self.s >= 0):
            raise ValueError(f"frequency must be finite and >= 0, got {self.s!r}")

    def eigenvalue(self, theta0: float) -> float:
        e = float(eta(self.s, theta0))
        return e if self.j == 1 else -e


def _weight(e: GenEigenfunction, theta0: float) -> float:
    if e.j == 1:
        return float(p1(e.s, theta0))
    if e.s == 0:
        raise ZeroDivisionError("the even family has a pole at s = 0")
    return float(p2(e.s, theta0))


def eigenfunction_boundary(g: Geometry, e: GenEigenfunction, xi, side: str):
    """Generalised eigenfunction on the arc ``side`` at bipolar coordinate xi."""
    xi = np.asarray(xi, dtype=float)
    w = _weight(e, g.theta0)
    h = scale_factor(g, xi, g.theta0)
    c = 1.0 / (2 * _SQPI * math.sqrt(w))
    if e.j == 1:
        sgn = 1.0 if side == PLUS else -1.0
        return sgn * c * h * np.exp(1j * e.s * xi)
    return c * h * np.expm1(1j * e.s * xi)


def eigenfunction_single_layer(g: Geometry, e: GenEigenfunction, z, *, allow_boundary: bool = False):
    """Closed-form single layer of a generalised eigenfunction outside the domain."""
    z = np.asarray(z, dtype=complex)
    if not allow_boundary and np.any(~is_exterior(g, z)):
        raise GeometryError("closed form holds outside the closed domain only")
    w = np.asarray(psi(g, z))
    return eigenfunction_single_layer_strip(g, e, w.real, w.imag)


def eigenfunction_single_layer_strip(g: Geometry, e: GenEigenfunction, xi, theta):
    """Same as :func:`eigenfunction_single_layer` at strip point (xi, theta), |theta| <= th0."""
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    th0 = g.theta0
    s = e.s
    w = _weight(e, th0)
    c = math.sqrt(w) / (2 * _SQPI)
    ph = np.exp(1j * s * xi)
    if e.j == 1:
        if s == 0:
            return c * theta / th0 * ph
        # sinh(s theta)/sinh(s th0) in overflow-safe form
        r = np.exp(s * (np.abs(theta) - th0)) * np.expm1(-2 * s * np.abs(theta)) / np.expm1(-2 * s * th0)
        return c * np.sign(theta) * r * ph
    r = np.exp(s * (np.abs(theta) - th0)) * (1 + np.exp(-2 * s * np.abs(theta))) / (1 + np.exp(-2 * s * th0))
    return c * (r * ph - 1.0)


def eigenfunction_single_layer_gradient(g: Geometry, e: GenEigenfunction, z):
    """Gradient of the closed-form exterior single layer, shape (..., 2) complex."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(psi(g, z))
    x1, x2 = w.real, w.imag
    g1, g2 = psi_gradients(g, z)
    th0 = g.theta0
    s = e.s
    c = math.sqrt(_weight(e, th0)) / (2 * _SQPI)
    ph = np.exp(1j * s * x1)
    if e.j == 1:
        d = math.sinh(s * th0)
        A = np.sinh(s * x2) / d  # coefficient of e^{is Psi1}
        dA = s * np.cosh(s * x2) / d
    else:
        d = math.cosh(s * th0)
        A = np.cosh(s * x2) / d
        dA = s * np.sinh(s * x2) / d
    # grad[A(Psi2) e^{is Psi1}] = (dA grad Psi2 + i s A grad Psi1) e^{is Psi1}
    return c * ph[..., None] * (dA[..., None] * g2 + 1j * s * A[..., None] * g1)


# --------------------------------------------------------------------------
# weak eigenrelation
# --------------------------------------------------------------------------


def eigenrelation_check(
    g: Geometry, e: GenEigenfunction, phi: BoundaryDensity
) -> float:
    """Residual of <phi, K*[psi]>_{H*} - lambda <phi, psi>_{H*}.

    With <phi, psi>_{H*} = -<phi, S[psi]> the pairings only need the single
    layer of psi on the boundary, known in closed form; K* moves onto phi via
    <phi, K*psi>_{H*} = <K* phi, psi>_{H*}.  Both sides are integrals over the
    boundary of smooth functions of xi and are evaluated on phi's grid.
    Returns the absolute residual scaled by |<phi, psi>_{H*}| + ||phi||.
    """
    grid = phi.grid
    xi = grid.xi
    th0 = g.theta0
    phi0 = phi.project_mean_zero(g)
    kphi = np_apply_boundary(g, phi0)
    lam = e.eigenvalue(th0)

    def pairing(dens: BoundaryDensity) -> complex:
        # -int dens * conj(S[psi]) d sigma, d sigma = d xi / h
        up, um = dens.pullback(g)
        Sp = eigenfunction_single_layer_strip(g, e, xi, th0)
        Sm = eigenfunction_single_layer_strip(g, e, xi, -th0)
        return complex(-np.sum(up * np.conj(Sp) + um * np.conj(Sm)) * grid.dxi)

    a = pairing(kphi)
    b = pairing(phi0)
    norm = math.sqrt(max(abs(pairing_norm(g, phi0)), 1e-300))
    return float(abs(a - lam * b) / (abs(b) + norm))


def pairing_norm(g: Geometry, phi: BoundaryDensity) -> float:
    from .spectral_core import wstar_norm_sq

    return wstar_norm_sq(forward_transform(g, phi))


def eigenrelation_rayleigh(g: Geometry, e: GenEigenfunction, phi: BoundaryDensity) -> float:
    """<K* phi, psi>_{H*} / <phi, psi>_{H*}: the weak eigenvalue seen by phi."""
    grid = phi.grid
    xi = grid.xi
    th0 = g.theta0
    phi0 = phi.project_mean_zero(g)
    kphi = np_apply_boundary(g, phi0)
    Sp = eigenfunction_single_layer_strip(g, e, xi, th0)
    Sm = eigenfunction_single_layer_strip(g, e, xi, -th0)

    def pairing(dens):
        up, um = dens.pullback(g)
        return complex(-np.sum(up * np.conj(Sp) + um * np.conj(Sm)) * grid.dxi)

    return (pairing(kphi) / pairing(phi0)).real


def even_far_field_report(
    g: Geometry, s: float, radii=(10.0, 100.0, 1000.0), direction: complex = 1j, system=None
) -> dict:
    """Behaviour of the even-family single layer far from the domain.

    Evaluates the closed form at growing distance along ``direction`` and the
    predicted limit (2 sqrt(pi))^{-1} p2(s)^{1/2} (1/cosh(s th0) - 1).  When a
    Nystrom ``system`` is given, the eigenfunction sampled at its nodes (which
    truncates it at the mesh's innermost corner scale) is integrated against
    the log kernel too.  That density has a large nonzero mean, because the
    eigenfunction grows like h near the corners and is not integrable, so the
    oracle field grows like mean/(2 pi) log r.  The report records both
    behaviours; neither decays.
    """
    e = GenEigenfunction(s, 2)
    radii = np.asarray(radii, dtype=float)
    z = radii * direction
    vals = eigenfunction_single_layer(g, e, z)
    limit = math.sqrt(float(p2(s, g.theta0))) / (2 * _SQPI) * (1 / math.cosh(s * g.theta0) - 1)
    report = {
        "radii": radii.tolist(),
        "closed_form": vals,
        "predicted_limit": limit,
        "closed_form_decays": bool(abs(limit) < 1e-12),
        "closed_form_limit_error": float(abs(vals[-1] - limit)),
    }
    if system is not None:
        m = system.mesh
        xi = m.bipolar_xi()
        sides = m.sides()
        dens = np.where(
            sides == PLUS,
            eigenfunction_boundary(g, e, xi, PLUS),
            eigenfunction_boundary(g, e, xi, MINUS),
        )
        mean = complex(np.sum(m.weights * dens))
        ov = system.single_layer_at(dens, z)
        report.update(
            oracle=ov,
            oracle_mean=mean,
            oracle_log_coefficient=mean / (2 * math.pi),
            oracle_minus_log_term=ov - mean / (2 * math.pi) * np.log(radii),
            truncation_xi=float(np.max(np.abs(xi))),
        )
    return report


# --------------------------------------------------------------------------
# induced field of a source
# --------------------------------------------------------------------------


class SpectrumResolventError(ValueError):
    """The resolvent was requested on the spectrum with zero loss."""


def resonance_lambda(query, delta: float) -> complex:
    """lambda for loss ``delta``: from eps_c when given, else lambda0 + i delta."""
    from .resonance import lambda_from_permittivity

    if query.eps_c is not None:
        return complex(lambda_from_permittivity(query.eps_c, delta))
    return complex(query.lambda0, delta)


def induced_density_pair(g: Geometry, query, delta: float, grid: XiGrid | None = None) -> SpectralPair:
    """U[phi_delta], the transformed solution of (lambda I - K*) phi = d_nu q."""
    from .resonance import dipole_normal_derivative

    lam = resonance_lambda(query, delta)
    b = bound(g.theta0)
    if delta == 0 and abs(lam.imag) == 0 and abs(lam.real) <= b:
        raise SpectrumResolventError(f"lambda = {lam.real} lies in [-b, b] = [-{b}, {b}] and delta = 0")
    dq = dipole_normal_derivative(g, query.source, grid)
    return apply_resolvent_multiplier(forward_transform(g, dq), lam)


def induced_field(g: Geometry, query, z_eval, delta: float | None = None, grid: XiGrid | None = None):
    """u_delta = q + S[phi_delta] at points off the boundary.

    ``delta`` defaults to the last (smallest) loss of the query.  The grid
    must resolve the resolvent peak, roughly delta >> |eta'| ds.
    """
    from .resonance import dipole_potential

    delta = float(query.deltas[-1]) if delta is None else float(delta)
    z = np.atleast_1d(np.asarray(z_eval, dtype=complex))
    w = np.atleast_1d(psi(g, z))
    if np.any(np.abs(np.abs(w.imag) - g.theta0) < 1e-12):
        raise GeometryError("evaluation point lies on the boundary")
    pair = induced_density_pair(g, query, delta, grid)
    sol = strip_solution_from_pair(g, pair)
    return dipole_potential(query.source, z) + sol.at(w.real, w.imag)


def field_map(
    g: Geometry,
    query,
    x1,
    x2,
    delta: float | None = None,
    grid: XiGrid | None = None,
    *,
    with_gradient: bool = False,
    fd_step: float = 1e-5,
):
    """Induced field on the tensor grid x1 x x2; boundary and source points give nan.

    Points on the segment (-alpha, alpha) of the x1-axis are evaluated with
    the principal branch theta = pi, where the strip solution is continuous.
    With ``with_gradient`` the magnitude |grad u| = (|u_x1|^2 + |u_x2|^2)^(1/2)
    is returned as a fourth array; the strip derivatives are central
    differences of step ``fd_step`` and the chain rule uses the exact Psi'.
    """
    from .resonance import dipole_gradient, dipole_potential

    delta = float(query.deltas[-1]) if delta is None else float(delta)
    X1, X2 = np.meshgrid(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float), indexing="xy")
    z = (X1 + 1j * X2).ravel()
    out = np.full(z.shape, np.nan + 0j)
    grad = np.full(z.shape, np.nan)
    ok = np.abs(z - query.source.z) > 1e-9
    ok &= np.abs((z - g.alpha) * (z + g.alpha)) > 1e-12
    w = np.full(z.shape, np.nan + 0j)
    w[ok] = np.log((z[ok] + g.alpha) / (z[ok] - g.alpha))
    ok &= np.abs(np.abs(w.imag) - g.theta0) > 1e-9
    L = (grid or XiGrid()).L
    ok &= np.abs(w.real) < L - (2 * fd_step if with_gradient else 0.0)
    if not np.any(ok):
        return (X1, X2, out.reshape(X1.shape)) + ((grad.reshape(X1.shape),) if with_gradient else ())
    pair = induced_density_pair(g, query, delta, grid)
    sol = strip_solution_from_pair(g, pair)
    xi, th = w[ok].real, w[ok].imag
    out[ok] = dipole_potential(query.source, z[ok]) + sol.at(xi, th)
    if not with_gradient:
        return X1, X2, out.reshape(X1.shape)
    h = fd_step
    d_xi = (sol.at(xi + h, th) - sol.at(xi - h, th)) / (2 * h)
    d_th = (sol.at(xi, th + h) - sol.at(xi, th - h)) / (2 * h)
    dp = psi_prime(g, z[ok])
    # grad Psi1 = (Re Psi', -Im Psi'), grad Psi2 = (Im Psi', Re Psi')
    ux1 = d_xi * dp.real + d_th * dp.imag
    ux2 = -d_xi * dp.imag + d_th * dp.real
    gq = dipole_gradient(query.source, z[ok])
    ux1 = ux1 + gq.real
    ux2 = ux2 + gq.imag
    grad[ok] = np.sqrt(np.abs(ux1) ** 2 + np.abs(ux2) ** 2)
    return X1, X2, out.reshape(X1.shape), grad.reshape(X1.shape)


def write_field_csv(path, X1, X2, values, grad_abs=None) -> None:
    """CSV with columns x1, x2, re, im[, grad_abs] (17 significant digits)."""
    cols = [X1.ravel(), X2.ravel(), np.real(values).ravel(), np.imag(values).ravel()]
    header = "x1,x2,re,im"
    if grad_abs is not None:
        cols.append(np.asarray(grad_abs).ravel())
        header += ",grad_abs"
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g", header=header, comments="")
