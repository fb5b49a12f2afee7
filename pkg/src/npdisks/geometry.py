"""Bipolar coordinates for two intersecting disks of equal radius.

The domain is the union of two disks of radius ``a`` centred at
``(0, +a cos theta0)`` and ``(0, -a cos theta0)``.  The circles cross at
``(+-alpha, 0)`` with ``alpha = a sin theta0``.  The map

    zeta = xi + i theta = Log((z + alpha) / (z - alpha))

sends the exterior of the domain onto the strip ``|theta| < theta0``, the
lower boundary arc onto ``theta = +theta0`` and the upper arc onto
``theta = -theta0``.  The point at infinity goes to ``zeta = 0``.

Boundary sides are labelled ``"plus"`` (lower arc) and ``"minus"`` (upper arc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

PLUS = "plus"
MINUS = "minus"
SIDES = (PLUS, MINUS)


class GeometryError(ValueError):
    """Invalid geometry parameters or a point outside the domain of a map."""


class BranchCutError(GeometryError):
    """Point on the open segment (-alpha, alpha) of the x1-axis."""


class CornerError(GeometryError):
    """Point at one of the two corners (+-alpha, 0)."""


class SingularityError(GeometryError):
    """Bipolar coordinate whose image is the point at infinity."""


@dataclass(frozen=True)
class Geometry:
    a: float
    theta0: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise GeometryError(f"radius must be positive, got {self.a!r}")
        if not (0.0 < self.theta0 < math.pi / 2):
            raise GeometryError(
                f"theta0 must lie in (0, pi/2), got {self.theta0!r}"
            )

    @property
    def alpha(self) -> float:
        return self.a * math.sin(self.theta0)

    @property
    def centers(self) -> tuple[tuple[float, float], tuple[float, float]]:
        d = self.a * math.cos(self.theta0)
        return (0.0, d), (0.0, -d)

    @property
    def bound(self) -> float:
        """Spectral bound b = 1/2 - theta0/pi."""
        return 0.5 - self.theta0 / math.pi

    @property
    def arc_length(self) -> float:
        """Length of one boundary arc."""
        return 2.0 * self.a * (math.pi - self.theta0)

    @property
    def perimeter(self) -> float:
        return 2.0 * self.arc_length

    def center_of(self, side: str) -> complex:
        """Centre of the circle that carries the given boundary arc."""
        d = self.a * math.cos(self.theta0)
        if side == PLUS:
            return complex(0.0, -d)
        if side == MINUS:
            return complex(0.0, d)
        raise GeometryError(f"unknown side {side!r}")

    def to_config(self) -> dict[str, float]:
        return {"radius": self.a, "theta0": self.theta0}

    @classmethod
    def from_config(cls, cfg: Mapping[str, object]) -> "Geometry":
        return cls(a=float(cfg.get("radius", 1.0)), theta0=float(cfg["theta0"]))


def make_geometry(a: float, theta0: float) -> Geometry:
    return Geometry(a=float(a), theta0=float(theta0))


def _side_theta(g: Geometry, side: str) -> float:
    if side == PLUS:
        return g.theta0
    if side == MINUS:
        return -g.theta0
    raise GeometryError(f"unknown side {side!r}")


def phi(g: Geometry, zeta):
    """Map bipolar coordinates ``xi + i theta`` to the plane, z = alpha (e^zeta + 1)/(e^zeta - 1).

    Accepts complex scalars or arrays and returns complex values.
    """
    zeta = np.asarray(zeta, dtype=complex)
    den = np.expm1(zeta)
    if np.any(den == 0):
        raise SingularityError("zeta = 0 is the image of the point at infinity")
    out = g.alpha * (1.0 + 2.0 / den)
    return out[()] if out.ndim == 0 else out


def phi_prime(g: Geometry, zeta):
    """Complex derivative of :func:`phi`."""
    zeta = np.asarray(zeta, dtype=complex)
    den = np.expm1(zeta)
    if np.any(den == 0):
        raise SingularityError("zeta = 0 is the image of the point at infinity")
    out = -2.0 * g.alpha * np.exp(zeta) / den**2
    return out[()] if out.ndim == 0 else out


def psi(g: Geometry, z, *, tol: float = 1e-14):
    """Bipolar coordinates ``Psi1 + i Psi2`` of plane points ``z`` (complex).

    Raises on the branch cut [-alpha, alpha] and at the corners.
    """
    z = np.asarray(z, dtype=complex)
    al = g.alpha
    scale = tol * max(al, 1.0)
    if np.any((np.abs(z - al) <= scale) | (np.abs(z + al) <= scale)):
        raise CornerError("psi is singular at the corners (+-alpha, 0)")
    on_cut = (np.abs(z.imag) <= scale) & (np.abs(z.real) < al)
    if np.any(on_cut):
        raise BranchCutError(
            "points on the segment (-alpha, alpha) of the x1-axis have no "
            "unique bipolar image (theta = +-pi)"
        )
    out = np.log((z + al) / (z - al))
    return out[()] if out.ndim == 0 else out


def psi_prime(g: Geometry, z):
    """Complex derivative of ``Log lambda(z)``, i.e. -2 alpha / (z^2 - alpha^2)."""
    z = np.asarray(z, dtype=complex)
    out = -2.0 * g.alpha / (z * z - g.alpha**2)
    return out[()] if out.ndim == 0 else out


def psi_gradients(g: Geometry, z):
    """Gradients of Psi1 and Psi2 at ``z`` as (grad1, grad2), each shape (..., 2).

    From Cauchy-Riemann: with w = Psi'(z) = u + i v, grad Psi1 = (u, -v) and
    grad Psi2 = (v, u).
    """
    w = np.asarray(psi_prime(g, z))
    u, v = w.real, w.imag
    return np.stack([u, -v], axis=-1), np.stack([v, u], axis=-1)


def scale_factor(g: Geometry, xi, theta):
    """h = (cosh xi - cos theta) / alpha = 1/|Phi'|."""
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any((xi == 0) & (np.cos(theta) == 1.0)):
        raise SingularityError("h vanishes at (0, 0), the image of infinity")
    # cosh xi - cos theta = 2 sinh^2(xi/2) + 2 sin^2(theta/2), no cancellation
    out = 2.0 * (np.sinh(0.5 * xi) ** 2 + np.sin(0.5 * theta) ** 2) / g.alpha
    return out[()] if out.ndim == 0 else out


def boundary_point(g: Geometry, xi, side: str):
    """Point Phi(xi, +-theta0) on the lower (plus) or upper (minus) arc."""
    th = _side_theta(g, side)
    return phi(g, np.asarray(xi, dtype=float) + 1j * th)


def corner_offset(g: Geometry, xi, side: str):
    """Boundary point minus the nearer corner, accurate near the corners.

    Returns ``(corner, offset)`` with ``corner = +-alpha`` chosen by the sign
    of xi, so that ``boundary_point = corner + offset``.
    """
    xi = np.asarray(xi, dtype=float)
    zeta = xi + 1j * _side_theta(g, side)
    # z - alpha = 2 alpha / (e^zeta - 1);  z + alpha = 2 alpha e^zeta/(e^zeta - 1)
    #           = -2 alpha / (e^-zeta - 1)
    right = xi >= 0
    off = np.where(right, 2.0 * g.alpha / np.expm1(zeta), -2.0 * g.alpha / np.expm1(-zeta))
    corner = np.where(right, g.alpha, -g.alpha)
    return corner, off


def outward_normal(g: Geometry, x, side: str, *, tol: float = 1e-9):
    """Outward unit normal at boundary points ``x`` (complex) on the given arc."""
    x = np.asarray(x, dtype=complex)
    c = g.center_of(side)
    r = np.abs(x - c)
    if np.any(np.abs(r - g.a) > tol * g.a):
        raise GeometryError("point is not on the designated arc")
    if side == PLUS and np.any(x.imag > tol * g.a):
        raise GeometryError("point is not on the lower arc")
    if side == MINUS and np.any(x.imag < -tol * g.a):
        raise GeometryError("point is not on the upper arc")
    out = (x - c) / g.a
    return out[()] if out.ndim == 0 else out


def arc_element(g: Geometry, xi):
    """Jacobian d sigma / d xi = 1/h(xi, theta0) on either arc."""
    return 1.0 / scale_factor(g, xi, g.theta0)


def is_exterior(g: Geometry, z) -> np.ndarray:
    """True for points strictly outside the closed domain."""
    z = np.asarray(z, dtype=complex)
    c1, c2 = g.center_of(MINUS), g.center_of(PLUS)
    return (np.abs(z - c1) > g.a) & (np.abs(z - c2) > g.a)


def boundary_distance(g: Geometry, z) -> np.ndarray:
    """Euclidean distance from ``z`` to the boundary (both arcs, corners included)."""
    z = np.asarray(z, dtype=complex)
    corners = np.minimum(np.abs(z - g.alpha), np.abs(z + g.alpha))
    out = corners
    for side, sign in ((PLUS, -1.0), (MINUS, 1.0)):
        c = g.center_of(side)
        r = np.abs(z - c)
        with np.errstate(invalid="ignore", divide="ignore"):
            proj_y = c.imag + g.a * (z - c).imag / np.where(r > 0, r, 1.0)
        # the lower arc is the part of its circle with y <= 0, the upper one y >= 0
        on_arc = (sign * proj_y >= 0) & (r > 0)
        out = np.where(on_arc, np.minimum(out, np.abs(r - g.a)), out)
    return out[()] if out.ndim == 0 else out
