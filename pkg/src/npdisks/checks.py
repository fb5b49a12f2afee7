"""Numerical checks shared by the validate command and the acceptance suite.

Each check returns a :class:`CheckResult` holding the measured residual and
the tolerance it is judged against.  Test densities are band-limited
mean-zero functions given by their pull-back u(xi) to the bipolar line, so
the same function can be sampled on the xi-grid (multiplier route) and on
the Nystrom mesh (oracle route).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bem_oracle import NystromMesh, NystromSystem, jump_check
from .field_solver import GenEigenfunction, eigenrelation_check, np_apply_at, single_layer_at
from .geometry import MINUS, PLUS, Geometry, phi, psi, scale_factor
from .multipliers import bound
from .spectral_core import (
    BoundaryDensity,
    XiGrid,
    forward_transform,
    spectral_density,
    spectral_distribution,
    wstar_inner,
    wstar_norm_sq,
)


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.tol)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": float(self.value),
            "tol": float(self.tol),
            "passed": self.passed,
            "detail": self.detail,
        }


PullBack = Callable[[np.ndarray, str], np.ndarray]


def band_limited_pullback(rng: np.random.Generator) -> PullBack:
    """Random u(xi, side): xi-derivative of a modulated Gaussian.

    Being a derivative, each arc's pull-back integrates to zero, so the
    density is mean-zero on the boundary; its Fourier transform decays like
    exp(-w^2 s^2 / 2).
    """
    c = rng.uniform(-1.5, 1.5)
    w = rng.uniform(1.0, 2.0)
    k = rng.uniform(0.0, 1.5)
    ph = rng.uniform(0.0, 2 * math.pi)
    amp = (1.0, rng.uniform(-1.5, 1.5))

    def u(x, side):
        y = (x - c) / w
        e = np.exp(-y * y / 2)
        du = (-y / w) * e * np.cos(k * x + ph) - k * e * np.sin(k * x + ph)
        return du * (amp[0] if side == PLUS else amp[1])

    return u


def nodal_values(g: Geometry, mesh: NystromMesh, u: PullBack) -> np.ndarray:
    """Density values phi = h u at the mesh nodes."""
    xi = mesh.bipolar_xi()
    sides = mesh.sides()
    out = np.empty(mesh.size, dtype=complex)
    for sd in (PLUS, MINUS):
        k = sides == sd
        out[k] = scale_factor(g, xi[k], g.theta0) * u(xi[k], sd)
    return out


# --------------------------------------------------------------------------
# individual checks
# --------------------------------------------------------------------------


def check_round_trip(g: Geometry, n: int = 1000, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """psi(phi(zeta)) = zeta and phi(psi(z)) = z on random points."""
    rng = np.random.default_rng(seed)
    zeta = rng.uniform(-4, 4, n) + 1j * rng.uniform(-0.95, 0.95, n) * math.pi
    r1 = np.max(np.abs(psi(g, phi(g, zeta)) - zeta))
    z = rng.uniform(-3, 3, n) * g.a + 1j * rng.uniform(-3, 3, n) * g.a
    # keep away from the branch segment and the corners
    keep = (np.abs(z.imag) > 1e-3 * g.a) & (np.minimum(np.abs(z - g.alpha), np.abs(z + g.alpha)) > 1e-3 * g.a)
    z = z[keep]
    r2 = np.max(np.abs(phi(g, psi(g, z)) - z) / np.maximum(np.abs(z), g.a))
    return CheckResult("round_trip", float(max(r1, r2)), tol, {"psi_phi": float(r1), "phi_psi": float(r2)})


def check_calderon(sys: NystromSystem, tol: float = 1e-6) -> CheckResult:
    return CheckResult("calderon", sys.calderon_residual(), tol, {"nodes": sys.mesh.size})


def _mesh_compare(g, sys, grid, u):
    m = sys.mesh
    xi = m.bipolar_xi()
    sides = m.sides()
    ok = np.abs(xi) < grid.L - 1
    d = BoundaryDensity.from_pullback(g, grid, u)
    ph = nodal_values(g, m, u)
    Ko, So = sys.K @ ph, sys.S @ ph
    Kp = np.zeros(m.size, dtype=complex)
    Sp = np.zeros(m.size, dtype=complex)
    for sd in (PLUS, MINUS):
        k = (sides == sd) & ok
        Kp[k] = np_apply_at(g, d, xi[k], sd)
        Sp[k] = single_layer_at(g, d, xi[k], sd)
    w = m.weights[ok]

    def rel(a, b):
        return math.sqrt(np.sum(w * np.abs(a[ok] - b[ok]) ** 2) / np.sum(w * np.abs(b[ok]) ** 2))

    return rel(Kp, Ko), rel(Sp, So)


def check_multiplier_vs_oracle(
    g: Geometry, sys: NystromSystem, grid: XiGrid | None = None, count: int = 5, seed: int = 1, tol: float = 1e-3
) -> CheckResult:
    """Relative L2 mismatch of K* and S applied by multipliers and by the oracle."""
    grid = grid or XiGrid()
    rng = np.random.default_rng(seed)
    errs_k, errs_s = [], []
    for _ in range(count):
        ek, es = _mesh_compare(g, sys, grid, band_limited_pullback(rng))
        errs_k.append(ek)
        errs_s.append(es)
    val = max(max(errs_k), max(errs_s))
    return CheckResult("multiplier_vs_oracle", val, tol, {"K": errs_k, "S": errs_s})


def check_unitarity(
    g: Geometry, sys: NystromSystem, grid: XiGrid | None = None, pairs: int = 10, seed: int = 2, tol: float = 1e-4
) -> CheckResult:
    """<phi, psi>_{H*} on the oracle against <U phi, U psi>_{W*}."""
    grid = grid or XiGrid()
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(pairs):
        u, v = band_limited_pullback(rng), band_limited_pullback(rng)
        o = sys.hstar_inner(nodal_values(g, sys.mesh, u), nodal_values(g, sys.mesh, v))
        fu = forward_transform(g, BoundaryDensity.from_pullback(g, grid, u))
        fv = forward_transform(g, BoundaryDensity.from_pullback(g, grid, v))
        w = wstar_inner(fu, fv)
        errs.append(abs(o - w) / abs(o))
    return CheckResult("unitarity", max(errs), tol, {"rel_errors": errs})


def check_jump(g: Geometry, sys: NystromSystem, seed: int = 3, tol: float = 1e-4) -> CheckResult:
    rng = np.random.default_rng(seed)
    val = jump_check(sys, nodal_values(g, sys.mesh, band_limited_pullback(rng)))
    return CheckResult("jump", val, tol)


def check_eigenrelation(
    g: Geometry,
    grid: XiGrid | None = None,
    s_values=(0.5, 1.0, 3.0),
    seed: int = 4,
    tol: float = 1e-6,
) -> CheckResult:
    """Weak eigenrelation residual for both families against a test density."""
    grid = grid or XiGrid()
    rng = np.random.default_rng(seed)
    test = BoundaryDensity.from_pullback(g, grid, band_limited_pullback(rng))
    res = {}
    for s in s_values:
        for j in (1, 2):
            res[f"s={s:g},j={j}"] = eigenrelation_check(g, GenEigenfunction(float(s), j), test)
    return CheckResult("eigenrelation", max(res.values()), tol, res)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)


def _cell_masses(f, ts, b):
    """Gauss-Legendre integral of the spectral density over each cell of ``ts``.

    Cells ending at -b or b use t = +-(b - c v^2), which cancels the inverse
    square-root growth of the density at the spectral edges.
    """
    v = 0.5 * (_GL_X + 1.0)
    w = 0.5 * _GL_W
    nodes, weights = [], []
    for lo, hi in zip(ts[:-1], ts[1:]):
        if hi >= b:
            c = b - lo
            nodes.append(b - c * v**2)
            weights.append(w * 2 * c * v)
        elif lo <= -b:
            c = hi + b
            nodes.append(-b + c * v**2)
            weights.append(w * 2 * c * v)
        else:
            nodes.append(lo + (hi - lo) * v)
            weights.append(w * (hi - lo))
    nodes, weights = np.array(nodes), np.array(weights)
    vals = spectral_density(f, nodes.ravel()).reshape(nodes.shape)
    return np.sum(vals * weights, axis=1)


def check_resolution_of_identity(
    g: Geometry,
    grid: XiGrid | None = None,
    seed: int = 5,
    tol: float = 1e-6,
    t_points: int = 200,
) -> CheckResult:
    """Spectral measure mass and continuity of t -> <f, E_t f>.

    The density of the measure is integrated in the t variable over [-b, b]
    and compared with ||f||^2_{W*}.  On a ``t_points`` grid each
    increment of the distribution must match the integral of the density
    over that cell, so no atom hides between grid points.
    """
    grid = grid or XiGrid()
    b = bound(g.theta0)
    rng = np.random.default_rng(seed)
    f = forward_transform(g, BoundaryDensity.from_pullback(g, grid, band_limited_pullback(rng)))
    total = wstar_norm_sq(f)

    ts = np.linspace(-b, b, t_points)
    if 0.0 not in ts:
        ts = np.sort(np.append(ts, 0.0))
    E = np.array([spectral_distribution(f, float(t)) for t in ts])
    cell = _cell_masses(f, ts, b)
    steps = np.abs(np.diff(E) - cell) / total
    mass_err = abs(float(np.sum(cell)) - total) / total
    jump = float(np.max(steps))
    monotone = bool(np.all(np.diff(E) >= -1e-12 * total))
    value = max(mass_err, jump) if monotone else math.inf
    return CheckResult(
        "resolution_of_identity",
        value,
        tol,
        {"mass_error": mass_err, "max_jump": jump, "monotone": monotone, "norm_sq": total},
    )


def run_all(
    g: Geometry, sys: NystromSystem, grid: XiGrid | None = None, *, calderon_tol: float = 1e-6
) -> list[CheckResult]:
    grid = grid or XiGrid()
    return [
        check_round_trip(g),
        check_unitarity(g, sys, grid),
        check_calderon(sys, tol=calderon_tol),
        check_multiplier_vs_oracle(g, sys, grid),
        check_jump(g, sys),
        check_eigenrelation(g, grid),
        check_resolution_of_identity(g, grid),
    ]
