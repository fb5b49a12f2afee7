import math

import numpy as np
import pytest

from npdisks.bem_oracle import assemble, build_mesh
from npdisks.checks import band_limited_pullback
from npdisks.field_solver import (
    GenEigenfunction,
    NotMeanZeroError,
    SpectrumResolventError,
    eigenfunction_single_layer,
    eigenfunction_single_layer_gradient,
    eigenrelation_check,
    even_far_field_report,
    field_map,
    induced_density_pair,
    induced_field,
    pair_to_boundary_at,
    solve_transmission,
)
from npdisks.geometry import MINUS, PLUS, is_exterior
from npdisks.resonance import ResonanceQuery, dipole_at_depth, dipole_gradient, dipole_potential
from npdisks.spectral_core import BoundaryDensity, XiGrid

GRID = XiGrid()


def _cloud(g, n=40, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-3, 3, 4 * n) + 1j * rng.uniform(-3, 3, 4 * n)
    z = z[is_exterior(g, z)]
    from npdisks.geometry import boundary_distance

    return z[boundary_distance(g, z) > 0.2][:n]


@pytest.mark.parametrize("s,j", [(0.5, 1), (1.0, 2), (3.0, 1), (3.0, 2)])
def test_eigenfunction_field_harmonic(g45, s, j):
    e = GenEigenfunction(s, j)
    z = _cloud(g45)
    # O(h^2) truncation stays below the roundoff-free budget for s <= 3
    h = 3e-4
    u = lambda w: eigenfunction_single_layer(g45, e, w)  # noqa: E731
    lap = (u(z + h) + u(z - h) + u(z + 1j * h) + u(z - 1j * h) - 4 * u(z)) / h**2
    assert np.max(np.abs(lap)) < 1e-6


def test_eigenfunction_gradient(g45):
    e = GenEigenfunction(0.8, 2)
    z = _cloud(g45, 10, 1)
    h = 1e-6
    fd1 = (eigenfunction_single_layer(g45, e, z + h) - eigenfunction_single_layer(g45, e, z - h)) / (2 * h)
    fd2 = (eigenfunction_single_layer(g45, e, z + 1j * h) - eigenfunction_single_layer(g45, e, z - 1j * h)) / (2 * h)
    gr = eigenfunction_single_layer_gradient(g45, e, z)
    assert np.allclose(gr[:, 0], fd1, atol=1e-8) and np.allclose(gr[:, 1], fd2, atol=1e-8)


def test_odd_field_decays(g45):
    e = GenEigenfunction(1.0, 1)
    v = np.abs(eigenfunction_single_layer(g45, e, np.array([10j, 100j, 1000j])))
    assert v[1] < 0.2 * v[0] and v[2] < 0.2 * v[1]


def test_even_far_field_report(g45):
    r = even_far_field_report(g45, 1.0)
    # the even closed form tends to a nonzero constant instead of 0
    assert not r["closed_form_decays"]
    assert r["closed_form_limit_error"] < 1e-3
    assert r["predicted_limit"] == pytest.approx(-0.054015, abs=1e-6)


def test_parity(g45):
    d = BoundaryDensity.from_pullback(g45, GRID, band_limited_pullback(np.random.default_rng(2)))
    xi = np.linspace(-3, 3, 7)
    for part, sign in ((d.odd_part(), -1.0), (d.even_part(), 1.0)):
        sol = solve_transmission(g45, part.project_mean_zero(g45))
        for th in (0.3, 0.7):
            assert np.allclose(sol.on_line(th, xi), sign * sol.on_line(-th, xi), atol=1e-13)


def test_mean_zero_required(g45):
    d = BoundaryDensity.from_function(g45, GRID, lambda x, side: np.exp(-x * x))
    with pytest.raises(NotMeanZeroError):
        solve_transmission(g45, d)


def test_resolvent_consistency_with_oracle(g45):
    src = dipole_at_depth(g45, 0.5, 0.3)
    q = ResonanceQuery(src, 0.7, (0.1,))
    pair = induced_density_pair(g45, q, 0.1)
    s = assemble(g45, build_mesh(g45, 128))
    m = s.mesh
    xi = m.bipolar_xi()
    ok = np.abs(xi) < 8
    phi = np.zeros(m.size, dtype=complex)
    for sd in (PLUS, MINUS):
        k = m.sides() == sd
        phi[k] = pair_to_boundary_at(g45, pair, xi[k], sd)
    lam = 0.7 + 0.1j
    lhs = lam * phi - s.K @ phi
    dn = (np.conj(m.normals) * dipole_gradient(src, m.points)).real
    assert np.max(np.abs(lhs - dn)[ok]) / np.max(np.abs(dn)[ok]) < 1e-4


def test_induced_field_matches_oracle(g45):
    src = dipole_at_depth(g45, 0.5, 0.3)
    q = ResonanceQuery(src, 0.7, (0.1,))
    s = assemble(g45, build_mesh(g45, 128))
    m = s.mesh
    dn = (np.conj(m.normals) * dipole_gradient(src, m.points)).real
    dn -= np.sum(m.weights * dn) / np.sum(m.weights)
    ph = s.solve_resolvent(0.7 + 0.1j, dn)
    z = np.array([1.5j + 0.3, 2.0 + 0.1j, 3 + 3j])
    uo = dipole_potential(src, z) + s.single_layer_at(ph, z)
    us = induced_field(g45, q, z, delta=0.1)
    assert np.max(np.abs(uo - us) / np.abs(uo)) < 1e-8


def test_field_map_gradient(g45):
    q = ResonanceQuery(dipole_at_depth(g45, 0.5), g45.bound / 2, (1e-2,))
    x1 = np.array([-1.6, -0.3, 0.0, 1.2]) + 0.01
    x2 = np.array([-1.5, 0.0, 1.8])
    _, _, u, gr = field_map(g45, q, x1, x2, with_gradient=True)
    h = 1e-6
    up = field_map(g45, q, x1 + h, x2)[2]
    um = field_map(g45, q, x1 - h, x2)[2]
    vp = field_map(g45, q, x1, x2 + h)[2]
    vm = field_map(g45, q, x1, x2 - h)[2]
    fd = np.sqrt(np.abs((up - um) / (2 * h)) ** 2 + np.abs((vp - vm) / (2 * h)) ** 2)
    assert np.all(np.isfinite(u))
    assert np.max(np.abs(fd - gr) / gr) < 1e-6


def test_resolvent_on_spectrum_needs_loss(g45):
    q = ResonanceQuery(dipole_at_depth(g45, 0.5), 0.1, (1e-2,))
    with pytest.raises(SpectrumResolventError):
        induced_density_pair(g45, q, 0.0)


@pytest.mark.parametrize("s", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("j", [1, 2])
def test_eigenrelation(g45, s, j):
    d = BoundaryDensity.from_pullback(g45, GRID, band_limited_pullback(np.random.default_rng(7)))
    assert eigenrelation_check(g45, GenEigenfunction(s, j), d) < 1e-6
