import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npdisks.geometry import (
    MINUS,
    PLUS,
    BranchCutError,
    CornerError,
    Geometry,
    GeometryError,
    arc_element,
    boundary_distance,
    boundary_point,
    corner_offset,
    is_exterior,
    outward_normal,
    phi,
    phi_prime,
    psi,
    psi_prime,
    scale_factor,
)

thetas = st.floats(0.05, 1.5)
radii = st.floats(0.2, 5.0)


def test_constants(g45):
    assert g45.alpha == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert g45.bound == 0.25
    assert Geometry(1.0, math.pi / 3).bound == pytest.approx(1 / 6, abs=1e-15)
    (x1, y1), (x2, y2) = g45.centers
    assert (x1, x2) == (0.0, 0.0)
    assert y1 == pytest.approx(math.sqrt(0.5)) and y2 == pytest.approx(-math.sqrt(0.5))


@pytest.mark.parametrize("a,th", [(0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, math.pi / 2), (1.0, 2.0)])
def test_invalid_geometry(a, th):
    with pytest.raises(GeometryError):
        Geometry(a, th)


def test_config_round_trip(g45):
    assert Geometry.from_config(g45.to_config()) == g45


@settings(max_examples=30, deadline=None)
@given(th=thetas, a=radii, seed=st.integers(0, 2**31))
def test_round_trip(th, a, seed):
    g = Geometry(a, th)
    rng = np.random.default_rng(seed)
    zeta = rng.uniform(-4, 4, 1000) + 1j * rng.uniform(-0.95, 0.95, 1000) * math.pi
    assert np.max(np.abs(psi(g, phi(g, zeta)) - zeta)) < 1e-12
    z = a * (rng.uniform(-3, 3, 1000) + 1j * rng.uniform(-3, 3, 1000))
    z = z[(np.abs(z.imag) > 1e-3 * a) & (np.minimum(abs(z - g.alpha), abs(z + g.alpha)) > 1e-3 * a)]
    assert np.max(np.abs(phi(g, psi(g, z)) - z)) < 1e-12 * max(1.0, a)


@settings(max_examples=20, deadline=None)
@given(th=thetas, a=radii)
def test_arcs_on_circles(th, a):
    g = Geometry(a, th)
    xi = np.linspace(-12, 12, 201)
    lower = boundary_point(g, xi, PLUS)
    upper = boundary_point(g, xi, MINUS)
    # theta = +theta0 is the lower arc, carried by the circle centred below the axis
    assert np.max(np.abs(np.abs(lower - g.center_of(PLUS)) - a)) < 1e-12 * a
    assert np.max(np.abs(np.abs(upper - g.center_of(MINUS)) - a)) < 1e-12 * a
    assert np.all(lower.imag <= 1e-12 * a) and np.all(upper.imag >= -1e-12 * a)


def test_scale_factor_matches_derivative(g45):
    rng = np.random.default_rng(0)
    zeta = rng.uniform(-3, 3, 200) + 1j * rng.uniform(-3, 3, 200)
    h = 1e-6
    d = (phi(g45, zeta + h) - phi(g45, zeta - h)) / (2 * h)
    ref = 1 / np.abs(d)
    assert np.max(np.abs(scale_factor(g45, zeta.real, zeta.imag) - ref) / ref) < 1e-8
    assert np.max(np.abs(phi_prime(g45, zeta) - d) / np.abs(d)) < 1e-8


def test_psi_prime_is_inverse_derivative(g45):
    zeta = np.array([0.3 + 0.2j, -1.0 + 0.6j, 2.0 - 0.7j])
    z = phi(g45, zeta)
    assert np.allclose(psi_prime(g45, z) * phi_prime(g45, zeta), 1.0, atol=1e-13)


def test_conformality(g45):
    rng = np.random.default_rng(1)
    zeta = rng.uniform(-2, 2, 100) + 1j * rng.uniform(-0.7, 0.7, 100)
    h = 1e-6
    e1 = (phi(g45, zeta + h) - phi(g45, zeta - h)) / (2 * h)
    e2 = (phi(g45, zeta + 1j * h) - phi(g45, zeta - 1j * h)) / (2 * h)
    dots = (e1 * np.conj(e2)).real / (np.abs(e1) * np.abs(e2))
    assert np.max(np.abs(dots)) < 1e-8


def test_corner_and_branch_errors(g45):
    with pytest.raises(CornerError):
        psi(g45, g45.alpha)
    with pytest.raises(BranchCutError):
        psi(g45, 0.1)
    # just off the segment is fine and lands near theta = +-pi
    assert abs(abs(psi(g45, 0.1 + 1e-9j).imag) - math.pi) < 1e-6


def test_arc_element_even_and_decaying(g45):
    xi = np.linspace(0, 20, 50)
    assert np.allclose(arc_element(g45, xi), arc_element(g45, -xi), rtol=0, atol=0)
    assert arc_element(g45, 20.0) < 1e-7


def test_corner_offset(g45):
    xi = np.array([-25.0, -3.0, 3.0, 25.0])
    c, off = corner_offset(g45, xi, PLUS)
    assert np.allclose(c + off, boundary_point(g45, xi, PLUS), atol=1e-14)
    assert abs(off[-1]) < 1e-10


def test_outward_normal(g45):
    x = boundary_point(g45, np.array([0.5, -1.0]), MINUS)
    n = outward_normal(g45, x, MINUS)
    assert np.allclose(np.abs(n), 1.0)
    assert np.all(is_exterior(g45, x + 1e-6 * n))
    with pytest.raises(GeometryError):
        outward_normal(g45, x, PLUS)


def test_boundary_distance_brute_force(g45):
    t = np.linspace(0, 2 * math.pi, 40001)
    b1 = g45.center_of(PLUS) + np.exp(1j * t)
    b2 = g45.center_of(MINUS) + np.exp(1j * t)
    pts = np.concatenate([b1[b1.imag <= 0], b2[b2.imag >= 0]])
    rng = np.random.default_rng(0)
    z = rng.uniform(-3, 3, 300) + 1j * rng.uniform(-3, 3, 300)
    brute = np.min(np.abs(z[:, None] - pts[None, :]), axis=1)
    assert np.max(np.abs(boundary_distance(g45, z) - brute)) < 1e-6
    assert boundary_distance(g45, g45.alpha) == 0.0
