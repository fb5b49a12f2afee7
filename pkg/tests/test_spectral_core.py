import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npdisks.checks import band_limited_pullback
from npdisks.spectral_core import (
    BoundaryDensity,
    GridMismatchError,
    XiGrid,
    apply_K_multiplier,
    apply_resolvent_multiplier,
    forward_transform,
    inverse_transform,
    read_density_csv,
    read_pair_csv,
    resolution_projector,
    spectral_distribution,
    write_density_csv,
    write_pair_csv,
    wstar_inner,
    wstar_norm_sq,
)

GRID = XiGrid()


def _pair(g, seed):
    u = band_limited_pullback(np.random.default_rng(seed))
    return forward_transform(g, BoundaryDensity.from_pullback(g, GRID, u))


def test_grid_validation():
    with pytest.raises(ValueError):
        XiGrid(30.0, 4095)
    with pytest.raises(ValueError):
        XiGrid(-1.0, 64)
    assert GRID.ds == pytest.approx(math.pi / GRID.L)


def test_gaussian_transform():
    u = np.exp(-GRID.xi**2 / 2)
    assert np.max(np.abs(GRID.fourier(u) - np.exp(-GRID.s**2 / 2))) < 1e-13
    assert np.max(np.abs(GRID.inverse_fourier(GRID.fourier(u)) - u)) < 1e-13
    assert abs(GRID.fourier_at(u, 0.37) - math.exp(-0.37**2 / 2)) < 1e-13
    plus, minus = GRID.fourier_at_pm(u, np.array([0.2, 1.1]))
    assert np.allclose(plus, np.exp(-np.array([0.2, 1.1]) ** 2 / 2), atol=1e-13)
    assert np.allclose(minus, plus, atol=1e-13)


def test_transform_round_trip(g45):
    u = band_limited_pullback(np.random.default_rng(0))
    d = BoundaryDensity.from_pullback(g45, GRID, u)
    assert abs(d.integral(g45)) < 1e-12
    r = inverse_transform(g45, forward_transform(g45, d))
    # compare pull-backs: phi = h u carries the factor h ~ e^|xi| near the corners
    for a, b in zip(r.pullback(g45), d.pullback(g45)):
        assert np.max(np.abs(a - b)) < 1e-12


def test_grid_mismatch(g45):
    d = BoundaryDensity.from_pullback(g45, GRID, band_limited_pullback(np.random.default_rng(0)))
    other = BoundaryDensity(XiGrid(20.0, 4096), d.plus, d.minus)
    with pytest.raises(GridMismatchError):
        d + other
    with pytest.raises(GridMismatchError):
        BoundaryDensity(GRID, d.plus[:-2], d.minus[:-2])


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_K_self_adjoint_and_bounded(seed):
    from npdisks.geometry import Geometry

    g = Geometry(1.0, 0.6)
    f, h = _pair(g, seed), _pair(g, seed + 1)
    Kf, Kh = apply_K_multiplier(f), apply_K_multiplier(h)
    lhs, rhs = wstar_inner(Kf, h), wstar_inner(f, Kh)
    assert abs(lhs - rhs) <= 1e-12 * math.sqrt(wstar_norm_sq(f) * wstar_norm_sq(h))
    assert wstar_norm_sq(Kf) <= g.bound**2 * wstar_norm_sq(f) * (1 + 1e-12)


def test_resolvent_inverts(g45):
    f = _pair(g45, 3)
    lam = 0.1 + 0.05j
    r = apply_resolvent_multiplier(f, lam)
    back = r.scale(lam) + apply_K_multiplier(r).scale(-1.0)
    diff = back + f.scale(-1.0)
    assert math.sqrt(wstar_norm_sq(diff) / wstar_norm_sq(f)) < 1e-12


def test_projector_properties(g45):
    f = _pair(g45, 4)
    b = g45.bound
    n = wstar_norm_sq(f)
    assert wstar_norm_sq(resolution_projector(b, f)) == pytest.approx(n, rel=1e-13)
    assert wstar_norm_sq(resolution_projector(-b, f)) == 0.0
    for t in (-0.2, -0.05, 0.0, 0.1):
        e = resolution_projector(t, f)
        ee = resolution_projector(t, e)
        assert wstar_norm_sq(ee + e.scale(-1.0)) < 1e-24 * n
    with pytest.raises(ValueError):
        resolution_projector(0.3, f)


def test_distribution_monotone(g45):
    f = _pair(g45, 5)
    ts = np.linspace(-g45.bound, g45.bound, 21)
    E = np.array([spectral_distribution(f, t) for t in ts])
    assert E[0] == 0.0 and E[-1] == pytest.approx(wstar_norm_sq(f))
    assert np.all(np.diff(E) >= 0)


def test_csv_round_trips(tmp_path, g45):
    d = BoundaryDensity.from_pullback(g45, GRID, band_limited_pullback(np.random.default_rng(6)))
    write_density_csv(tmp_path / "d.csv", d)
    r = read_density_csv(tmp_path / "d.csv")
    assert r.grid == d.grid and np.array_equal(r.plus, d.plus) and np.array_equal(r.minus, d.minus)
    f = forward_transform(g45, d)
    write_pair_csv(tmp_path / "f.csv", f)
    p = read_pair_csv(tmp_path / "f.csv")
    assert p.grid == f.grid and p.theta0 == f.theta0
    assert np.array_equal(p.f1, f.f1) and np.array_equal(p.f2, f.f2)
    assert wstar_norm_sq(p) == wstar_norm_sq(f)
