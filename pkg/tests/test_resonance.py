import math

import numpy as np
import pytest

from npdisks.geometry import Geometry
from npdisks.multipliers import p1, p2
from npdisks.resonance import (
    DipoleSource,
    ResonanceQuery,
    SourceError,
    SweepError,
    dipole_at_depth,
    dipole_gradient,
    dipole_normal_derivative,
    dipole_potential,
    g_j,
    lambda_from_permittivity,
    phi_norm_sq,
    rate_fit,
    spectral_mass,
)
from npdisks.spectral_core import forward_transform, wstar_norm_sq


def test_permittivity_map():
    assert lambda_from_permittivity(2.0) == pytest.approx(1.5)
    assert lambda_from_permittivity(-1.0) == pytest.approx(0.0)


def test_dipole_gradient(g45):
    src = dipole_at_depth(g45, 0.4)
    z = np.array([0.3 + 2j, -1.5 - 1.2j])
    h = 1e-6
    fd = (dipole_potential(src, z + h) - dipole_potential(src, z - h)) / (2 * h) + 1j * (
        dipole_potential(src, z + 1j * h) - dipole_potential(src, z - 1j * h)
    ) / (2 * h)
    assert np.allclose(dipole_gradient(src, z), fd, atol=1e-8)


@pytest.mark.parametrize("kappa", [0.3, 0.6, 0.9])
def test_depth(g45, kappa):
    assert dipole_at_depth(g45, kappa).depth(g45) == pytest.approx(kappa)


def test_source_validation(g45):
    with pytest.raises(SourceError):
        DipoleSource(3j, (1.0, 1.0))
    with pytest.raises(SourceError):
        DipoleSource(0.0j, (1.0, 0.0)).validate(g45)
    with pytest.raises(SourceError):
        DipoleSource(3.0 + 0j, (1.0, 0.0)).validate(g45)
    with pytest.raises(SourceError):
        dipole_at_depth(g45, 1.0)


def test_g_j_matches_transform(g45):
    src = dipole_at_depth(g45, 0.6)
    f = forward_transform(g45, dipole_normal_derivative(g45, src))
    s = np.array([0.3, 1.0, 2.5])
    a1, a2 = f.at(s)
    b1, b2 = f.at(-s)
    ref1 = 0.5 * p1(s, g45.theta0) * (np.abs(a1) ** 2 + np.abs(b1) ** 2) / 2
    ref2 = 0.5 * p2(s, g45.theta0) * (np.abs(a2) ** 2 + np.abs(b2) ** 2) / 2
    assert np.allclose(g_j(g45, src, s, 1), ref1, rtol=1e-6)
    assert np.allclose(g_j(g45, src, s, 2), ref2, rtol=1e-6)
    assert spectral_mass(g45, src) == pytest.approx(wstar_norm_sq(f), rel=1e-6)


def test_off_spectrum_bounded(g45):
    src = dipole_at_depth(g45, 0.5)
    v = [phi_norm_sq(g45, src, 0.4, d) for d in (1e-2, 1e-4, 1e-6)]
    assert v[2] == pytest.approx(v[1], rel=1e-3)


def test_sweep_preconditions(g45):
    src = dipole_at_depth(g45, 0.5)
    with pytest.raises(SweepError):
        rate_fit(g45, src, 0.1, [1e-2, 1e-3])
    with pytest.raises(SweepError):
        rate_fit(g45, src, 0.1, np.geomspace(1e-2, 1e-4, 8))
    with pytest.raises(SweepError):
        rate_fit(g45, src, 0.1, [1e-2, 1e-3, 1e-4, 1e-5, 0.0, 1e-6])
    with pytest.raises(SweepError):
        ResonanceQuery(src, 0.1, (1e-3, 1e-2))


def test_geometry_dependence():
    # a wider opening moves the bound and the interior rate stays -1
    g = Geometry(1.0, math.pi / 6)
    src = dipole_at_depth(g, 0.5)
    fit = rate_fit(g, src, g.bound / 2)
    assert fit.slope == pytest.approx(-1.0, abs=0.05)
