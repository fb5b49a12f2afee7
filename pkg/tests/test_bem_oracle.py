import math

import numpy as np
import pytest

from npdisks.bem_oracle import (
    MeshError,
    assemble,
    build_mesh,
    gram_eigenvalues,
    interpolation_matrix,
    jump_check,
    oracle_spectrum,
    refine_mesh,
)
from npdisks.checks import band_limited_pullback, nodal_values
from npdisks.geometry import Geometry, GeometryError


@pytest.fixture(scope="module")
def sys64(g45):
    return assemble(g45, build_mesh(g45, 64))


def test_mesh_basics(g45):
    m = build_mesh(g45, 32)
    assert m.weights.sum() == pytest.approx(g45.perimeter, rel=1e-13)
    assert abs(m.integrate(m.points.real)) < 1e-13
    # both reflections map the node set onto itself
    for p in (np.conj(m.points), -np.conj(m.points)):
        d = np.min(np.abs(p[:, None] - m.points[None, :]), axis=1)
        assert np.max(d) < 1e-13
    assert np.allclose(np.abs(m.normals), 1.0)


def test_mesh_errors(g45):
    with pytest.raises(MeshError):
        build_mesh(g45, 33)
    with pytest.raises(MeshError):
        build_mesh(g45, 64, beta=0.5)
    with pytest.raises(GeometryError):
        build_mesh(Geometry(1.0, 0.01), 64)


def test_layer_identities(sys64, g45):
    m = sys64.mesh
    Kd = sys64.double_layer_adjoint()
    far = np.abs(m.offset) > 0.05
    # the double layer of the constant 1 is 1/2 on the smooth part of the boundary
    assert np.max(np.abs(Kd @ np.ones(m.size) - 0.5)[far]) < 1e-9
    phi = np.cos(3 * m.angle)
    # int K*[phi] = <phi, K[1]> = (1/2) int phi
    assert abs(m.weights @ (sys64.K @ phi) - 0.5 * (m.weights @ phi)) < 1e-12


def test_calderon_and_symmetry(sys64):
    assert sys64.calderon_residual() < 1e-5
    assert sys64.kernel_asymmetry() == 0.0
    assert sys64.quadrature_asymmetry() < 1e-2


def test_gram_nonnegative_on_mean_zero(sys64):
    ev = gram_eigenvalues(sys64)
    assert ev[0] > -1e-14 * ev[-1]


def test_spectrum_inside_bound(g60):
    s = assemble(g60, build_mesh(g60, 32))
    ev = oracle_spectrum(s)
    b = g60.bound
    assert ev.size == s.mesh.size - 1
    assert -b < ev[0] < -0.98 * b and 0.98 * b < ev[-1] < b


def test_spectrum_vectors(g45):
    s = assemble(g45, build_mesh(g45, 16))
    ev, V = oracle_spectrum(s, return_vectors=True)
    assert V.shape == (s.mesh.size, ev.size)
    v = V[:, -1]
    # Rayleigh quotient in the -S inner product reproduces the eigenvalue
    num = s.hstar_inner(s.K @ v, v)
    den = s.hstar_inner(v, v)
    assert (num / den).real == pytest.approx(ev[-1], abs=5e-3)


def test_interpolation_matrix(g45):
    c = build_mesh(g45, 16)
    f = refine_mesh(c, 2, corner_levels=2)
    P = interpolation_matrix(c, f)
    assert np.allclose(np.asarray(P.sum(axis=1)).ravel(), 1.0, atol=1e-12)
    u = np.cos(c.angle)
    assert np.max(np.abs(P @ u - np.cos(f.angle))) < 1e-8


def test_jump_relation(sys64, g45):
    phi = nodal_values(g45, sys64.mesh, band_limited_pullback(np.random.default_rng(0)))
    assert jump_check(sys64, phi) < 1e-4


def test_export(tmp_path, g45):
    s = assemble(g45, build_mesh(g45, 16))
    s.export(str(tmp_path / "sys"))
    t = np.loadtxt(tmp_path / "sys_mesh.csv", delimiter=",", skiprows=1)
    assert t.shape == (s.mesh.size, 6)
    assert np.array_equal(np.load(tmp_path / "sys_S.npy"), s.S)
