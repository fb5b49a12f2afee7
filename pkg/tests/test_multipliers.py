import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npdisks.multipliers import bound, eta, eta_gap, eta_inverse, eta_prime, log_eta, p1, p2, s2p2

thetas = st.floats(0.05, 1.5)


def _eta_direct(s, th):
    return 0.5 * math.sinh(s * (math.pi - 2 * th)) / math.sinh(math.pi * s)


def test_bound_values():
    assert bound(math.pi / 4) == 0.25
    assert bound(math.pi / 3) == pytest.approx(1 / 6, abs=1e-16)


@pytest.mark.parametrize("th", [math.pi / 6, math.pi / 4, math.pi / 3])
def test_eta_matches_direct_formula(th):
    s = np.array([1e-3, 0.1, 0.5, 1.0, 3.0, 10.0])
    ref = np.array([_eta_direct(x, th) for x in s])
    assert np.allclose(eta(s, th), ref, rtol=1e-13, atol=0)
    assert eta(0.0, th) == pytest.approx(bound(th), abs=1e-16)


@settings(max_examples=40, deadline=None)
@given(th=thetas, s=st.floats(0.0, 50.0))
def test_eta_even_and_bounded(th, s):
    assert eta(s, th) == eta(-s, th)
    assert 0 < eta(s, th) <= bound(th)
    assert eta_gap(s, th) >= 0


def test_eta_decreasing():
    s = np.linspace(0, 40, 4001)
    assert np.all(np.diff(eta(s, 0.7)) < 0)


@settings(max_examples=40, deadline=None)
@given(th=thetas, s=st.floats(0.01, 30.0))
def test_eta_inverse_round_trip(th, s):
    assert eta_inverse(eta(s, th), th) == pytest.approx(s, rel=1e-9)
    if s < 3:
        # the gap form is meant for the top of the spectrum, where t = b - gap
        assert eta_inverse(None, th, gap=eta_gap(s, th)) == pytest.approx(s, rel=1e-9)


def test_eta_prime_finite_difference():
    th = 0.6
    s = np.array([0.05, 0.4, 1.0, 4.0, 7.0])
    h = 1e-6
    fd = (eta(s + h, th) - eta(s - h, th)) / (2 * h)
    assert np.allclose(eta_prime(s, th), fd, rtol=1e-7)
    assert eta_prime(0.0, th) == 0.0
    assert np.allclose(eta_prime(-s, th), -eta_prime(s, th))


def test_log_eta_no_underflow():
    assert np.isfinite(log_eta(1e4, 0.5))
    assert log_eta(2.0, 0.5) == pytest.approx(math.log(eta(2.0, 0.5)), rel=1e-14)


def test_weights():
    th = math.pi / 4
    s = np.array([1e-5, 0.3, 2.0, 20.0])
    a, b = th, math.pi - th
    ref1 = np.sinh(s * a) * np.sinh(s * b) / (s * np.sinh(math.pi * s))
    ref2 = np.cosh(s * a) * np.cosh(s * b) / (s * np.sinh(math.pi * s))
    assert np.allclose(p1(s, th), ref1, rtol=1e-10)
    assert np.allclose(p2(s, th), ref2, rtol=1e-10)
    assert np.allclose(s2p2(s, th), s**2 * ref2, rtol=1e-10)
    # the s^2 p2 limit at the origin is 1/pi
    assert s2p2(0.0, th) == pytest.approx(1 / math.pi, abs=1e-16)
    with pytest.raises(ZeroDivisionError):
        p2(0.0, th)
