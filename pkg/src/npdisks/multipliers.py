"""Scalar Fourier multipliers of the diagonalised single layer and NP operators.

All functions are vectorised over ``s`` and take the half-angle ``theta0``.
Large |s| is handled in factored exponential form so nothing overflows.
"""

from __future__ import annotations

import math

import numpy as np

_SMALL = 1e-4


def _sinh_minus_id(y):
    """sinh(y) - y without cancellation for small |y|."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < 0.5
    ys = y[small]
    y2 = ys * ys
    # Taylor series to y^15, error < 1e-17 relative for |y| < 0.5
    term = ys * y2 / 6.0
    acc = term.copy()
    for k in range(2, 8):
        term = term * y2 / ((2 * k) * (2 * k + 1))
        acc += term
    out[small] = acc
    yl = y[~small]
    out[~small] = np.sinh(yl) - yl
    return out


def p1(s, theta0: float):
    """Weight of the odd family: sinh(s th0) sinh(s(pi - th0)) / (s sinh(pi s))."""
    x = np.abs(np.asarray(s, dtype=float))
    a, b = theta0, math.pi - theta0
    out = np.empty_like(x)
    small = x < _SMALL
    xs = x[small]
    out[small] = (a * b / math.pi) * (1.0 - a * b * xs**2 / 3.0)
    xl = x[~small]
    out[~small] = (
        np.expm1(-2 * a * xl) * np.expm1(-2 * b * xl)
        / (-2.0 * xl * np.expm1(-2 * math.pi * xl))
    )
    return out[()] if out.ndim == 0 else out


def p2(s, theta0: float):
    """Weight of the even family: cosh(s th0) cosh(s(pi - th0)) / (s sinh(pi s)).

    Has a double pole at s = 0 where s^2 p2(s) -> 1/pi.
    """
    s = np.asarray(s, dtype=float)
    x = np.abs(s)
    if np.any(x == 0):
        raise ZeroDivisionError("p2 has a pole at s = 0")
    a, b = theta0, math.pi - theta0
    out = (
        (1.0 + np.exp(-2 * a * x)) * (1.0 + np.exp(-2 * b * x))
        / (-2.0 * x * np.expm1(-2 * math.pi * x))
    )
    return out[()] if out.ndim == 0 else out


def s2p2(s, theta0: float):
    """s^2 p2(s), analytic through s = 0 with value 1/pi there."""
    x = np.abs(np.asarray(s, dtype=float))
    a, b = theta0, math.pi - theta0
    out = np.empty_like(x)
    small = x < _SMALL
    xs = x[small]
    out[small] = (1.0 / math.pi) * (1.0 + (a * a + b * b - a * b) * xs**2 / 3.0)
    xl = x[~small]
    out[~small] = (
        xl * (1.0 + np.exp(-2 * a * xl)) * (1.0 + np.exp(-2 * b * xl))
        / (-2.0 * np.expm1(-2 * math.pi * xl))
    )
    return out[()] if out.ndim == 0 else out


def bound(theta0: float) -> float:
    return 0.5 - theta0 / math.pi


def eta(s, theta0: float):
    """NP multiplier (1/2) sinh(s(pi - 2 th0)) / sinh(pi s); even, eta(0) = b."""
    x = np.abs(np.asarray(s, dtype=float))
    c = math.pi - 2 * theta0
    b = bound(theta0)
    out = np.empty_like(x)
    small = x < _SMALL
    xs = x[small]
    out[small] = b * (1.0 - (2 * theta0 * (math.pi - theta0) / 3.0) * xs**2)
    xl = x[~small]
    out[~small] = 0.5 * np.exp(-2 * theta0 * xl) * np.expm1(-2 * c * xl) / np.expm1(
        -2 * math.pi * xl
    )
    return out[()] if out.ndim == 0 else out


def log_eta(s, theta0: float):
    """log eta(s), finite for all s (no underflow at large |s|)."""
    x = np.abs(np.asarray(s, dtype=float))
    c = math.pi - 2 * theta0
    out = np.empty_like(x)
    small = x < _SMALL
    out[small] = np.log(eta(x[small], theta0))
    xl = x[~small]
    out[~small] = (
        math.log(0.5) - 2 * theta0 * xl
        + np.log(np.expm1(-2 * c * xl) / np.expm1(-2 * math.pi * xl))
    )
    return out[()] if out.ndim == 0 else out


def eta_gap(s, theta0: float):
    """b - eta(s) computed without cancellation near s = 0."""
    x = np.abs(np.asarray(s, dtype=float))
    c = math.pi - 2 * theta0
    out = np.empty_like(x)
    mid = x < 5.0
    xm = x[mid]
    # c sinh(pi x) - pi sinh(c x) = c f(pi x) - pi f(c x),  f(y) = sinh y - y
    num = c * _sinh_minus_id(math.pi * xm) - math.pi * _sinh_minus_id(c * xm)
    with np.errstate(invalid="ignore"):
        out[mid] = np.where(xm > 0, num / (2 * math.pi * np.sinh(math.pi * xm)), 0.0)
    out[~mid] = bound(theta0) - eta(x[~mid], theta0)
    return out[()] if out.ndim == 0 else out


def eta_prime(s, theta0: float):
    """Closed-form derivative of :func:`eta`; odd, eta'(0) = 0, negative for s > 0."""
    s = np.asarray(s, dtype=float)
    x = np.abs(s)
    A, B = theta0, math.pi - theta0
    c = math.pi - 2 * theta0
    out = np.empty_like(x)
    mid = x < 5.0
    xm = x[mid]
    # eta' = (1/2) [B sinh(2Ax) - A sinh(2Bx)] / sinh^2(pi x); linear terms cancel
    num = B * _sinh_minus_id(2 * A * xm) - A * _sinh_minus_id(2 * B * xm)
    with np.errstate(invalid="ignore"):
        out[mid] = np.where(xm > 0, 0.5 * num / np.sinh(math.pi * xm) ** 2, 0.0)
    xl = x[~mid]
    ec = np.exp(-2 * c * xl)
    ep = np.exp(-2 * math.pi * xl)
    out[~mid] = eta(xl, theta0) * (
        -2 * theta0 + 2 * c * ec / (1 - ec) - 2 * math.pi * ep / (1 - ep)
    )
    out = np.sign(s) * out
    return out[()] if out.ndim == 0 else out


def eta_inverse(t, theta0: float, *, gap=None):
    """Unique s >= 0 with eta(s) = t for 0 < t <= b.

    ``gap`` may be given instead of ``t`` as ``b - t`` to keep full relative
    accuracy near the top of the spectrum.  Bisection brackets the root, then
    Newton steps finish it (on log eta for small t, on the gap near b).
    """
    b = bound(theta0)
    if gap is not None:
        gap = np.asarray(gap, dtype=float)
        t = b - gap
    else:
        t = np.asarray(t, dtype=float)
        gap = b - t
    if np.any(~np.isfinite(t)) or np.any(t <= 0) or np.any(gap < 0):
        raise ValueError("eta_inverse requires 0 < t <= b")
    scalar = t.ndim == 0
    t = np.atleast_1d(t).astype(float)
    gap = np.atleast_1d(gap).astype(float)
    logt = np.log(t)
    s_max = 60.0 / theta0

    lo = np.zeros_like(t)
    hi = np.full_like(t, s_max)
    # asymptotic fallback beyond s_max: eta ~ (1/2) e^{-2 th0 s}
    beyond = log_eta(s_max, theta0) > logt
    out = np.empty_like(t)
    out[beyond] = (math.log(0.5) - logt[beyond]) / (2 * theta0)
    work = ~beyond & (gap > 0)
    out[gap == 0] = 0.0

    if np.any(work):
        lo_w, hi_w = lo[work], hi[work]
        tw, gw, lw = t[work], gap[work], logt[work]
        near_top = tw > 0.5 * b
        # bisection until the bracket is below 1e-3 of the local scale
        for _ in range(200):
            mid = 0.5 * (lo_w + hi_w)
            f_mid = np.where(near_top, eta_gap(mid, theta0) - gw, lw - log_eta(mid, theta0))
            # both residuals increase with s
            upper = f_mid > 0
            hi_w = np.where(upper, mid, hi_w)
            lo_w = np.where(upper, lo_w, mid)
            if np.all(hi_w - lo_w <= 1e-3 * np.maximum(hi_w, 1e-300) + 1e-300):
                break
        sw = 0.5 * (lo_w + hi_w)
        for _ in range(60):
            de = -eta_prime(sw, theta0)
            f = np.where(near_top, eta_gap(sw, theta0) - gw, lw - log_eta(sw, theta0))
            fp = np.where(near_top, de, de / np.exp(log_eta(sw, theta0)))
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(fp > 0, f / fp, 0.0)
            new = np.clip(sw - step, lo_w, hi_w)
            # keep the bracket valid for robustness
            f_new = np.where(near_top, eta_gap(new, theta0) - gw, lw - log_eta(new, theta0))
            hi_w = np.where(f_new > 0, new, hi_w)
            lo_w = np.where(f_new > 0, lo_w, new)
            done = np.abs(new - sw) <= 4e-16 * np.maximum(new, 1e-300)
            sw = new
            if np.all(done):
                break
        out[work] = sw
    return out[0] if scalar else out
