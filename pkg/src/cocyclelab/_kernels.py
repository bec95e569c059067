"""Compiled inner loops. Everything here works on plain float arrays."""
from __future__ import annotations

import math

import numba
import numpy as np

_HALF_PI = 0.5 * math.pi


@numba.njit(cache=True, nogil=True)
def inverse_branch_orbit(digits, tail, b):
    """Orbit x_k with x_k = (d_k + x_{k+1}) / b, built backwards from ``tail``.

    Every entry satisfies b*x_k mod 1 == x_{k+1} up to one rounding, so the
    array is a faithful orbit of the expanding map even when b is even.
    """
    n = digits.size
    out = np.empty(n)
    cur = tail
    for k in range(n - 1, -1, -1):
        cur = (digits[k] + cur) / b
        out[k] = cur
    return out


@numba.njit(cache=True, nogil=True)
def propagate(c, p, q):
    """Push the unit vector (p, q) through the matrices [[0,1],[-1,c_k]].

    Returns the accumulated log stretch and the final unit vector.
    """
    total = 0.0
    for k in range(c.size):
        p, q = q, -p + c[k] * q
        nrm = math.sqrt(p * p + q * q)
        total += math.log(nrm)
        p /= nrm
        q /= nrm
    return total, p, q


@numba.njit(cache=True, nogil=True)
def log_spectral_norm(c):
    """log of the operator 2-norm of the product of [[0,1],[-1,c_k]] (last factor leftmost)."""
    s1, _, _ = propagate(c, 1.0, 0.0)
    s2, _, _ = propagate(c, 0.0, 1.0)
    smax = max(s1, s2)
    smin = min(s1, s2)
    # columns have norms e^{s1}, e^{s2} and the determinant is 1
    f = 1.0 + math.exp(2.0 * (smin - smax))
    disc = f * f - 4.0 * math.exp(-4.0 * smax)
    if disc < 0.0:
        disc = 0.0
    return smax + 0.5 * math.log(0.5 * (f + math.sqrt(disc))), s1, s2


@numba.njit(cache=True, nogil=True)
def angle_trace(c, y0):
    """Angles y_0..y_n and per-step log stretches of the unit vectors at angle y_k."""
    n = c.size
    ys = np.empty(n + 1)
    st = np.empty(n)
    y = y0
    for k in range(n):
        ys[k] = y
        s = math.sin(y)
        co = math.cos(y)
        p = s
        q = c[k] * s - co
        st[k] = 0.5 * math.log(p * p + q * q)
        y = math.atan2(q, p)
        # canonical representative in [-pi/2, pi/2)
        if y >= _HALF_PI:
            y -= math.pi
        elif y < -_HALF_PI:
            y += math.pi
        if y >= _HALF_PI:
            y = -_HALF_PI
    ys[n] = y
    return ys, st
