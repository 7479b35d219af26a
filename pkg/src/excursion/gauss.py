"""Scalar Gaussian helpers shared by every bound formula.

All functions accept a float or an array and return the same shape.
"""

import math

import numpy as np
from scipy import special

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

# beyond this point the direct form of phi(a) - a*barPhi(a) loses more than two digits
_MILLS_SWITCH = 10.0


def _finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def _half_square_exp(x):
    # exp(-x^2/2) with x = h + l, h a multiple of 1/16, so h*h is exact
    h = np.trunc(x * 16.0) / 16.0
    return np.exp(-0.5 * h * h) * np.exp(-0.5 * (x - h) * (x + h))


def _upper_tail(x):
    # erfcx keeps full relative accuracy where ndtr drifts (~1e-13 near x = 37)
    t = np.abs(x)
    big = 0.5 * special.erfcx(t / math.sqrt(2.0)) * _half_square_exp(t)
    return np.where(x > 2.0, big, special.ndtr(-x))


def phi(x):
    """Standard normal density."""
    x = _finite(x)
    return _out(_half_square_exp(x) * INV_SQRT_2PI)


def Phi(x):
    """Standard normal distribution function."""
    return _out(_upper_tail(-_finite(x)))


def barPhi(x):
    """Upper tail 1 - Phi(x); relative accuracy is kept down to underflow
    (x ~ 37.5)."""
    return _out(_upper_tail(_finite(x)))


def _upper_partial_mean(a):
    # E(Z - a)^+ = phi(a) - a*barPhi(a) for Z ~ N(0, 1)
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    small = a <= _MILLS_SWITCH
    x = a[small]
    out[small] = np.exp(-0.5 * x * x) * INV_SQRT_2PI - x * special.ndtr(-x)
    big = ~small
    if np.any(big):
        x = a[big]
        inv2 = 1.0 / (x * x)
        # 1 - a*M(a) = sum_{k>=1} (-1)^(k+1) (2k-1)!! / a^(2k), asymptotic
        term = inv2.copy()
        total = term.copy()
        for k in range(2, 40):
            nxt = -term * (2 * k - 1) * inv2
            if np.all(np.abs(nxt) < 1e-17 * np.abs(total)):
                break
            term = nxt
            total += term
        out[big] = np.exp(-0.5 * x * x) * INV_SQRT_2PI * total
    return out


def neg_part_mean(m, s):
    """E(Z^-) for Z ~ N(m, s^2), i.e. s*phi(m/s) - m*Phi(-m/s).

    With m = -u and s = c this is the bracket c*phi(u/c) + u*Phi(u/c) that
    multiplies the area term of the record bound.
    """
    m = _finite(m, "m")
    s = _finite(s, "s")
    if np.any(s <= 0):
        raise ValueError("standard deviation s must be > 0")
    return _out(s * _upper_partial_mean(m / s))


def upper_partial_mean(a):
    """E(Z - a)^+ for a standard normal Z, stable for large positive a."""
    return _out(_upper_partial_mean(_finite(a, "a")))


def half_plane_integral(m):
    """Closed form of the integral of phi(x)*Phi(m*x) over x > 0."""
    m = _finite(m, "m")
    return _out(0.25 + np.arctan(m) / (2.0 * math.pi))


def wedge_expectation(theta):
    """E(X^+ 1{cos(theta) X + sin(theta) Y <= 0}) for X, Y iid N(0, 1)."""
    theta = _finite(theta, "theta")
    if np.any((theta <= 0) | (theta > math.pi)):
        raise ValueError("theta must lie in (0, pi]")
    return _out((1.0 - np.cos(theta)) / (2.0 * SQRT_2PI))


def edge3d_term(theta1, theta2, theta3):
    """Per-unit-length edge coefficient of the 3D record bound.

    Equals E(X_eta^+ 1{X_alpha <= 0} 1{X_beta <= 0}) where
    X_alpha = cos(theta1) X_eta + sin(theta1) X_a,
    X_beta = cos(theta2) X_eta + sin(theta2) X_b and
    cov(X_a, X_b) = cos(theta3), X_eta independent of (X_a, X_b).
    """
    t1 = _finite(theta1, "theta1")
    t2 = _finite(theta2, "theta2")
    t3 = _finite(theta3, "theta3")
    for t, name in ((t1, "theta1"), (t2, "theta2"), (t3, "theta3")):
        if np.any((t <= 0) | (t >= math.pi)):
            raise ValueError(f"{name} must lie in (0, pi)")
    s3 = np.sin(t3)
    if np.any(s3 == 0):
        raise ValueError("degenerate dihedral: sin(theta3) == 0")
    c1, c2, c3 = np.cos(t1), np.cos(t2), np.cos(t3)
    s1, s2 = np.sin(t1), np.sin(t2)
    m2 = (-s2 * c1 / s1 + c3 * c2) / s3
    m1 = (-s1 * c2 / s2 + c3 * c1) / s3
    val = (
        (math.pi - t3) / (2.0 * math.pi) ** 1.5
        - c2 * INV_SQRT_2PI * (0.25 + np.arctan(m2) / (2.0 * math.pi))
        - c1 * INV_SQRT_2PI * (0.25 + np.arctan(m1) / (2.0 * math.pi))
    )
    val = np.where((val < 0) & (val > -1e-15), 0.0, val)
    return _out(val)


def ugrid(values):
    """Validate a level grid: finite, strictly increasing."""
    arr = _finite(values, "u grid").reshape(-1)
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ValueError("u grid must be strictly increasing")
    return arr
