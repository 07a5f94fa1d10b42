"""Jacobi elliptic functions and the complete elliptic integral K(m).

Parameter convention m = k^2 (Abramowitz and Stegun).  The argument is
folded into [0, K] using the quarter-period symmetries before the
descending arithmetic-geometric mean recursion.
"""

from __future__ import annotations

import math

import numpy as np

_MAX_AGM = 40


class EllipticDomainError(ValueError):
    pass


def _check_m(m):
    m = float(m)
    if not (0.0 <= m < 1.0) or not math.isfinite(m):
        raise EllipticDomainError(f"parameter m must satisfy 0 <= m < 1, got {m}")
    return m


def agm(a, b):
    a, b = float(a), float(b)
    for _ in range(_MAX_AGM):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def complete_K(m) -> float:
    """K(m) = pi / (2 AGM(1, sqrt(1-m)))."""
    m = _check_m(m)
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)))


def _am_quarter(u, m):
    """sn, cn, dn for u in [0, K] by the descending AGM recursion."""
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > 1e-17 and len(a) < _MAX_AGM:
        an, bn = a[-1], b
        a.append(0.5 * (an + bn))
        c.append(0.5 * (an - bn))
        b = math.sqrt(an * bn)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c[j] / a[j] * np.sin(phi), -1.0, 1.0)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - m * sn * sn)
    return sn, cn, dn


def jacobi_sn_cn_dn(u, m):
    """(sn, cn, dn) of u with parameter m, for scalar or array u."""
    m = _check_m(m)
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise EllipticDomainError("argument must be finite")
    K = complete_K(m)
    # fold u into [0, 4K), then into [0, K] with sign bookkeeping
    w = np.mod(u_arr, 4.0 * K)
    half = w >= 2.0 * K
    w = np.where(half, w - 2.0 * K, w)          # sn, cn flip sign over 2K
    upper = w > K
    w = np.where(upper, 2.0 * K - w, w)          # sn even, cn odd about K
    sn, cn, dn = _am_quarter(w, m)
    sgn_half = np.where(half, -1.0, 1.0)
    sn = sgn_half * sn
    cn = sgn_half * np.where(upper, -cn, cn)
    if np.ndim(u) == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def sn(u, m):
    return jacobi_sn_cn_dn(u, m)[0]


def cn(u, m):
    return jacobi_sn_cn_dn(u, m)[1]


def dn(u, m):
    return jacobi_sn_cn_dn(u, m)[2]


def sd(u, m):
    """sd(u|m) = sn/dn."""
    s, _, d = jacobi_sn_cn_dn(u, m)
    return s / d if np.ndim(s) == 0 else np.asarray(s) / np.asarray(d)


def sd_derivative(u, m):
    """d sd/du = cn / dn^2, from the AGM values."""
    _, c, d = jacobi_sn_cn_dn(u, m)
    return c / (d * d) if np.ndim(c) == 0 else np.asarray(c) / np.asarray(d) ** 2


def sd_period(m) -> float:
    return 4.0 * complete_K(m)
