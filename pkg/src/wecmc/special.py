"""Jacobi elliptic functions, complete elliptic integral K(k), complex error function."""

from __future__ import annotations

import numpy as np

from .errors import OutOfValidatedRange, PeriodDiverges

AGM_TOL = 1e-15
ERF_MAX_ABS = 12.0
_MAX_LADDER = 64


def agm(a, b):
    """Arithmetic-geometric mean, elementwise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    a, b = a.copy(), b.copy()
    for _ in range(_MAX_LADDER):
        if np.all(np.abs(a - b) <= AGM_TOL * np.maximum(np.abs(a), 1e-300)):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    out = 0.5 * (a + b)
    return float(out) if out.ndim == 0 else out


def _check_modulus(k):
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)) or np.any(k < 0) or np.any(k > 1):
        raise ValueError("elliptic modulus must satisfy 0 <= k <= 1")
    return k


def complementary(k):
    k = np.asarray(k, dtype=float)
    return np.sqrt((1.0 - k) * (1.0 + k))


def complete_elliptic_K(k) -> float:
    """Quarter period K(k) = pi / (2 agm(1, k'))."""
    k = float(_check_modulus(k))
    if k == 1.0:
        raise PeriodDiverges("K(k) diverges at k = 1")
    return float(np.pi / (2.0 * agm(1.0, float(complementary(k)))))


def jacobi(u, k):
    """(sn, cn, dn) for real u and 0 <= k <= 1 via the AGM / descending Landen ladder.

    The ladder runs until c_n = (a_{n-1} - b_{n-1})/2 drops below the AGM
    tolerance, then phi_N = 2^N a_N u is carried back down with
    phi_{n-1} = (phi_n + asin(c_n/a_n sin phi_n)) / 2.
    """
    u = np.asarray(u, dtype=float)
    k = _check_modulus(k)
    if not np.all(np.isfinite(u)):
        raise ValueError("argument must be finite")
    u, k = np.broadcast_arrays(u, k)
    scalar = u.ndim == 0
    u = np.atleast_1d(u).astype(float)
    k = np.atleast_1d(k).astype(float)

    hyper = k == 1.0
    kk = np.where(hyper, 0.0, k)
    a = np.ones_like(u)
    b = complementary(kk)
    ratios = []
    for _ in range(_MAX_LADDER):
        c = 0.5 * (a - b)
        if np.all(np.abs(c) < AGM_TOL):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        ratios.append(c / a)
    phi = (2.0 ** len(ratios)) * a * u
    for r in reversed(ratios):
        phi = 0.5 * (phi + np.arcsin(np.clip(r * np.sin(phi), -1.0, 1.0)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(complementary(kk) ** 2 + (kk * cn) ** 2)

    if np.any(hyper):
        uh = u[hyper]
        sn[hyper] = np.tanh(uh)
        sech = 1.0 / np.cosh(uh)
        cn[hyper] = sech
        dn[hyper] = sech
    if scalar:
        return float(sn[0]), float(cn[0]), float(dn[0])
    return sn, cn, dn


def jacobi_tn(u, k):
    sn, cn, _ = jacobi(u, k)
    return np.asarray(sn) / np.asarray(cn)


def jacobi_complex(u, k):
    """(sn, cn, dn) at complex argument, real modulus, via the imaginary-argument addition formulas."""
    u = np.asarray(u, dtype=complex)
    k = float(_check_modulus(k))
    x, y = u.real, u.imag
    s, c, d = (np.asarray(v) for v in jacobi(x, k))
    s1, c1, d1 = (np.asarray(v) for v in jacobi(y, float(complementary(k))))
    m = k * k
    den = c1 ** 2 + m * s ** 2 * s1 ** 2
    sn = (s * d1 + 1j * c * d * s1 * c1) / den
    cn = (c * c1 - 1j * s * d * s1 * d1) / den
    dn = (d * c1 * d1 - 1j * m * s * c * s1) / den
    return sn, cn, dn


def _erf_series(w):
    total = w.copy()
    term = w.copy()
    w2 = w * w
    for n in range(1, 2000):
        term = term * (-w2) / n
        add = term / (2 * n + 1)
        total = total + add
        if np.all(np.abs(add) <= 1e-17 * np.abs(total)):
            break
    return 2.0 / np.sqrt(np.pi) * total


def _erfc_cf(w):
    """erfc for Re w > 0 from the Laplace continued fraction (modified Lentz)."""
    tiny = 1e-300
    f = w.copy()
    C = f.copy()
    D = np.zeros_like(w)
    for n in range(1, 50000):
        an = 0.5 * n
        D = w + an * D
        D = np.where(np.abs(D) < tiny, tiny, D)
        C = w + an / C
        C = np.where(np.abs(C) < tiny, tiny, C)
        D = 1.0 / D
        delta = C * D
        f = f * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    return np.exp(-w * w) / (np.sqrt(np.pi) * f)


def erf_complex(w):
    """Entire error function for |w| <= 12.

    Maclaurin series near the origin and in the strip |Re w| < 2 (where the
    series suffers at most e^8 cancellation); Laplace continued fraction for
    erfc elsewhere. Odd symmetry is imposed by evaluating at |Re w|.
    """
    w = np.asarray(w, dtype=complex)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    if not np.all(np.isfinite(w)):
        raise ValueError("argument must be finite")
    if np.any(np.abs(w) > ERF_MAX_ABS):
        raise OutOfValidatedRange(f"erf_complex validated only for |w| <= {ERF_MAX_ABS}")
    sign = np.where(w.real < 0, -1.0, 1.0)
    v = w * sign
    out = np.empty_like(v)
    use_series = (np.abs(v) <= 3.0) | (v.real < 2.0)
    if np.any(use_series):
        out[use_series] = _erf_series(v[use_series])
    if np.any(~use_series):
        out[~use_series] = 1.0 - _erfc_cf(v[~use_series])
    out = out * sign
    return complex(out[0]) if scalar else out
