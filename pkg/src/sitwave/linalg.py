"""3x3 spectral helpers built on a bracketed cubic solver."""

from __future__ import annotations

import cmath
import itertools
import math

import numpy as np


def polyval(coeffs, x):
    """Horner evaluation, highest degree first."""
    acc = 0.0 * x
    for c in coeffs:
        acc = acc * x + c
    return acc


def _derivative(coeffs):
    n = len(coeffs) - 1
    return [c * (n - i) for i, c in enumerate(coeffs[:-1])]


def bisect_newton(f, df, lo: float, hi: float, tol: float = 1e-15, maxiter: int = 400) -> float:
    """Root of ``f`` on a sign-changing bracket, safeguarded Newton.

    Newton steps that leave the current bracket (or stall) are replaced by
    bisection, and the bracket is updated after every evaluation.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    x = 0.5 * (lo + hi)
    fx = f(x)
    for _ in range(maxiter):
        if fx == 0:
            return x
        # compare signs, products of tiny values underflow
        if (fx > 0) != (flo > 0):
            hi = x
        else:
            lo, flo = x, fx
        d = df(x)
        nx = x - fx / d if d != 0 else lo - 1.0
        if not lo < nx < hi or abs(nx - x) > 0.5 * (hi - lo):
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= tol * max(1.0, abs(x)) or hi - lo <= tol * max(1.0, abs(x)):
            return nx
        x, fx = nx, f(nx)
    return x


def cubic_real_root(coeffs) -> float:
    """One real root of a monic-or-not cubic ``c0 x^3 + c1 x^2 + c2 x + c3``."""
    c0, c1, c2, c3 = (float(c) for c in coeffs)
    if c0 == 0:
        raise ValueError("leading coefficient is zero")
    b, c, d = c1 / c0, c2 / c0, c3 / c0
    # Cauchy bound on root magnitude
    bound = 1.0 + max(abs(b), abs(c), abs(d))
    mon = [1.0, b, c, d]
    dmon = _derivative(mon)
    return bisect_newton(lambda x: polyval(mon, x), lambda x: polyval(dmon, x), -bound, bound)


def cubic_roots(coeffs) -> list[complex]:
    """All three roots, real one by bracketing, the pair from deflation."""
    c0, c1, c2, c3 = (float(c) for c in coeffs)
    mon = [1.0, c1 / c0, c2 / c0, c3 / c0]
    dmon = _derivative(mon)
    x0 = cubic_real_root(mon)
    # synthetic division by (x - x0)
    q1 = mon[1] + x0
    q2 = mon[2] + x0 * q1
    disc = q1 * q1 - 4 * q2
    sq = cmath.sqrt(disc)
    # numerically stable quadratic
    if q1 >= 0:
        t = -0.5 * (q1 + sq)
    else:
        t = -0.5 * (q1 - sq)
    if t == 0:
        pair = [0j, 0j]
    else:
        pair = [t, q2 / t]
    roots = [complex(x0)]
    for z in pair:
        z = complex(z)
        fz = polyval(mon, z)
        for _ in range(8):
            d = polyval(dmon, z)
            if d == 0 or fz == 0:
                break
            cand = z - fz / d
            fc = polyval(mon, cand)
            # near repeated roots Newton can wander; keep only improving steps
            if abs(fc) >= abs(fz):
                break
            z, fz = cand, fc
        if disc >= 0:
            z = complex(z.real, 0.0)
        roots.append(z)
    return _merge_clusters(mon, roots)


def _rounding_bound(coeffs, x: float) -> float:
    """Size of the evaluation error of a polynomial at ``x``."""
    return 32 * 2.2e-16 * sum(abs(c) * abs(x) ** (len(coeffs) - 1 - i) for i, c in enumerate(coeffs))


def _merge_clusters(mon, roots, rel: float = 1e-4) -> list[complex]:
    """Snap clustered roots onto exact multiple roots.

    Bracketing and deflation only resolve a k-fold root to about eps^(1/k).
    A triple root of the monic cubic is -b/3 and a double root is a simple
    root of the derivative; either is accepted when the polynomial and its
    derivative vanish there to rounding accuracy.
    """
    scale = 1.0 + max(abs(z) for z in roots)
    close = [[abs(a - b) <= rel * scale for b in roots] for a in roots]
    dmon = _derivative(mon)
    if all(all(row) for row in close):
        x = -mon[1] / 3
        if abs(polyval(mon, x)) <= _rounding_bound(mon, x) and \
                abs(polyval(dmon, x)) <= _rounding_bound(dmon, x) * scale:
            return [complex(x)] * 3
    for i, j in ((0, 1), (0, 2), (1, 2)):
        if not close[i][j]:
            continue
        # real double root: nearest real root of the derivative
        a, b, c = dmon
        disc = b * b - 4 * a * c
        if disc < 0:
            continue
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        cands = [q / a] + ([c / q] if q != 0 else [])
        mid = 0.5 * (roots[i] + roots[j])
        x = min(cands, key=lambda r: abs(r - mid))
        if abs(x - mid) <= rel * scale and abs(polyval(mon, x)) <= _rounding_bound(mon, x) * scale:
            out = list(roots)
            out[i] = out[j] = complex(x)
            return out
    return roots


def char_poly3(m) -> list[float]:
    """Coefficients of det(x I - m) for a 3x3 matrix."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    minors = (
        m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    )
    det = (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    return [1.0, -tr, minors, -det]


def eigenvalues3(m) -> list[complex]:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    if not np.any(np.tril(m, -1)) or not np.any(np.triu(m, 1)):
        return [complex(v) for v in np.diag(m)]
    # scale to unit norm so the bracketing tolerances are relative
    scale = float(np.max(np.abs(m)))
    if scale == 0:
        return [0j, 0j, 0j]
    return [z * scale for z in cubic_roots(char_poly3(m / scale))]


def stability_modulus(m) -> float:
    """Largest real part among the eigenvalues of a 3x3 matrix."""
    return max(z.real for z in eigenvalues3(m))


def is_irreducible(m) -> bool:
    """Every nonempty proper index subset I has some m[i, j] != 0, i in I, j outside I."""
    m = np.asarray(m)
    n = m.shape[0]
    idx = range(n)
    for size in range(1, n):
        for I in itertools.combinations(idx, size):
            J = [j for j in idx if j not in I]
            if not any(m[i, j] != 0 for i in I for j in J):
                return False
    return True


def is_metzler(m) -> bool:
    """Off-diagonal entries non-negative (cooperative system)."""
    m = np.asarray(m)
    off = m[~np.eye(m.shape[0], dtype=bool)]
    return bool(np.all(off >= 0))


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-12, maxiter: int = 500):
    """Minimize a unimodal function on [lo, hi]; returns (x, f(x))."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= tol * (abs(c) + abs(d)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)
