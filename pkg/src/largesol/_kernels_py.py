"""Pure-Python reference kernels.

These mirror ``_ckernels.pyx`` line for line and are used when the compiled
extension is unavailable (or when ``LARGESOL_PURE_PYTHON=1``).
"""
import math

import numpy as np

INV_E = math.exp(-1.0)
_EPS = 2.220446049250313e-16


def thomas(sub, diag, sup, rhs):
    """Solve a tridiagonal system without pivoting.

    ``sub[i]`` couples row ``i`` to ``i-1`` (``sub[0]`` unused) and ``sup[i]``
    couples row ``i`` to ``i+1`` (``sup[-1]`` unused).
    """
    a = np.asarray(sub, dtype=float).tolist()
    b = np.asarray(diag, dtype=float).tolist()
    c = np.asarray(sup, dtype=float).tolist()
    d = np.asarray(rhs, dtype=float).tolist()
    n = len(b)
    cp = [0.0] * n
    dp = [0.0] * n
    piv = b[0]
    if piv == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    cp[0] = c[0] / piv if n > 1 else 0.0
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if piv == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        cp[i] = c[i] / piv if i < n - 1 else 0.0
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv
    x = [0.0] * n
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)


def sturm_count(off, diag):
    """Number of negative pivots in the LDL^T factorization of a symmetric
    tridiagonal matrix (``off[i]`` couples rows ``i`` and ``i+1``)."""
    e = np.asarray(off, dtype=float).tolist()
    b = np.asarray(diag, dtype=float).tolist()
    count = 0
    piv = b[0]
    for i in range(len(b)):
        if i > 0:
            piv = b[i] - e[i - 1] * e[i - 1] / piv
        if piv == 0.0:
            piv = -_EPS * (abs(b[i]) + 1e-300)
        if piv < 0.0:
            count += 1
    return count


def _wm1_guess(s):
    if s < -0.25:
        p = -math.sqrt(max(2.0 * (1.0 + math.e * s), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    l1 = math.log(-s)
    l2 = math.log(-l1)
    return l1 - l2 + l2 / l1


def wm1_scalar(s):
    """Lower real branch of Lambert W for -1/e < s < 0 (no argument checks).

    Halley iteration safeguarded by a bisection bracket.
    """
    w = _wm1_guess(s)
    hi = -1.0
    lo = min(w - 1.0, -2.0)
    while lo * math.exp(lo) - s <= 0.0:
        lo *= 2.0
    if not (lo < w < hi):
        w = 0.5 * (lo + hi)
    for _ in range(200):
        ew = math.exp(w)
        f = w * ew - s
        if f > 0.0:
            lo = w
        else:
            hi = w
        w1 = w + 1.0
        if w1 == 0.0:
            wn = 0.5 * (lo + hi)
        else:
            wn = w - f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
            if not (lo < wn < hi):
                wn = 0.5 * (lo + hi)
        if abs(wn - w) <= 4.0 * _EPS * abs(wn) or hi - lo <= 4.0 * _EPS * abs(lo):
            return wn
        w = wn
    return w


def wm1_array(s):
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape)
    flat_s = s.ravel()
    flat_o = out.ravel()
    for i in range(flat_s.size):
        flat_o[i] = wm1_scalar(float(flat_s[i]))
    return out
