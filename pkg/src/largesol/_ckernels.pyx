# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: tridiagonal solve, Sturm count, lower-branch Lambert W."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs

cnp.import_array()

cdef double _EPS = 2.220446049250313e-16
cdef double _E = 2.718281828459045


def thomas(sub, diag, sup, rhs):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(sub, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(diag, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.ascontiguousarray(sup, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cp = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dp = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.empty(n)
    cdef double piv = b[0]
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
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def sturm_count(off, diag):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e = np.ascontiguousarray(off, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(diag, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i
    cdef long count = 0
    cdef double piv = b[0]
    for i in range(n):
        if i > 0:
            piv = b[i] - e[i - 1] * e[i - 1] / piv
        if piv == 0.0:
            piv = -_EPS * (fabs(b[i]) + 1e-300)
        if piv < 0.0:
            count += 1
    return count


cdef double _wm1_guess(double s):
    cdef double p, l1, l2
    if s < -0.25:
        p = 2.0 * (1.0 + _E * s)
        p = -sqrt(p if p > 0.0 else 0.0)
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    l1 = log(-s)
    l2 = log(-l1)
    return l1 - l2 + l2 / l1


cdef double _wm1(double s):
    cdef double w = _wm1_guess(s)
    cdef double hi = -1.0
    cdef double lo = w - 1.0 if w - 1.0 < -2.0 else -2.0
    cdef double ew, f, w1, wn
    cdef int it
    while lo * exp(lo) - s <= 0.0:
        lo *= 2.0
    if not (lo < w < hi):
        w = 0.5 * (lo + hi)
    for it in range(200):
        ew = exp(w)
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
        if fabs(wn - w) <= 4.0 * _EPS * fabs(wn) or hi - lo <= 4.0 * _EPS * fabs(lo):
            return wn
        w = wn
    return w


def wm1_scalar(double s):
    return _wm1(s)


def wm1_array(s):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(s, dtype=np.float64).ravel()
    cdef Py_ssize_t n = flat.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _wm1(flat[i])
    return out.reshape(np.shape(s))
