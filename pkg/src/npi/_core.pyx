# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Typed inner loops for the form functional accumulation.

Mirrors the numpy reference implementations in npi._backend; the
dispatcher there prefers these when the extension is importable.
"""

from libc.math cimport fabs, pow


def power_diff_sum(const double[::1] w, const double[::1] ua,
                   const double[::1] ub, double p):
    """sum_i w_i |ub_i - ua_i|^p."""
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double s = 0.0
    cdef double d
    if ua.shape[0] != n or ub.shape[0] != n:
        raise ValueError("length mismatch")
    if p == 2.0:
        for i in range(n):
            d = ub[i] - ua[i]
            s += w[i] * d * d
    elif p == 1.0:
        for i in range(n):
            s += w[i] * fabs(ub[i] - ua[i])
    elif p == 3.0:
        for i in range(n):
            d = fabs(ub[i] - ua[i])
            s += w[i] * d * d * d
    else:
        for i in range(n):
            d = fabs(ub[i] - ua[i])
            if d > 0.0:
                s += w[i] * pow(d, p)
    return s


def power_sum(const double[::1] w, const double[::1] ua, double p):
    """sum_i w_i |ua_i|^p."""
    cdef Py_ssize_t i, n = w.shape[0]
    cdef double s = 0.0
    cdef double d
    if ua.shape[0] != n:
        raise ValueError("length mismatch")
    if p == 2.0:
        for i in range(n):
            s += w[i] * ua[i] * ua[i]
    elif p == 1.0:
        for i in range(n):
            s += w[i] * fabs(ua[i])
    elif p == 3.0:
        for i in range(n):
            d = fabs(ua[i])
            s += w[i] * d * d * d
    else:
        for i in range(n):
            d = fabs(ua[i])
            if d > 0.0:
                s += w[i] * pow(d, p)
    return s
