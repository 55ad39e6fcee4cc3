# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled elementwise kernels. Same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, exp, log1p, log

cnp.import_array()


def soft_threshold(z, double t):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double a
    for i in range(n):
        a = fabs(zv[i]) - t
        if a <= 0.0:
            ov[i] = 0.0
        elif zv[i] > 0.0:
            ov[i] = a
        else:
            ov[i] = -a
    return out


def project_simplex(z):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], i
    cdef double[::1] u = np.sort(zv)[::-1].copy()
    cdef double css = 0.0, theta = 0.0, v
    for i in range(n):
        css += u[i]
        v = (css - 1.0) / (i + 1)
        if u[i] - v > 0.0:
            theta = v
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    for i in range(n):
        v = zv[i] - theta
        ov[i] = v if v > 0.0 else 0.0
    return out


def logistic_terms(u, b):
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = uv.shape[0], i
    s = np.empty(m, dtype=np.float64)
    cdef double[::1] sv = s
    cdef double t, e, loss = 0.0
    for i in range(m):
        t = -bv[i] * uv[i]
        if t >= 0.0:
            e = exp(-t)
            loss += t + log1p(e)
            sv[i] = 1.0 / (1.0 + e)
        else:
            e = exp(t)
            loss += log1p(e)
            sv[i] = e / (1.0 + e)
    return loss, s


def student_t_terms(u, double nu):
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t m = uv.shape[0], i
    d1 = np.empty(m, dtype=np.float64)
    d2 = np.empty(m, dtype=np.float64)
    cdef double[::1] d1v = d1
    cdef double[::1] d2v = d2
    cdef double x2, den, val = 0.0
    for i in range(m):
        x2 = uv[i] * uv[i]
        den = nu + x2
        val += log1p(x2 / nu)
        d1v[i] = 2.0 * uv[i] / den
        d2v[i] = 2.0 * (nu - x2) / (den * den)
    return val, d1, d2
