# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled radial stencil kernels (same contracts as ``_kernels_py``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


cdef inline double _ipow(double a, int k) nogil:
    cdef double r = 1.0
    while k:
        if k & 1:
            r *= a
        a *= a
        k >>= 1
    return r


cdef inline int _int_exponent(double p):
    """p as an int when it is a small nonnegative integer, else -1."""
    if p >= 0 and p <= 64 and p == <int>p:
        return <int>p
    return -1


def dirichlet_energy(const double[::1] u, const double[::1] c):
    cdef Py_ssize_t i, m = c.shape[0]
    cdef double s = 0.0, du
    for i in range(m):
        du = u[i + 1] - u[i]
        s += c[i] * du * du
    return s


def stiffness_apply(const double[::1] u, const double[::1] c):
    cdef Py_ssize_t i, n = u.shape[0]
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef double f
    for i in range(n - 1):
        f = c[i] * (u[i + 1] - u[i])
        out[i] -= f
        out[i + 1] += f
    return out_arr


def energy_terms(const double[::1] u, const double[::1] c, const double[::1] w,
                 const double[::1] V, double p):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double kin = 0.0, pot = 0.0, crit = 0.0, mass = 0.0, du, a, wu2
    cdef int k = _int_exponent(p)
    for i in range(n - 1):
        du = u[i + 1] - u[i]
        kin += c[i] * du * du
    for i in range(n):
        a = fabs(u[i])
        wu2 = w[i] * a * a
        mass += wu2
        pot += wu2 * V[i]
        crit += w[i] * (_ipow(a, k) if k >= 0 else pow(a, p))
    return kin, pot, crit, mass


def energy_gradient(const double[::1] u, const double[::1] c, const double[::1] w,
                    const double[::1] V, double mu, double p):
    cdef Py_ssize_t i, n = u.shape[0]
    g_arr = np.empty(n)
    cdef double[::1] g = g_arr
    cdef double left, right, a
    cdef int k = _int_exponent(p - 2.0)
    for i in range(n - 1):
        left = c[i - 1] * (u[i] - u[i - 1]) if i > 0 else 0.0
        right = c[i] * (u[i] - u[i + 1])
        a = fabs(u[i])
        g[i] = (left + right) / w[i] + V[i] * u[i] - mu * (_ipow(a, k) if k >= 0 else pow(a, p - 2.0)) * u[i]
    g[n - 1] = 0.0
    return g_arr
