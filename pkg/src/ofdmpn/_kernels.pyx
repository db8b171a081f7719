# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot

cnp.import_array()

cdef double ZERO_MAGNITUDE = 1e-300


cdef inline double magnitude(double re, double im) nogil:
    # Plain sqrt unless the squares would under- or overflow.
    cdef double sq = re * re + im * im
    if 1e-290 < sq < 1e290:
        return sqrt(sq)
    return hypot(re, im)


cdef inline double complex unit(double complex a, double complex keep) nogil:
    cdef double mag = magnitude(a.real, a.imag), inv
    if mag >= ZERO_MAGNITUDE:
        inv = 1.0 / mag
        return a.real * inv + 1j * (a.imag * inv)
    return keep


def unimodular_update(const double complex[::1] a, const double complex[::1] u):
    cdef Py_ssize_t n = a.shape[0], i
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    for i in range(n):
        o[i] = unit(a[i], u[i])
    return out


def block_sum(x, Py_ssize_t n_s):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef Py_ssize_t n = xv.shape[0] // n_s, b, k
    cdef double complex acc
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    for b in range(n):
        acc = 0
        for k in range(b * n_s, (b + 1) * n_s):
            acc = acc + xv[k]
        o[b] = acc
    return out


def block_repeat(x, Py_ssize_t n_s):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef Py_ssize_t n = xv.shape[0], b, k
    out = np.empty(n * n_s, dtype=np.complex128)
    cdef double complex[::1] o = out
    for b in range(n):
        for k in range(b * n_s, (b + 1) * n_s):
            o[k] = xv[b]
    return out


def ar1_recursion(eps, double rho, double scale):
    cdef const double[::1] e = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t n = e.shape[0], i
    cdef double gain = sqrt(1.0 - rho * rho) * scale
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] x = out
    if n == 0:
        return out
    x[0] = scale * e[0]
    for i in range(1, n):
        x[i] = rho * x[i - 1] + gain * e[i]
    return out


def separable_mm(b, w, c0, double tol, Py_ssize_t max_iters):
    cdef const double complex[::1] bv = np.ascontiguousarray(b, dtype=np.complex128)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    out = np.array(c0, dtype=np.complex128, copy=True)
    cdef double complex[::1] c = out
    cdef Py_ssize_t n = c.shape[0], i, it = 0
    cdef double complex cn, d
    cdef double step = np.inf, acc
    while it < max_iters:
        acc = 0.0
        for i in range(n):
            cn = unit(bv[i] + wv[i] * c[i], c[i])
            d = cn - c[i]
            acc += d.real * d.real + d.imag * d.imag
            c[i] = cn
        step = sqrt(acc)
        it += 1
        if step <= tol:
            break
    return out, it, step
