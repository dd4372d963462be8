# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Row-sequential SGD / SMD sweeps over a dense design matrix.

Both kernels update their state arrays in place and visit rows in the order
given by ``order``.  Mirror codes: 0 quadratic, 1 hyperbolic entropy.
"""
from libc.math cimport expm1, fabs

QUADRATIC = 0
HYPERBOLIC = 1


cdef inline double _sinh(double x) nogil:
    # one expm1 instead of libm sinh; accurate near 0 where exp(x) - exp(-x) cancels
    cdef double e = expm1(fabs(x))
    cdef double s = 0.5 * e * (e + 2.0) / (e + 1.0)
    return s if x >= 0 else -s


def sgd_epoch(const double[:, ::1] X, const double[::1] y, double[::1] w,
              const long[::1] order, double step):
    cdef Py_ssize_t n = order.shape[0], d = X.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double r, g
    for k in range(n):
        i = order[k]
        r = 0.0
        for j in range(d):
            r += X[i, j] * w[j]
        g = step * (r - y[i])
        for j in range(d):
            w[j] -= g * X[i, j]


def smd_epoch(const double[:, ::1] X, const double[::1] y, double[::1] z,
              double[::1] w, const long[::1] order, double step,
              int mirror, double beta):
    cdef Py_ssize_t n = order.shape[0], d = X.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double r, g
    for k in range(n):
        i = order[k]
        r = 0.0
        for j in range(d):
            r += X[i, j] * w[j]
        g = step * (r - y[i])
        if mirror == 0:
            for j in range(d):
                z[j] -= g * X[i, j]
                w[j] = z[j]
        else:
            for j in range(d):
                z[j] -= g * X[i, j]
                w[j] = beta * _sinh(z[j])
