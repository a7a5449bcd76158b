# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gaussian-mixture kernels (same contract as ``_pykernels``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, fabs, NAN
from scipy.special.cython_special cimport ndtri

cnp.import_array()

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327
cdef int MAX_ITER = 100


cdef inline double _cdf(const double* m, const double* w, Py_ssize_t n,
                        double sigma, double x, bint upper) noexcept nogil:
    cdef double acc = 0.0, sgn = 1.0 if upper else -1.0
    cdef Py_ssize_t j
    for j in range(n):
        acc += w[j] * erfc(sgn * (x - m[j]) / sigma * INV_SQRT2)
    return 0.5 * acc


cdef inline double _pdf(const double* m, const double* w, Py_ssize_t n,
                        double sigma, double x) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t j
    for j in range(n):
        t = (x - m[j]) / sigma
        acc += w[j] * exp(-0.5 * t * t)
    return acc * INV_SQRT_2PI / sigma


cdef inline void _cdf_pdf(const double* m, const double* w, Py_ssize_t n, double sigma,
                          double x, bint upper, double* c, double* f) noexcept nogil:
    # one pass for both the (lower or upper) tail probability and the density
    cdef double acc = 0.0, dens = 0.0, t, sgn = 1.0 if upper else -1.0
    cdef Py_ssize_t j
    for j in range(n):
        t = (x - m[j]) / sigma
        acc += w[j] * erfc(sgn * t * INV_SQRT2)
        dens += w[j] * exp(-0.5 * t * t)
    c[0] = 0.5 * acc
    f[0] = dens * INV_SQRT_2PI / sigma


cdef double _solve(const double* m, const double* w, Py_ssize_t n,
                   double sigma, double level, bint upper, double x0) noexcept nogil:
    cdef double z = ndtri(level)
    cdef double mmin = m[0], mmax = m[0]
    cdef double lo, hi, x, xn, r, f, c, step
    cdef Py_ssize_t j
    cdef int it
    if upper:
        z = -z
    for j in range(1, n):
        if m[j] < mmin:
            mmin = m[j]
        if m[j] > mmax:
            mmax = m[j]
    # F(min mean + sigma z) <= level <= F(max mean + sigma z)
    lo = mmin + sigma * z
    hi = mmax + sigma * z
    if hi - lo <= 0.0:
        return lo
    # warm start from a neighbouring root when it lies inside the bracket
    if x0 > lo and x0 < hi:
        x = x0
    else:
        x = 0.5 * (lo + hi)
    for it in range(MAX_ITER):
        _cdf_pdf(m, w, n, sigma, x, upper, &c, &f)
        if upper:
            r = level - c
        else:
            r = c - level
        if r == 0.0:
            return x
        if r < 0.0:
            lo = x
        else:
            hi = x
        if f > 0.0:
            step = r / f
            if fabs(step) <= 1e-15 * (1.0 + fabs(x)):
                return x - step
            xn = x - step
        else:
            xn = lo - 1.0
        if not (xn > lo and xn < hi):
            xn = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * (1.0 + fabs(x)):
            return xn
        x = xn
    return x


def mixture_cdf(means, weights, double sigma, x):
    return _eval(means, weights, sigma, x, 0)


def mixture_sf(means, weights, double sigma, x):
    return _eval(means, weights, sigma, x, 1)


def mixture_pdf(means, weights, double sigma, x):
    return _eval(means, weights, sigma, x, 2)


def _eval(means, weights, double sigma, x, int which):
    cdef const double[:, ::1] M = np.ascontiguousarray(means, dtype=np.float64)
    cdef const double[::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t d = X.shape[0], q = X.shape[1], n = W.shape[0]
    out = np.empty((d, q))
    cdef double[:, ::1] O = out
    cdef Py_ssize_t i, k
    with nogil:
        for i in range(d):
            for k in range(q):
                if which == 0:
                    O[i, k] = _cdf(&M[i, 0], &W[0], n, sigma, X[i, k], False)
                elif which == 1:
                    O[i, k] = _cdf(&M[i, 0], &W[0], n, sigma, X[i, k], True)
                else:
                    O[i, k] = _pdf(&M[i, 0], &W[0], n, sigma, X[i, k])
    return out


def mixture_quantile(means, weights, double sigma, p):
    cdef const double[:, ::1] M = np.ascontiguousarray(means, dtype=np.float64)
    cdef const double[::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, ::1] P = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t d = P.shape[0], q = P.shape[1], n = W.shape[0]
    out = np.empty((d, q))
    cdef double[:, ::1] O = out
    cdef Py_ssize_t i, k
    cdef double pk, prev
    with nogil:
        for i in range(d):
            prev = NAN
            for k in range(q):
                pk = P[i, k]
                if pk <= 0.5:
                    prev = _solve(&M[i, 0], &W[0], n, sigma, pk, False, prev)
                else:
                    prev = _solve(&M[i, 0], &W[0], n, sigma, 1.0 - pk, True, prev)
                O[i, k] = prev
    return out


def transport_batch(src_means, src_weights, double src_sigma,
                    tgt_means, tgt_weights, double tgt_sigma, x, double pmin):
    cdef const double[:, ::1] SM = np.ascontiguousarray(src_means, dtype=np.float64)
    cdef const double[::1] SW = np.ascontiguousarray(src_weights, dtype=np.float64)
    cdef const double[:, ::1] TM = np.ascontiguousarray(tgt_means, dtype=np.float64)
    cdef const double[::1] TW = np.ascontiguousarray(tgt_weights, dtype=np.float64)
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t d = X.shape[0], q = X.shape[1]
    cdef Py_ssize_t ns = SW.shape[0], nt = TW.shape[0]
    out = np.empty((d, q))
    sat = np.zeros((d, q), dtype=np.bool_)
    cdef double[:, ::1] O = out
    cdef cnp.npy_bool[:, ::1] SAT = sat
    cdef Py_ssize_t i, k
    cdef double F, level, prev
    cdef bint upper
    with nogil:
        for i in range(d):
            prev = NAN
            for k in range(q):
                F = _cdf(&SM[i, 0], &SW[0], ns, src_sigma, X[i, k], False)
                upper = F > 0.5
                if upper:
                    level = _cdf(&SM[i, 0], &SW[0], ns, src_sigma, X[i, k], True)
                else:
                    level = F
                if level < pmin:
                    level = pmin
                    SAT[i, k] = 1
                prev = _solve(&TM[i, 0], &TW[0], nt, tgt_sigma, level, upper, prev)
                O[i, k] = prev
    return out, sat
