# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled EM / online-SPP kernels.

Mirrors ``_pykernels`` exactly; see there for the parameter vector layout.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, lgamma, sqrt, INFINITY

cnp.import_array()

cdef double COLLAPSE_WEIGHT = 1e-8
cdef double SQRT_2_OVER_PI = sqrt(2.0 / 3.141592653589793)


cdef struct Shape:
    double delta
    double beta
    double nu
    double log_norm1
    double log_delta2
    double lw0
    double lw1


cdef inline Shape _shape(const double[:] theta) nogil:
    cdef Shape sh
    sh.delta = theta[2] * SQRT_2_OVER_PI
    if theta[6] != 0.0:
        sh.nu = theta[7]
        sh.beta = sh.nu / theta[3]
    else:
        sh.beta = theta[3] / (theta[5] * theta[5])
        sh.nu = theta[3] * theta[3] / (theta[5] * theta[5])
    sh.log_norm1 = sh.nu * log(sh.beta) - lgamma(sh.nu)
    sh.log_delta2 = 2.0 * log(sh.delta)
    sh.lw0 = log(theta[0]) if theta[0] > 0.0 else -INFINITY
    sh.lw1 = log(theta[1]) if theta[1] > 0.0 else -INFINITY
    return sh


cdef inline void _log_terms(double y, Shape* sh, double* l0, double* l1) nogil:
    cdef double ly
    if y > 0.0:
        ly = log(y)
        l0[0] = sh.lw0 + ly - sh.log_delta2 - y * y / (2.0 * sh.delta * sh.delta)
        l1[0] = sh.lw1 + sh.log_norm1 + (sh.nu - 1.0) * ly - sh.beta * y
    else:
        l0[0] = -INFINITY
        if sh.nu == 1.0:
            l1[0] = sh.lw1 + log(sh.beta)
        elif sh.nu > 1.0:
            l1[0] = -INFINITY
        else:
            l1[0] = INFINITY


cdef inline double _posterior(double l0, double l1, double w0, double w1) nogil:
    cdef double d, e
    if w1 == 0.0:
        return 0.0
    if w0 == 0.0:
        return 1.0
    if l0 == -INFINITY and l1 == -INFINITY:
        return w1
    if l1 == -INFINITY:
        return 0.0
    if l0 == -INFINITY:
        return 1.0
    d = l0 - l1
    if d > 0.0:
        e = exp(-d)
        return e / (1.0 + e)
    return 1.0 / (1.0 + exp(d))


cdef inline double _logaddexp(double a, double b) nogil:
    cdef double m
    if a == -INFINITY and b == -INFINITY:
        return -INFINITY
    if a > b:
        m = a
        return m + log(1.0 + exp(b - m))
    m = b
    return m + log(1.0 + exp(a - m))


def posterior_row(const double[:] y, const double[:] theta):
    cdef Py_ssize_t j, m = y.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m)
    cdef double[:] o = out
    cdef double l0, l1
    cdef Shape sh = _shape(theta)
    with nogil:
        for j in range(m):
            _log_terms(y[j], &sh, &l0, &l1)
            o[j] = _posterior(l0, l1, theta[0], theta[1])
    return out


def loglik(const double[:] y, const double[:] theta):
    cdef Py_ssize_t j, m = y.shape[0]
    cdef double l0, l1, acc = 0.0
    cdef Shape sh = _shape(theta)
    with nogil:
        for j in range(m):
            _log_terms(y[j], &sh, &l0, &l1)
            acc += _logaddexp(l0, l1)
    return acc


def em_step(const double[:] y, const double[:] theta, double sigma_floor):
    cdef Py_ssize_t j, m = y.shape[0]
    cdef double l0, l1, p, ll = 0.0
    cdef double t0 = 0.0, t1 = 0.0, s0 = 0.0, s1 = 0.0, v0 = 0.0, v1 = 0.0
    cdef double mu0, mu1, d
    cdef Shape sh = _shape(theta)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] post = np.empty(m)
    cdef double[:] pp = post
    cdef cnp.ndarray[cnp.float64_t, ndim=1] new = np.array(theta, dtype=np.float64)
    with nogil:
        for j in range(m):
            _log_terms(y[j], &sh, &l0, &l1)
            ll += _logaddexp(l0, l1)
            p = _posterior(l0, l1, theta[0], theta[1])
            pp[j] = p
            t0 += 1.0 - p
            t1 += p
            s0 += (1.0 - p) * y[j]
            s1 += p * y[j]
    new[0] = t0 / m
    new[1] = t1 / m
    if new[0] >= COLLAPSE_WEIGHT:
        mu0 = s0 / t0
        with nogil:
            for j in range(m):
                d = y[j] - mu0
                v0 += (1.0 - pp[j]) * d * d
        new[2] = mu0
        new[4] = max(sqrt(v0 / t0), sigma_floor)
    if new[1] >= COLLAPSE_WEIGHT:
        mu1 = s1 / t1
        with nogil:
            for j in range(m):
                d = y[j] - mu1
                v1 += pp[j] * d * d
        new[3] = mu1
        new[5] = max(sqrt(v1 / t1), sigma_floor)
    return new, ll


cdef inline double _online_step(double[:] t, double y, double alpha,
                                double sigma_floor) nogil:
    cdef Shape sh = _shape(t)
    cdef double l0, l1, p1, p0, p, w_prev, w, mu, var, d
    cdef double prev[6]
    cdef int n
    _log_terms(y, &sh, &l0, &l1)
    p1 = _posterior(l0, l1, t[0], t[1])
    # direct noise posterior; 1 - p1 loses all digits when p1 is near 1
    p0 = _posterior(l1, l0, t[1], t[0])
    for n in range(6):
        prev[n] = t[n]
    for n in range(2):
        p = p1 if n == 1 else p0
        w_prev = prev[n]
        w = alpha * w_prev + (1.0 - alpha) * p
        t[n] = w
        if w == 0.0:
            continue
        mu = alpha * w_prev * prev[2 + n] / w + (1.0 - alpha) * p * y / w
        d = y - mu
        var = (alpha * w_prev * prev[4 + n] * prev[4 + n] / w
               + (1.0 - alpha) * p * d * d / w)
        t[2 + n] = mu
        t[4 + n] = max(sqrt(var), sigma_floor)
    return p1


def online_update(const double[:] theta, double y, double alpha, double sigma_floor):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] new = np.array(theta, dtype=np.float64)
    cdef double[:] t = new
    cdef double p1 = _online_step(t, y, alpha, sigma_floor)
    return new, p1


def online_pass(const double[:] y, double[:] theta, double alpha,
                double sigma_floor, double[:] out):
    cdef Py_ssize_t j, m = y.shape[0]
    with nogil:
        for j in range(m):
            out[j] = _online_step(theta, y[j], alpha, sigma_floor)
