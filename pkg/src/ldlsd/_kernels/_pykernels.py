"""Pure-Python fallback for the EM / online-SPP hot loops.

Parameter vectors are float64 arrays laid out as
``[w0, w1, mu0, mu1, sigma0, sigma1, nu_fixed, nu_value]``.
"""

import math

import numpy as np

COLLAPSE_WEIGHT = 1e-8
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _shape(theta):
    mu0, mu1, s1 = theta[2], theta[3], theta[5]
    delta = mu0 * _SQRT_2_OVER_PI
    if theta[6] != 0.0:
        nu = theta[7]
        beta = nu / mu1
    else:
        beta = mu1 / (s1 * s1)
        nu = mu1 * mu1 / (s1 * s1)
    return delta, beta, nu


def _log_terms(y, theta):
    """Return log(w0 p0), log(w1 p1) arrays."""
    delta, beta, nu = _shape(theta)
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        lp0 = np.log(y) - 2.0 * math.log(delta) - y * y / (2.0 * delta * delta)
        lp1 = nu * math.log(beta) - math.lgamma(nu) + (nu - 1.0) * np.log(y) - beta * y
        if nu == 1.0:
            lp1 = np.where(y == 0.0, math.log(beta), lp1)
        lw0 = math.log(theta[0]) if theta[0] > 0.0 else -math.inf
        lw1 = math.log(theta[1]) if theta[1] > 0.0 else -math.inf
    return lw0 + lp0, lw1 + lp1


def _posterior_from_logs(l0, l1, w1):
    both = np.isneginf(l0) & np.isneginf(l1)
    d = np.where(both, 0.0, l0 - l1)
    with np.errstate(over="ignore", invalid="ignore"):
        pos = d > 0.0
        e = np.exp(np.where(pos, -d, d))
        out = np.where(pos, e / (1.0 + e), 1.0 / (1.0 + e))
    out = np.where(np.isneginf(l1) & ~both, 0.0, out)
    out = np.where(np.isneginf(l0) & ~both, 1.0, out)
    return np.where(both, w1, out)


def posterior_row(y, theta):
    """Speech-presence posterior for every magnitude in ``y``."""
    if theta[1] == 0.0:
        return np.zeros(np.shape(y))
    if theta[0] == 0.0:
        return np.ones(np.shape(y))
    l0, l1 = _log_terms(y, theta)
    return _posterior_from_logs(l0, l1, theta[1])


def loglik(y, theta):
    l0, l1 = _log_terms(y, theta)
    return float(np.sum(np.logaddexp(l0, l1)))


def em_step(y, theta, sigma_floor):
    """One E-step + M-step. Returns ``(new_theta, loglik_at_theta)``."""
    y = np.asarray(y, dtype=np.float64)
    m = y.shape[0]
    l0, l1 = _log_terms(y, theta)
    ll = float(np.sum(np.logaddexp(l0, l1)))
    p1 = _posterior_from_logs(l0, l1, theta[1])
    if theta[1] == 0.0:
        p1 = np.zeros(m)
    elif theta[0] == 0.0:
        p1 = np.ones(m)
    new = np.array(theta, dtype=np.float64)
    for n, r in ((0, 1.0 - p1), (1, p1)):
        total = float(np.sum(r))
        w = total / m
        new[n] = w
        if w < COLLAPSE_WEIGHT:
            continue
        mu = float(np.sum(r * y)) / total
        var = float(np.sum(r * (y - mu) ** 2)) / total
        new[2 + n] = mu
        new[4 + n] = max(math.sqrt(var), sigma_floor)
    return new, ll


def _posterior_scalar(y, theta, state=1):
    """Posterior of ``state`` for one sample, computed without ``1 - p`` cancellation."""
    w0, w1 = theta[0], theta[1]
    if w1 == 0.0:
        return float(state == 0)
    if w0 == 0.0:
        return float(state == 1)
    delta, beta, nu = _shape(theta)
    if y > 0.0:
        ly = math.log(y)
        lp0 = ly - 2.0 * math.log(delta) - y * y / (2.0 * delta * delta)
        lp1 = nu * math.log(beta) - math.lgamma(nu) + (nu - 1.0) * ly - beta * y
    else:
        lp0 = -math.inf
        if nu == 1.0:
            lp1 = math.log(beta)
        elif nu > 1.0:
            lp1 = -math.inf
        else:
            lp1 = math.inf
    l0 = math.log(w0) + lp0
    l1 = math.log(w1) + lp1
    if state == 0:
        l0, l1, w1 = l1, l0, w0
    if l0 == -math.inf and l1 == -math.inf:
        return w1
    if l1 == -math.inf:
        return 0.0
    if l0 == -math.inf:
        return 1.0
    d = l0 - l1
    if d > 0.0:
        e = math.exp(-d)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(d))


def _online_step(theta, y, alpha, sigma_floor):
    p1 = _posterior_scalar(y, theta)
    new = list(theta)
    for n, p in ((0, _posterior_scalar(y, theta, 0)), (1, p1)):
        w_prev = theta[n]
        w = alpha * w_prev + (1.0 - alpha) * p
        new[n] = w
        if w == 0.0:
            continue
        mu = alpha * w_prev * theta[2 + n] / w + (1.0 - alpha) * p * y / w
        var = (alpha * w_prev * theta[4 + n] * theta[4 + n] / w
               + (1.0 - alpha) * p * (y - mu) * (y - mu) / w)
        new[2 + n] = mu
        new[4 + n] = max(math.sqrt(var), sigma_floor)
    return new, p1


def online_update(theta, y, alpha, sigma_floor):
    """Single forgetting-factor update; returns ``(new_theta, p1)``.

    ``p1`` is the speech posterior of ``y`` under the incoming parameters.
    """
    new, p1 = _online_step([float(v) for v in theta], float(y), alpha, sigma_floor)
    return np.array(new, dtype=np.float64), p1


def online_pass(y, theta, alpha, sigma_floor, out):
    """Run the online recursion over ``y``; writes posteriors to ``out``.

    ``theta`` is advanced in place.
    """
    t = [float(v) for v in theta]
    for j in range(len(y)):
        t, out[j] = _online_step(t, float(y[j]), alpha, sigma_floor)
    theta[:] = t
