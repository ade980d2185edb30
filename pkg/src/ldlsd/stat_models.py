"""Two-state magnitude model: Rayleigh noise vs Gamma speech.

Parameters are moment-based (prior weight, mean, standard deviation per state)
and mapped to the density shapes by :func:`derive_shape`.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
DEFAULT_FROZEN_NU = 2.0


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class BinMixtureParams:
    w0: float
    w1: float
    mu0: float
    mu1: float
    sigma0: float
    sigma1: float
    nu_fixed: bool = False
    nu_value: float = DEFAULT_FROZEN_NU
    degenerate: bool = False

    def check(self):
        if abs(self.w0 + self.w1 - 1.0) > 1e-9 or self.w0 < 0.0 or self.w1 < 0.0:
            raise ModelError(f"invalid prior weights ({self.w0}, {self.w1})")
        if self.sigma0 <= 0.0 or self.sigma1 <= 0.0:
            raise ModelError("standard deviations must be positive")
        if self.mu0 < 0.0 or self.mu1 < 0.0:
            raise ModelError("means must be nonnegative")
        return self

    def as_vector(self):
        """Pack into the kernel layout."""
        return np.array([self.w0, self.w1, self.mu0, self.mu1, self.sigma0, self.sigma1,
                         1.0 if self.nu_fixed else 0.0, self.nu_value], dtype=np.float64)

    @classmethod
    def from_vector(cls, v, degenerate=False):
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]), float(v[4]),
                   float(v[5]), bool(v[6]), float(v[7]), degenerate)

    def stacked(self):
        """The six estimated parameters, for convergence norms."""
        return np.array([self.w0, self.w1, self.mu0, self.mu1, self.sigma0, self.sigma1])


@dataclass(frozen=True)
class DerivedShape:
    delta: float
    beta_rate: float
    nu: float


def derive_shape(params):
    """Map moment parameters to (Rayleigh scale, Gamma rate, Gamma shape).

    With ``nu_fixed`` the shape is the frozen value and the rate is ``nu / mu1``,
    which keeps the Gamma mean at ``mu1``.
    """
    if params.mu0 <= 0.0:
        raise ModelError("mu0 must be positive: Rayleigh scale would be zero")
    if params.mu1 <= 0.0:
        raise ModelError("mu1 must be positive")
    delta = params.mu0 * SQRT_2_OVER_PI
    if params.nu_fixed:
        nu = params.nu_value
        beta = nu / params.mu1
    else:
        var1 = params.sigma1 * params.sigma1
        beta = params.mu1 / var1
        nu = params.mu1 * params.mu1 / var1
    return DerivedShape(delta, beta, nu)


def log_noise_pdf(y, shape):
    y = np.asarray(y, dtype=np.float64)
    d2 = shape.delta * shape.delta
    with np.errstate(divide="ignore"):
        return np.log(y) - math.log(d2) - y * y / (2.0 * d2)


def noise_pdf(y, shape):
    """Rayleigh density ``(y / delta^2) exp(-y^2 / (2 delta^2))``."""
    return np.exp(log_noise_pdf(y, shape))


def log_speech_pdf(y, shape):
    y = np.asarray(y, dtype=np.float64)
    nu, beta = shape.nu, shape.beta_rate
    with np.errstate(divide="ignore", invalid="ignore"):
        power = np.where(y == 0.0, 0.0 if nu == 1.0 else (nu - 1.0) * -np.inf,
                         (nu - 1.0) * np.log(np.where(y == 0.0, 1.0, y)))
    return nu * math.log(beta) - gammaln(nu) + power - beta * y


def speech_pdf(y, shape):
    """Gamma density ``beta^nu / Gamma(nu) * y^(nu-1) * exp(-beta y)``."""
    return np.exp(log_speech_pdf(y, shape))


def spp_posterior(y, params):
    """Posterior probability of the speech state for magnitude(s) ``y``."""
    scalar = np.ndim(y) == 0
    p = _kernels.posterior_row(np.atleast_1d(np.asarray(y, dtype=np.float64)),
                               params.as_vector())
    return float(p[0]) if scalar else np.asarray(p)


def row_loglik(row, params):
    """Log of the product of mixture densities over a row."""
    return float(_kernels.loglik(np.ascontiguousarray(row, dtype=np.float64),
                                 params.as_vector()))
