"""Per-bin EM fit of the speech/noise mixture and online SPP tracking."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, zeta

from . import _kernels
from .stat_models import DEFAULT_FROZEN_NU, BinMixtureParams, ModelError

SIGMA_FLOOR_FRAC = 1e-6
MAG_FLOOR_FRAC = 1e-12
COLLAPSE_WEIGHT = 1e-8
# extra starting points: noise-state fraction of a sorted-magnitude split
SPLIT_STARTS = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class EmConfig:
    max_iter: int = 100
    tol_eps: float = 1e-6
    theta_frac: float = 0.5
    alpha: float = 0.92
    batch_frames: int = 100
    seed: int = 42
    frozen_nu: float = DEFAULT_FROZEN_NU

    def check(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ModelError("alpha must lie in [0, 1)")
        if self.max_iter < 1:
            raise ModelError("max_iter must be >= 1")
        if self.tol_eps <= 0.0:
            raise ModelError("tol_eps must be positive")
        if not 0.0 < self.theta_frac < 1.0:
            raise ModelError("theta_frac must lie in (0, 1)")
        if self.batch_frames < 1:
            raise ModelError("batch_frames must be >= 1")
        return self


@dataclass
class SppMatrix:
    p: np.ndarray
    batch_params: list = field(default_factory=list)
    final_params: list = field(default_factory=list)

    @property
    def shape(self):
        return self.p.shape


def kmeans_init(row, seed=42, frozen_nu=DEFAULT_FROZEN_NU, max_iter=100):
    """Two-means clustering of a row of magnitudes into (noise, speech) moments.

    An all-equal row yields parameters flagged ``degenerate``.
    """
    y = np.asarray(row, dtype=np.float64)
    floor = SIGMA_FLOOR_FRAC * max(float(np.max(np.abs(y))), np.finfo(float).tiny)
    if y.size < 2 or np.all(y == y[0]):
        level = float(y[0]) if y.size else 0.0
        return BinMixtureParams(0.5, 0.5, level, level, floor, floor,
                                nu_value=frozen_nu, degenerate=True)
    rng = np.random.default_rng(seed)
    c0 = y[rng.integers(y.size)]
    d2 = (y - c0) ** 2
    c1 = y[rng.choice(y.size, p=d2 / d2.sum())]
    centers = np.array([c0, c1])
    labels = None
    for _ in range(max_iter):
        new_labels = np.abs(y[:, None] - centers[None, :]).argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(2):
            if np.any(labels == k):
                centers[k] = y[labels == k].mean()
    lo = int(np.argmin(centers))
    groups = [y[labels == lo], y[labels == 1 - lo]]
    return BinMixtureParams(
        w0=groups[0].size / y.size,
        w1=groups[1].size / y.size,
        mu0=float(groups[0].mean()),
        mu1=float(groups[1].mean()),
        sigma0=max(float(groups[0].std()), floor),
        sigma1=max(float(groups[1].std()), floor),
        nu_value=frozen_nu,
    )


def em_step(row, params, sigma_floor=0.0):
    """One raw E-step/M-step: posterior-weighted prior, mean and spread."""
    y = np.ascontiguousarray(row, dtype=np.float64)
    new, _ = _kernels.em_step(y, params.as_vector(), sigma_floor)
    return BinMixtureParams.from_vector(new)


def gamma_shape(s, tol=1e-12, max_iter=50):
    """Solve ``log(nu) - digamma(nu) = s`` for the Gamma shape by Newton's method."""
    if s <= 1e-12:
        return 1e6
    nu = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(max_iter):
        f = math.log(nu) - float(digamma(nu)) - s
        nxt = nu - f / (1.0 / nu - float(zeta(2.0, nu)))  # zeta(2, nu) is the trigamma function
        if nxt <= 0.0:
            nxt = 0.5 * nu
        done = abs(nxt - nu) < tol * nu
        nu = nxt
        if done:
            break
    return nu


def mle_step(row, vec, sigma_floor=0.0):
    """EM step whose M-step maximizes the weighted likelihood exactly.

    The Rayleigh scale and the Gamma shape/rate are set to their weighted
    maximum-likelihood values, so the data likelihood cannot decrease.
    Works on the flat parameter vector used by the kernels.
    """
    y = np.ascontiguousarray(row, dtype=np.float64)
    p1 = _kernels.posterior_row(y, vec)
    new = np.array(vec, dtype=np.float64)
    for state, r in ((0, 1.0 - p1), (1, p1)):
        total = float(r.sum())
        new[state] = total / y.size
        if new[state] < COLLAPSE_WEIGHT:
            continue
        mu = float(r @ y) / total
        sd = max(math.sqrt(max(float(r @ (y - mu) ** 2) / total, 0.0)), sigma_floor)
        if state == 0:
            new[2] = math.sqrt(float(r @ (y * y)) / (2.0 * total)) * math.sqrt(math.pi / 2.0)
            new[4] = sd
        elif vec[6]:
            new[3], new[5] = mu, sd
        else:
            nu = gamma_shape(math.log(mu) - float(r @ np.log(y)) / total)
            new[3], new[5] = mu, max(mu / math.sqrt(nu), sigma_floor)
    return new


def em_fit_trace(row, init, config=EmConfig(), theta=None):
    """EM on one row. Returns ``(params, loglik_history)``.

    ``theta`` is the closeness threshold on the initial means below which the
    Gamma shape is frozen; it defaults to ``config.theta_frac * mean(row)``.
    Each iteration tries the moment-matching step first. When that lowers the
    likelihood the exact maximum-likelihood step is used instead, so the
    recorded log-likelihood never decreases.
    """
    y = np.ascontiguousarray(row, dtype=np.float64)
    if theta is None:
        theta = config.theta_frac * float(np.mean(y))
    floor = SIGMA_FLOOR_FRAC * float(np.max(y))
    vec = init.as_vector()
    vec[7] = config.frozen_nu if not init.nu_fixed else init.nu_value
    if abs(init.mu1 - init.mu0) <= theta:
        vec[6] = 1.0
    ll = float(_kernels.loglik(y, vec))
    history = [ll]
    for _ in range(config.max_iter):
        cand, _ = _kernels.em_step(y, vec, floor)
        ll_cand = float(_kernels.loglik(y, cand))
        if not ll_cand >= ll:
            cand = mle_step(y, vec, floor)
            ll_cand = float(_kernels.loglik(y, cand))
            if not ll_cand >= ll:
                break
        change = float(np.linalg.norm(cand[:6] - vec[:6]))
        vec, ll = cand, ll_cand
        history.append(ll)
        if change < config.tol_eps:
            break
    return BinMixtureParams.from_vector(vec), history


def em_fit(row, init, config=EmConfig(), theta=None):
    """Fit the two-state mixture to one row; see :func:`em_fit_trace`."""
    return em_fit_trace(row, init, config, theta)[0]


def split_init(row, noise_frac, frozen_nu=DEFAULT_FROZEN_NU):
    """Moments of the lower ``noise_frac`` and upper remainder of the sorted row."""
    y = np.sort(np.asarray(row, dtype=np.float64))
    k = min(max(int(round(noise_frac * y.size)), 1), y.size - 1)
    lo, hi = y[:k], y[k:]
    floor = SIGMA_FLOOR_FRAC * max(float(y[-1]), np.finfo(float).tiny)
    return BinMixtureParams(k / y.size, 1.0 - k / y.size, float(lo.mean()), float(hi.mean()),
                            max(float(lo.std()), floor), max(float(hi.std()), floor),
                            nu_value=frozen_nu)


def fit_row(row, config=EmConfig(), seed=None, theta=None):
    """Multi-start EM: k-means plus sorted splits, keeping the best likelihood.

    Returns ``(params, loglik_history)`` of the winning start, or the
    degenerate k-means parameters for a constant row.
    """
    y = np.ascontiguousarray(row, dtype=np.float64)
    seed = config.seed if seed is None else seed
    first = kmeans_init(y, seed=seed, frozen_nu=config.frozen_nu)
    if first.degenerate:
        return first, []
    if theta is None:
        theta = config.theta_frac * float(np.mean(y))
    best = None
    starts = [first] + [split_init(y, f, config.frozen_nu) for f in SPLIT_STARTS]
    for init in starts:
        params, history = em_fit_trace(y, init, config, theta)
        if best is None or history[-1] > best[1][-1]:
            best = (params, history)
    return best


def online_update(prev, y, alpha, sigma_floor=0.0):
    """Forgetting-factor update of all parameters for one new magnitude ``y``."""
    new, _ = _kernels.online_update(prev.as_vector(), float(y), float(alpha), sigma_floor)
    return BinMixtureParams.from_vector(new)


def compute_spp(spec, config=EmConfig()):
    """Speech-presence probability for every bin of a magnitude matrix.

    ``spec`` may be a :class:`MagnitudeSpectrogram` or a plain 2-D array.
    Each row is fitted by multi-start EM on its first ``batch_frames`` columns, then the
    remaining columns are scored and tracked online.
    """
    config.check()
    mag = np.asarray(getattr(spec, "mag", spec), dtype=np.float64)
    n_bins, n_frames = mag.shape
    batch = min(config.batch_frames, n_frames)
    out = np.empty((n_bins, n_frames))
    peak = float(mag.max()) if mag.size else 0.0
    if peak <= 0.0:
        out.fill(0.5)
        return SppMatrix(out)
    ymat = np.maximum(mag, MAG_FLOOR_FRAC * peak)
    batch_params, final_params = [], []
    for i in range(n_bins):
        row = np.ascontiguousarray(ymat[i])
        theta = config.theta_frac * float(row.mean())
        fitted, _ = fit_row(row[:batch], config, seed=(config.seed, i), theta=theta)
        if fitted.degenerate:
            out[i] = 0.5
            batch_params.append(fitted)
            final_params.append(fitted)
            continue
        vec = fitted.as_vector()
        out[i, :batch] = _kernels.posterior_row(row[:batch], vec)
        if batch < n_frames:
            floor = SIGMA_FLOOR_FRAC * float(row.max())
            tail = np.empty(n_frames - batch)
            _kernels.online_pass(row[batch:], vec, config.alpha, floor, tail)
            out[i, batch:] = tail
        batch_params.append(fitted)
        final_params.append(BinMixtureParams.from_vector(vec))
    np.clip(out, 0.0, 1.0, out=out)
    return SppMatrix(out, batch_params, final_params)
