"""Proximal maps of the nuclear, l1 and l2,1 norms."""

import numpy as np
import scipy.linalg

RANK_TOL = 1e-12


class ProxError(ValueError):
    pass


def _check(x, tau):
    if tau < 0:
        raise ProxError("threshold must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ProxError("input contains non-finite entries")
    return x


def thin_svd(x):
    """Thin SVD; retries with the QR-iteration driver when divide-and-conquer fails."""
    try:
        return np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(x, full_matrices=False, lapack_driver="gesvd")


def svt(x, tau):
    """Singular value thresholding: prox of ``tau * ||.||_*``."""
    x = _check(x, tau)
    if tau == 0:
        return x.copy()
    u, s, vt = thin_svd(x)
    s = np.maximum(s - tau, 0.0)
    r = int(np.count_nonzero(s))
    return (u[:, :r] * s[:r]) @ vt[:r]


def shrink(x, tau):
    """Entrywise soft thresholding: prox of ``tau * ||.||_1``."""
    x = _check(x, tau)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def l21_prox(x, tau):
    """Column-wise norm shrinkage: prox of ``tau * sum_j ||x[:, j]||_2``."""
    x = _check(x, tau)
    norms = np.linalg.norm(x, axis=0)
    scale = np.zeros_like(norms)
    nz = norms > tau
    scale[nz] = 1.0 - tau / norms[nz]
    return x * scale


def numerical_rank(x, rel_tol=RANK_TOL):
    s = np.linalg.svd(np.asarray(x, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def nuclear_norm(x):
    return float(np.linalg.svd(x, compute_uv=False).sum())


def l21_norm(x):
    return float(np.linalg.norm(x, axis=0).sum())
