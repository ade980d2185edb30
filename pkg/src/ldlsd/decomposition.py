"""Linearized ADMM with adaptive penalty for the dictionary low-rank/sparse model,
and the plain RPCA baseline.

Dictionary model::

    min ||S||_* + beta ||A||_1 + gamma_l ||L||_* + gamma_e ||E||_{2,1}
    s.t. Y = D S + L + E,  S = A

RPCA baseline::

    min ||S||_1 + gamma_l ||L||_* + gamma_e ||E||_F^2   s.t. Y = S + L + E

With ``normalize`` on, ``Y`` and the dictionary are each divided by their
spectral norm before iterating, and the blocks are scaled back afterwards.
The solution is then equivariant under separate rescaling of ``Y`` and of the
dictionary, so the default weights act the same way at any input level.
Multipliers are returned in normalized units.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .prox_ops import l21_norm, l21_prox, nuclear_norm, shrink, svt


# (gamma_l, gamma_e) in units of sqrt(max(N, M)), for normalized data
DEFAULT_WEIGHTS = {"ldlsd": (0.7, 1.0), "rpca": (3.0, 100.0)}


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Weights and penalty schedule. ``None`` fields are resolved per problem size."""

    beta_sparse: float | None = None
    gamma_l: float | None = None
    gamma_e: float | None = None
    rho0: float | None = None
    mu_growth: float = 1.1
    rho_max: float = 1e10
    eps: float = 1e-6
    max_iter: int = 500
    eta_slack: float = 1.0
    normalize: bool = True

    def check(self):
        for name in ("beta_sparse", "gamma_l", "gamma_e", "rho0"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise SolverError(f"{name} must be positive")
        if not self.mu_growth > 1.0:
            raise SolverError("mu_growth must exceed 1")
        if not 0.0 < self.eps < 1.0:
            raise SolverError("eps must lie in (0, 1)")
        if self.max_iter < 1:
            raise SolverError("max_iter must be >= 1")
        if self.eta_slack < 0:
            raise SolverError("eta_slack must be nonnegative")
        return self

    def resolved(self, y, method="ldlsd"):
        """Fill size-dependent defaults for a data matrix ``y``."""
        scale = np.sqrt(max(y.shape))
        peak = float(np.max(np.abs(y))) or 1.0
        gamma_l, gamma_e = DEFAULT_WEIGHTS[method]
        return replace(
            self,
            beta_sparse=self.beta_sparse if self.beta_sparse is not None else 1.0 / scale,
            gamma_l=self.gamma_l if self.gamma_l is not None else gamma_l * scale,
            gamma_e=self.gamma_e if self.gamma_e is not None else gamma_e * scale,
            rho0=self.rho0 if self.rho0 is not None else 1e-2 / peak,
        )


@dataclass
class DecompositionResult:
    s: np.ndarray
    a: np.ndarray
    l: np.ndarray
    e: np.ndarray
    d1: np.ndarray
    d2: np.ndarray | None
    iterations: int
    residual_history: list
    converged: bool
    config: SolverConfig
    # (iteration, primal residual, S-A residual, rho used)
    trace: list = field(default_factory=list)


@dataclass
class LdlsdState:
    y: np.ndarray
    d: np.ndarray
    s: np.ndarray
    a: np.ndarray
    l: np.ndarray
    e: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    rho: float
    eta: float
    cfg: SolverConfig


def _as_matrix(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise SolverError(f"{name} must be a 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise SolverError(f"{name} contains non-finite entries")
    return x


def init_ldlsd(y, dictionary, config=SolverConfig()):
    y = _as_matrix(y, "Y")
    d = _as_matrix(dictionary, "dictionary")
    if y.shape[0] != d.shape[0]:
        raise SolverError(f"row mismatch: Y has {y.shape[0]}, dictionary {d.shape[0]}")
    cfg = config.check().resolved(y, "ldlsd")
    k = d.shape[1]
    m = y.shape[1]
    eta = float(np.linalg.norm(d, 2)) ** 2 + cfg.eta_slack
    z = np.zeros
    return LdlsdState(y, d, z((k, m)), z((k, m)), z(y.shape), z(y.shape), z(y.shape),
                      z((k, m)), cfg.rho0, eta, cfg)


def update_s(st):
    r = st.y - st.d @ st.s - st.l - st.e + st.d1 / st.rho
    c = st.s - st.a + st.d2 / st.rho
    st.s = svt(st.s + (st.d.T @ r - c) / st.eta, 1.0 / (st.eta * st.rho))


def update_a(st):
    st.a = shrink(st.s + st.d2 / st.rho, st.cfg.beta_sparse / st.rho)


def update_l(st):
    st.l = svt(st.y - st.d @ st.s - st.e + st.d1 / st.rho, st.cfg.gamma_l / st.rho)


def update_e(st):
    st.e = l21_prox(st.y - st.d @ st.s - st.l + st.d1 / st.rho, st.cfg.gamma_e / st.rho)


def update_multipliers(st):
    st.d1 = st.d1 + st.rho * (st.y - st.d @ st.s - st.l - st.e)
    st.d2 = st.d2 + st.rho * (st.s - st.a)
    st.rho = min(st.rho * st.cfg.mu_growth, st.cfg.rho_max)


def augmented_lagrangian(st):
    """Value of the augmented Lagrangian at the current state."""
    cfg = st.cfg
    r1 = st.y - st.d @ st.s - st.l - st.e + st.d1 / st.rho
    r2 = st.s - st.a + st.d2 / st.rho
    return (nuclear_norm(st.s) + cfg.beta_sparse * np.abs(st.a).sum()
            + cfg.gamma_l * nuclear_norm(st.l) + cfg.gamma_e * l21_norm(st.e)
            + 0.5 * st.rho * (np.sum(r1 * r1) + np.sum(r2 * r2)))


def _residuals(st, y_norm):
    primal = np.linalg.norm(st.y - st.d @ st.s - st.l - st.e) / y_norm
    coupling = np.linalg.norm(st.s - st.a) / max(1.0, np.linalg.norm(st.s))
    return float(primal), float(coupling)


def _data_scale(y, config):
    if not config.normalize:
        return 1.0
    c = float(np.linalg.norm(y, 2))
    return c if c > 0.0 else 1.0


def solve_ldlsd(y, dictionary, config=SolverConfig()):
    """Decompose ``y`` into ``dictionary @ S + L + E`` with ``S`` low-rank and sparse."""
    y = _as_matrix(y, "Y")
    d = _as_matrix(dictionary, "dictionary")
    cy = _data_scale(y, config)
    cd = _data_scale(d, config)
    res = _ldlsd_iterate(y / cy, d / cd, config)
    for m in (res.s, res.a):
        m *= cy / cd
    res.l *= cy
    res.e *= cy
    return res


def _ldlsd_iterate(y, dictionary, config):
    st = init_ldlsd(y, dictionary, config)
    y_norm = float(np.linalg.norm(st.y))
    if y_norm == 0.0:
        return DecompositionResult(st.s, st.a, st.l, st.e, st.d1, st.d2, 0, [0.0], True, st.cfg)
    history, trace = [], []
    converged = False
    k = 0
    while k < st.cfg.max_iter:
        rho = st.rho
        update_s(st)
        update_a(st)
        update_l(st)
        update_e(st)
        update_multipliers(st)
        k += 1
        primal, coupling = _residuals(st, y_norm)
        history.append(primal)
        trace.append((k, primal, coupling, rho))
        if primal < st.cfg.eps and coupling < st.cfg.eps:
            converged = True
            break
    return DecompositionResult(st.s, st.a, st.l, st.e, st.d1, st.d2, k, history,
                               converged, st.cfg, trace)


def solve_rpca(y, config=SolverConfig()):
    """Split ``y`` into sparse ``S``, low-rank ``L`` and dense small ``E``."""
    y = _as_matrix(y, "Y")
    c = _data_scale(y, config)
    res = _rpca_iterate(y / c, config)
    for m in (res.s, res.a, res.l, res.e):
        m *= c
    return res


def _rpca_iterate(y, config):
    cfg = config.check().resolved(y, "rpca")
    z = np.zeros_like(y)
    s, l, e, dual = z.copy(), z.copy(), z.copy(), z.copy()
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return DecompositionResult(s, s.copy(), l, e, dual, None, 0, [0.0], True, cfg)
    rho = cfg.rho0
    history, trace = [], []
    converged = False
    k = 0
    while k < cfg.max_iter:
        s = shrink(y - l - e + dual / rho, 1.0 / rho)
        l = svt(y - s - e + dual / rho, cfg.gamma_l / rho)
        e = rho * (y - s - l + dual / rho) / (2.0 * cfg.gamma_e + rho)
        resid = y - s - l - e
        dual = dual + rho * resid
        k += 1
        primal = float(np.linalg.norm(resid)) / y_norm
        history.append(primal)
        trace.append((k, primal, 0.0, rho))
        rho = min(rho * cfg.mu_growth, cfg.rho_max)
        if primal < cfg.eps:
            converged = True
            break
    return DecompositionResult(s, s.copy(), l, e, dual, None, k, history, converged, cfg, trace)
