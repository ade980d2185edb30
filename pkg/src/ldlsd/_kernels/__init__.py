"""Hot-loop kernels for EM and online SPP estimation.

The compiled extension is used when importable; otherwise the pure-Python
implementation is selected. Set ``LDLSD_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("LDLSD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        _impl = _ckernels
        BACKEND = "cython"


def get_backend(name=None):
    """Return a kernel module by name (``"cython"`` / ``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def posterior_row(y, theta):
    return _impl.posterior_row(y, theta)


def loglik(y, theta):
    return _impl.loglik(y, theta)


def em_step(y, theta, sigma_floor):
    return _impl.em_step(y, theta, sigma_floor)


def online_update(theta, y, alpha, sigma_floor):
    return _impl.online_update(theta, y, alpha, sigma_floor)


def online_pass(y, theta, alpha, sigma_floor, out):
    return _impl.online_pass(y, theta, alpha, sigma_floor, out)
