"""End-to-end enhancement: STFT, SPP mask, dictionary decomposition, resynthesis."""

from dataclasses import dataclass, field

import numpy as np

from .decomposition import SolverConfig, solve_ldlsd, solve_rpca
from .em_spp import EmConfig, compute_spp
from .spectrogram import StftConfig, istft, stft

METHODS = ("ldlsd", "rpca")


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class EnhancementConfig:
    stft: StftConfig = field(default_factory=StftConfig)
    em: EmConfig = field(default_factory=EmConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    method: str = "ldlsd"
    spectral_floor: float = 0.02
    # keep the speech estimate below the noisy magnitude (gain <= 1)
    clip_to_noisy: bool = True

    def check(self):
        if self.method not in METHODS:
            raise PipelineError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0.0 <= self.spectral_floor <= 0.2:
            raise PipelineError("spectral_floor must lie in [0, 0.2]")
        self.em.check()
        self.solver.check()
        return self


@dataclass
class DiagnosticBundle:
    spec: object
    spp: np.ndarray
    dictionary: np.ndarray | None
    s: np.ndarray
    l: np.ndarray
    e: np.ndarray
    speech_mag: np.ndarray
    residual_history: list
    trace: list
    method: str
    converged: bool
    iterations: int
    warnings: list = field(default_factory=list)


def estimate_dictionary(y, p):
    """Mask the magnitude matrix by the speech-presence probabilities."""
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(getattr(p, "p", p), dtype=np.float64)
    if y.shape != p.shape:
        raise PipelineError(f"shape mismatch: Y {y.shape} vs P {p.shape}")
    return np.maximum(y * p, 0.0)


def enhance(noisy, config=EnhancementConfig()):
    """Enhance a noisy signal. Returns ``(enhanced, DiagnosticBundle)``."""
    config.check()
    spec = stft(noisy, config.stft)
    y = spec.mag
    spp = compute_spp(spec, config.em)
    dictionary = estimate_dictionary(y, spp)
    method = config.method
    warnings = []
    if method == "ldlsd" and not np.any(dictionary > 0.0):
        warnings.append("estimated dictionary is all zero; falling back to rpca")
        method = "rpca"
    if method == "ldlsd":
        result = solve_ldlsd(y, dictionary, config.solver)
        speech = np.maximum(dictionary @ result.s, 0.0)
    else:
        result = solve_rpca(y, config.solver)
        speech = np.maximum(result.s, 0.0)
    if not result.converged:
        warnings.append(f"solver stopped at max_iter={result.iterations} before reaching eps")
    if config.clip_to_noisy:
        speech = np.minimum(speech, y)
    mag = np.maximum(speech, config.spectral_floor * y)
    out = istft(spec.with_magnitude(mag))
    bundle = DiagnosticBundle(spec, spp.p, dictionary if method == "ldlsd" else None,
                              result.s, result.l, result.e, mag, result.residual_history,
                              result.trace, method, result.converged, result.iterations,
                              warnings)
    return out, bundle
