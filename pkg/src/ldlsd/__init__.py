"""Single-channel speech enhancement by dictionary low-rank/sparse decomposition."""

from ._kernels import BACKEND
from .audio_io import AudioError, AudioSignal, mix_at_snr, read_wav, resample, write_wav
from .decomposition import DecompositionResult, SolverConfig, solve_ldlsd, solve_rpca
from .em_spp import EmConfig, SppMatrix, compute_spp, em_fit, fit_row, kmeans_init, online_update
from .metrics import SdrReport, sdr
from .pipeline import DiagnosticBundle, EnhancementConfig, enhance, estimate_dictionary
from .prox_ops import l21_prox, shrink, svt
from .spectrogram import MagnitudeSpectrogram, StftConfig, istft, stft
from .stat_models import BinMixtureParams, derive_shape, spp_posterior

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AudioError", "AudioSignal", "BinMixtureParams", "DecompositionResult",
    "DiagnosticBundle", "EmConfig", "EnhancementConfig", "MagnitudeSpectrogram", "SdrReport",
    "SolverConfig", "SppMatrix", "StftConfig", "compute_spp", "derive_shape", "em_fit",
    "enhance", "estimate_dictionary", "fit_row", "istft", "kmeans_init", "l21_prox",
    "mix_at_snr", "online_update", "read_wav", "resample", "sdr", "shrink", "solve_ldlsd",
    "solve_rpca", "spp_posterior", "stft", "svt", "write_wav",
]
