"""Mono WAV I/O, resampling and SNR mixing."""

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

WORKING_RATE = 8000


class AudioError(ValueError):
    """Raised for unreadable, malformed or degenerate audio."""


@dataclass(frozen=True)
class AudioSignal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise AudioError("samples must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise AudioError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise AudioError("sample_rate must be positive")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate


def _to_float(data):
    kind = data.dtype
    if kind == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if kind == np.int16:
        return data.astype(np.float64) / 32768.0
    if kind == np.int32:
        # scipy left-justifies 24-bit PCM into int32
        return data.astype(np.float64) / 2147483648.0
    if kind in (np.float32, np.float64):
        return data.astype(np.float64)
    raise AudioError(f"unsupported WAV sample format {kind}")


def read_wav(path):
    """Read a PCM/float WAV file as a mono signal normalized to [-1, 1].

    Multichannel files are averaged across channels.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError) as exc:
        raise AudioError(f"{path}: not a readable WAV file ({exc})") from exc
    x = _to_float(data)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.size == 0:
        raise AudioError(f"{path}: zero-length audio")
    return AudioSignal(x, rate)


def write_wav(path, signal):
    """Write ``signal`` as 16-bit PCM, clipping to [-1, 1]."""
    x = np.clip(signal.samples, -1.0, 1.0)
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(Path(path), signal.sample_rate, pcm)


def resample(signal, target_rate):
    """Band-limited polyphase resampling to ``target_rate`` Hz."""
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise AudioError("target_rate must be positive")
    if target_rate == signal.sample_rate:
        return AudioSignal(signal.samples.copy(), target_rate)
    ratio = Fraction(target_rate, signal.sample_rate)
    y = resample_poly(signal.samples, ratio.numerator, ratio.denominator)
    return AudioSignal(y, target_rate)


def signal_power(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x))


def fit_length(x, length):
    """Tile or truncate ``x`` to exactly ``length`` samples."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise AudioError("cannot tile an empty signal")
    reps = -(-length // x.size)
    return np.tile(x, reps)[:length]


def mix_at_snr(clean, noise, snr_db):
    """Return ``clean + g * noise`` with ``g`` chosen so the mixture has ``snr_db``.

    Noise longer than the clean signal is truncated; shorter noise is looped.
    Powers are measured over the full clean duration.
    """
    gain = noise_gain(clean, noise, snr_db)
    n = fit_length(noise.samples, len(clean))
    return AudioSignal(clean.samples + gain * n, clean.sample_rate)


def noise_gain(clean, noise, snr_db):
    """Gain ``g`` that :func:`mix_at_snr` applies to the (looped) noise."""
    if clean.sample_rate != noise.sample_rate:
        raise AudioError("clean and noise sample rates differ")
    p_clean = signal_power(clean.samples)
    if p_clean == 0.0:
        raise AudioError("clean signal is silent; SNR undefined")
    p_noise = signal_power(fit_length(noise.samples, len(clean)))
    if p_noise == 0.0:
        raise AudioError("noise signal is silent")
    return float(np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0))))
