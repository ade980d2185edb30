"""Deterministic synthetic test material: voiced "speech" and coloured noise."""

import numpy as np

from .audio_io import AudioSignal

FORMANTS = ((500.0, 90.0), (1500.0, 120.0), (2500.0, 160.0))


def harmonic_speech(duration=3.0, sample_rate=8000, seed=0, f0=140.0,
                    syllable_rate=4.0, gaps=((0.9, 1.3), (2.1, 2.4))):
    """Sum of f0 harmonics shaped by three formant resonances.

    The pitch glides slowly, the envelope is modulated at ``syllable_rate`` Hz,
    and the ``gaps`` intervals (seconds) are silent. Peak amplitude is 0.5.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    pitch = f0 * (1.0 + 0.12 * np.sin(2 * np.pi * 0.7 * t + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(pitch) / sample_rate
    x = np.zeros(n)
    nyq = sample_rate / 2.0
    for h in range(1, int(nyq / (f0 * 0.88))):
        freq = h * pitch
        gain = np.zeros(n)
        for fc, bw in FORMANTS:
            gain += 1.0 / (1.0 + ((freq - fc) / bw) ** 2)
        gain /= h ** 0.5
        gain[freq >= 0.95 * nyq] = 0.0
        x += gain * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    env = 0.5 * (1.0 - np.cos(2 * np.pi * syllable_rate * t))
    env = 0.15 + 0.85 * env
    for a, b in gaps:
        env[(t >= a) & (t < b)] = 0.0
    ramp = int(0.01 * sample_rate)
    kernel = np.hanning(2 * ramp + 1)
    env = np.convolve(env, kernel / kernel.sum(), mode="same")
    x *= env
    x *= 0.5 / np.max(np.abs(x))
    return AudioSignal(x, sample_rate)


def white_noise(n, sample_rate=8000, seed=1):
    rng = np.random.default_rng(seed)
    return AudioSignal(rng.standard_normal(n), sample_rate)


def pink_noise(n, sample_rate=8000, seed=2):
    """Gaussian noise with a 1/f power spectrum (unit variance)."""
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    shaping = np.ones_like(f)
    shaping[1:] = 1.0 / np.sqrt(f[1:] / f[1])
    shaping[0] = 0.0
    x = np.fft.irfft(spec * shaping, n=n)
    return AudioSignal(x / np.std(x), sample_rate)
