"""STFT analysis / weighted overlap-add synthesis on the magnitude-phase split."""

import csv
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .audio_io import AudioSignal


NORM_FLOOR_FRAC = 0.1


class SpectrogramError(ValueError):
    pass


def _next_pow2(n):
    return 1 << (int(n) - 1).bit_length()


@dataclass(frozen=True)
class StftConfig:
    window_len_ms: float = 32.0
    hop_ms: float = 10.0
    fft_size: int | None = None
    window: str = "hann"

    def win_samples(self, sample_rate):
        return int(round(self.window_len_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate):
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def n_fft(self, sample_rate):
        win = self.win_samples(sample_rate)
        return self.fft_size if self.fft_size is not None else _next_pow2(win)

    def taper(self, sample_rate):
        # periodic (DFT-even) form
        return get_window(self.window, self.win_samples(sample_rate), fftbins=True)

    def validate(self, sample_rate):
        win = self.win_samples(sample_rate)
        hop = self.hop_samples(sample_rate)
        if win < 2 or hop < 1:
            raise SpectrogramError("window and hop must span at least one sample")
        if hop > win:
            raise SpectrogramError("hop must not exceed the window length")
        n_fft = self.n_fft(sample_rate)
        if n_fft < win or n_fft & (n_fft - 1):
            raise SpectrogramError("fft_size must be a power of two >= window length")
        if nola_minimum(self, sample_rate) <= 1e-10:
            raise SpectrogramError("window/hop pair violates the nonzero overlap-add condition")


def _overlap_sum(w, hop):
    """Steady-state sum of ``w`` shifted by multiples of ``hop`` over one hop period."""
    win = w.shape[0]
    acc = np.zeros(hop)
    for start in range(-win, win, hop):
        for n in range(hop):
            k = n - start
            if 0 <= k < win:
                acc[n] += w[k]
    return acc


def nola_minimum(config, sample_rate):
    """Minimum of the steady-state summed squared window (must be > 0)."""
    w = config.taper(sample_rate)
    return float(_overlap_sum(w * w, config.hop_samples(sample_rate)).min())


def cola_deviation(config, sample_rate):
    """Relative peak-to-peak ripple of the plain overlap-added analysis window."""
    s = _overlap_sum(config.taper(sample_rate), config.hop_samples(sample_rate))
    return float((s.max() - s.min()) / s.mean())


@dataclass
class MagnitudeSpectrogram:
    """Magnitude ``mag`` (bins x frames) with the phase kept for resynthesis."""

    mag: np.ndarray
    phase: np.ndarray
    config: StftConfig
    sample_rate: int
    original_len: int

    @property
    def shape(self):
        return self.mag.shape

    def frame_times(self):
        hop = self.config.hop_samples(self.sample_rate)
        return np.arange(self.mag.shape[1]) * hop / self.sample_rate

    def with_magnitude(self, mag):
        mag = np.asarray(mag, dtype=np.float64)
        if mag.shape != self.mag.shape:
            raise SpectrogramError("magnitude shape mismatch")
        return MagnitudeSpectrogram(mag, self.phase, self.config, self.sample_rate,
                                    self.original_len)


def stft(signal, config=StftConfig()):
    """Magnitude/phase STFT; frame ``j`` starts at sample ``j * hop`` (no padding)."""
    rate = signal.sample_rate
    config.validate(rate)
    win = config.win_samples(rate)
    hop = config.hop_samples(rate)
    x = signal.samples
    if x.shape[0] < win:
        raise SpectrogramError(
            f"signal of {x.shape[0]} samples is shorter than one {win}-sample window")
    frames = sliding_window_view(x, win)[::hop] * config.taper(rate)
    spec = np.fft.rfft(frames, n=config.n_fft(rate), axis=1).T
    return MagnitudeSpectrogram(np.abs(spec), np.angle(spec), config, rate, x.shape[0])


def istft(spec):
    """Weighted overlap-add resynthesis, normalized by the summed squared window.

    The normalizer is clamped to 10% of its steady-state minimum, which fades
    the first and last partially covered samples instead of amplifying them.
    """
    rate = spec.sample_rate
    cfg = spec.config
    win = cfg.win_samples(rate)
    hop = cfg.hop_samples(rate)
    w = cfg.taper(rate)
    n_frames = spec.mag.shape[1]
    frames = np.fft.irfft(spec.mag * np.exp(1j * spec.phase), n=cfg.n_fft(rate), axis=0)
    frames = frames[:win].T * w
    total = (n_frames - 1) * hop + win
    out = np.zeros(max(total, spec.original_len))
    norm = np.zeros_like(out)
    w2 = w * w
    for j in range(n_frames):
        out[j * hop:j * hop + win] += frames[j]
        norm[j * hop:j * hop + win] += w2
    # edge samples covered by few frames would amplify modified spectra
    out /= np.maximum(norm, NORM_FLOOR_FRAC * nola_minimum(cfg, rate))
    return AudioSignal(out[:spec.original_len], rate)


def interior_slice(length, sample_rate, config=StftConfig()):
    """Samples from the end of the first frame to the start of the last one."""
    win = config.win_samples(sample_rate)
    hop = config.hop_samples(sample_rate)
    n_frames = (length - win) // hop + 1
    return slice(win, (n_frames - 1) * hop + 1)


def write_matrix_csv(path, matrix, frame_times):
    """One row per frequency bin; header ``bin,<frame times in seconds>``."""
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin"] + [f"{t:.6f}" for t in frame_times])
        for i, row in enumerate(matrix):
            writer.writerow([i] + [f"{v:.9g}" for v in row])


def read_matrix_csv(path):
    """Inverse of :func:`write_matrix_csv`; returns ``(matrix, frame_times)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    times = np.array([float(t) for t in rows[0][1:]])
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return data, times
