import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.io import wavfile

from ldlsd.audio_io import (
    AudioError,
    AudioSignal,
    mix_at_snr,
    noise_gain,
    read_wav,
    resample,
    signal_power,
    write_wav,
)


def _write_pcm24(path, frames, rate=8000):
    data = b"".join(int(v).to_bytes(3, "little", signed=True) for v in frames)
    fmt = struct.pack("<HHIIHH", 1, 1, rate, rate * 3, 3, 24)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(data)) + data
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def test_read_16bit_scaling(tmp_path):
    p = tmp_path / "a.wav"
    wavfile.write(p, 8000, np.array([0, 16384, -16384], dtype=np.int16))
    sig = read_wav(p)
    assert sig.sample_rate == 8000
    np.testing.assert_array_equal(sig.samples, [0.0, 0.5, -0.5])


def test_read_stereo_averages(tmp_path):
    p = tmp_path / "s.wav"
    wavfile.write(p, 16000, np.array([[1.0, 0.0]], dtype=np.float32))
    np.testing.assert_array_equal(read_wav(p).samples, [0.5])


def test_read_8bit_and_24bit(tmp_path):
    p8 = tmp_path / "u8.wav"
    wavfile.write(p8, 8000, np.array([128, 192, 64], dtype=np.uint8))
    np.testing.assert_array_equal(read_wav(p8).samples, [0.0, 0.5, -0.5])
    p24 = tmp_path / "i24.wav"
    _write_pcm24(p24, [0, 1 << 22, -(1 << 22)])
    np.testing.assert_array_equal(read_wav(p24).samples, [0.0, 0.5, -0.5])


def test_empty_wav_rejected(tmp_path):
    p = tmp_path / "e.wav"
    wavfile.write(p, 8000, np.zeros(0, dtype=np.int16))
    with pytest.raises(AudioError, match="zero-length audio"):
        read_wav(p)


def test_non_wav_rejected(tmp_path):
    p = tmp_path / "x.wav"
    p.write_bytes(b"ID3 definitely not a riff file")
    with pytest.raises(AudioError):
        read_wav(p)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_wav(tmp_path / "nope.wav")


@settings(max_examples=30, deadline=None)
@given(arrays(np.int16, st.integers(1, 400)))
def test_16bit_roundtrip_bit_exact(tmp_path_factory, pcm):
    p = tmp_path_factory.mktemp("rt") / "r.wav"
    wavfile.write(p, 8000, pcm)
    sig = read_wav(p)
    q = tmp_path_factory.mktemp("rt") / "w.wav"
    write_wav(q, sig)
    _, back = wavfile.read(q)
    np.testing.assert_array_equal(back, pcm)


def test_write_clips(tmp_path):
    p = tmp_path / "c.wav"
    write_wav(p, AudioSignal([2.0, -3.0, 0.25], 8000))
    _, data = wavfile.read(p)
    np.testing.assert_array_equal(data, [32767, -32768, 8192])


def test_signal_rejects_nonfinite():
    with pytest.raises(AudioError):
        AudioSignal([0.0, np.nan], 8000)


def test_resample_identity():
    x = AudioSignal(np.random.default_rng(0).standard_normal(500), 8000)
    y = resample(x, 8000)
    np.testing.assert_array_equal(y.samples, x.samples)


def test_resample_dc_preserved():
    y = resample(AudioSignal(np.full(16000, 0.3), 16000), 8000)
    assert abs(len(y) / 8000 - 1.0) <= 1 / 8000
    interior = y.samples[200:-200]
    np.testing.assert_allclose(interior, 0.3, atol=1e-3)


def test_resample_sinusoid_against_analytic():
    t48 = np.arange(48000) / 48000
    y = resample(AudioSignal(np.sin(2 * np.pi * 100 * t48), 48000), 8000)
    t8 = np.arange(len(y)) / 8000
    expected = np.sin(2 * np.pi * 100 * t8)
    interior = slice(400, -400)
    amp = np.max(np.abs(y.samples[interior]))
    assert abs(amp - 1.0) < 0.01
    np.testing.assert_allclose(y.samples[interior], expected[interior], atol=0.01)


@pytest.mark.parametrize("src,dst,n", [(16000, 8000, 16001), (44100, 8000, 44100), (8000, 22050, 999)])
def test_resample_duration(src, dst, n):
    y = resample(AudioSignal(np.zeros(n), src), dst)
    assert abs(len(y) / dst - n / src) <= 1.0 / dst


def test_mix_gain_examples():
    rng = np.random.default_rng(3)
    clean = rng.standard_normal(1000)
    noise = rng.standard_normal(1000)
    clean /= np.sqrt(np.mean(clean**2))
    noise /= np.sqrt(np.mean(noise**2))
    c, n = AudioSignal(clean, 8000), AudioSignal(noise, 8000)
    assert noise_gain(c, n, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert noise_gain(c, n, 10.0) == pytest.approx(10 ** -0.5, abs=1e-12)
    mixed = mix_at_snr(c, n, 0.0)
    np.testing.assert_allclose(mixed.samples, clean + noise, atol=1e-12)


def test_mix_silent_clean_rejected():
    with pytest.raises(AudioError):
        mix_at_snr(AudioSignal(np.zeros(10), 8000), AudioSignal(np.ones(10), 8000), 0.0)


def test_mix_rate_mismatch():
    with pytest.raises(AudioError):
        mix_at_snr(AudioSignal(np.ones(10), 8000), AudioSignal(np.ones(10), 16000), 0.0)


def test_mix_tiles_short_noise():
    clean = AudioSignal(np.ones(7), 8000)
    noise = AudioSignal([1.0, -1.0], 8000)
    out = mix_at_snr(clean, noise, 0.0)
    np.testing.assert_allclose(out.samples - 1.0, [1, -1, 1, -1, 1, -1, 1])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-30, 30), st.integers(50, 3000), st.integers(10, 4000))
def test_mix_hits_requested_snr(seed, snr_db, n_clean, n_noise):
    rng = np.random.default_rng(seed)
    clean = AudioSignal(rng.standard_normal(n_clean) * rng.uniform(0.01, 1), 8000)
    noise = AudioSignal(rng.standard_normal(n_noise) * rng.uniform(0.01, 10), 8000)
    out = mix_at_snr(clean, noise, snr_db)
    measured = 10 * np.log10(signal_power(clean.samples) / signal_power(out.samples - clean.samples))
    assert abs(measured - snr_db) < 1e-6
