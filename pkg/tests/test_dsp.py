import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from taylorse.dsp import (AnalysisConfig, ComplexSpectrogram, Waveform, compress, decompress, istft,
                          mag_phase, read_spectrogram_csv, read_wav, recombine, stft,
                          write_spectrogram_csv, write_wav)

CFG = AnalysisConfig()


def brute_force_frame(x, t, cfg=CFG):
    """DFT of frame ``t`` by explicit summation over the reflect-padded signal."""
    pad = cfg.win_len // 2
    xp = np.concatenate([x[1:pad + 1][::-1], x, x[-pad - 1:-1][::-1]])
    xp = np.concatenate([xp, np.zeros(cfg.win_len)])
    w = np.sqrt(0.5 - 0.5 * np.cos(2 * np.pi * np.arange(cfg.win_len) / cfg.win_len))
    seg = xp[t * cfg.hop:t * cfg.hop + cfg.win_len] * w
    n = np.arange(cfg.win_len)
    return np.array([np.sum(seg * np.exp(-2j * np.pi * k * n / cfg.fft_size)) for k in range(cfg.n_bins)])


def test_default_shape():
    spec = stft(Waveform(np.zeros(16000)))
    assert spec.shape == (101, 161)


def test_zero_signal_gives_zero_spectrogram():
    spec = stft(Waveform(np.zeros(4000)))
    assert not np.any(spec.real) and not np.any(spec.imag)


def test_matches_brute_force_dft(rng):
    x = rng.normal(size=3200)
    spec = stft(Waveform(x)).to_complex()
    for t in (0, 3, 10, spec.shape[0] - 1):
        np.testing.assert_allclose(spec[t], brute_force_frame(x, t), atol=1e-9)


def test_sinusoid_peaks_at_bin_20():
    n = np.arange(16000)
    spec = stft(Waveform(np.sin(2 * np.pi * 1000 * n / 16000)))
    peaks = np.argmax(spec.magnitude[2:-2], axis=1)
    assert np.all(peaks == 20)


def test_constant_frame_dc_equals_window_sum():
    spec = stft(Waveform(np.ones(960)))
    np.testing.assert_allclose(spec.magnitude[2, 0], CFG.analysis_window().sum(), rtol=1e-12)


def test_round_trip_and_zero_inverse(rng):
    x = rng.uniform(-1, 1, 16000)
    y = istft(stft(Waveform(x))).samples
    assert np.linalg.norm(y - x) / np.linalg.norm(x) <= 1e-6
    z = istft(ComplexSpectrogram(np.zeros((101, 161)), np.zeros((101, 161))), length=16000)
    assert not np.any(z.samples)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(320, 3000), seed=st.integers(0, 2**31))
def test_round_trip_any_length(n, seed):
    x = np.random.default_rng(seed).normal(size=n)
    y = istft(stft(Waveform(x))).samples
    assert y.shape == x.shape
    np.testing.assert_allclose(y, x, atol=1e-9 * max(1.0, np.abs(x).max()))


def test_linearity(rng):
    a, b = rng.normal(size=2000), rng.normal(size=2000)
    lhs = stft(Waveform(2 * a + 3 * b)).to_complex()
    rhs = 2 * stft(Waveform(a)).to_complex() + 3 * stft(Waveform(b)).to_complex()
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_rejects_short_and_nonfinite():
    with pytest.raises(ValueError, match="shorter"):
        stft(Waveform(np.zeros(100)))
    with pytest.raises(ValueError, match="NaN"):
        Waveform(np.array([0.0, np.nan]))
    with pytest.raises(ValueError, match="COLA"):
        AnalysisConfig(hop=200)


def test_istft_rejects_wrong_bins():
    with pytest.raises(ValueError, match="bins"):
        istft(ComplexSpectrogram(np.zeros((5, 100)), np.zeros((5, 100))))


def test_compress_cell():
    z = 4 * np.exp(1j * np.pi / 3)
    out = compress(ComplexSpectrogram.from_complex(np.array([[z]])), 0.5).to_complex()[0, 0]
    assert abs(abs(out) - 2.0) < 1e-12
    assert abs(np.angle(out) - np.pi / 3) < 1e-12


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (3, 7), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (3, 7), elements=st.floats(-1e3, 1e3)),
       st.floats(0.1, 1.0))
def test_compress_inverse(re, im, beta):
    s = ComplexSpectrogram(re, im)
    back = decompress(compress(s, beta), beta).to_complex()
    np.testing.assert_allclose(back, s.to_complex(), rtol=1e-9, atol=1e-9)


def test_compress_beta_one_identity_and_zero_stays_zero():
    s = ComplexSpectrogram(np.array([[0.0, 1.5]]), np.array([[0.0, -2.0]]))
    np.testing.assert_array_equal(compress(s, 1.0).to_ri(), s.to_ri())
    assert compress(s, 0.5).to_complex()[0, 0] == 0


def test_mag_phase_conventions():
    mag, ph = mag_phase(ComplexSpectrogram(np.array([[3.0, 0.0]]), np.array([[4.0, 0.0]])))
    assert mag[0, 0] == 5.0 and ph[0, 0] == np.arctan2(4, 3)
    assert mag[0, 1] == 0.0 and ph[0, 1] == 0.0
    back = recombine(mag, ph).to_complex()
    np.testing.assert_allclose(back, [[3 + 4j, 0]], atol=1e-12)
    with pytest.raises(ValueError):
        recombine(-mag, ph)


def _write_int16(path, values, sr=16000):
    import wave
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sr)
        fh.writeframes(np.asarray(values, dtype="<i2").tobytes())


def test_wav_sample_scaling(tmp_path):
    _write_int16(tmp_path / "a.wav", [16384, -32768, 0])
    np.testing.assert_array_equal(read_wav(tmp_path / "a.wav").samples, [0.5, -1.0, 0.0])


def test_wav_round_trip(tmp_path, rng):
    w = Waveform(rng.uniform(-1, 1, 5000))
    write_wav(tmp_path / "b.wav", w)
    assert np.abs(read_wav(tmp_path / "b.wav").samples - w.samples).max() <= 1 / 32768


def test_wav_errors(tmp_path):
    (tmp_path / "junk.wav").write_bytes(b"not a wav")
    with pytest.raises(ValueError):
        read_wav(tmp_path / "junk.wav")
    _write_int16(tmp_path / "sr.wav", [0, 1], sr=8000)
    with pytest.raises(ValueError, match="8000"):
        read_wav(tmp_path / "sr.wav")


def test_spectrogram_csv_round_trip(tmp_path, rng):
    s = ComplexSpectrogram(rng.normal(size=(4, 161)), rng.normal(size=(4, 161)))
    write_spectrogram_csv(tmp_path / "s.csv", s)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "frame,bin,real,imag"
    back = read_spectrogram_csv(tmp_path / "s.csv")
    np.testing.assert_allclose(back.to_ri(), s.to_ri(), rtol=1e-8)
