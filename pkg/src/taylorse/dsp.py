"""Time-frequency front end: STFT/iSTFT, power-law compression, WAV I/O."""

from __future__ import annotations

import csv
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_SR = 16000


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SR

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"waveform must be 1-D, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains NaN or Inf samples")

    def __len__(self):
        return self.samples.shape[0]


@dataclass(frozen=True)
class AnalysisConfig:
    win_len: int = 320
    hop: int = 160
    fft_size: int = 320
    window: str = "sqrt_hann"
    compression_beta: float = 0.5

    def __post_init__(self):
        if not (0 < self.hop <= self.win_len <= self.fft_size):
            raise ValueError("need 0 < hop <= win_len <= fft_size")
        if not (0.0 < self.compression_beta <= 1.0):
            raise ValueError("compression_beta must lie in (0, 1]")
        if self.window not in _WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; choose from {sorted(_WINDOWS)}")
        w = self.analysis_window()
        # overlap-added squared window must be a positive constant
        acc = np.zeros(self.hop)
        for start in range(0, self.win_len, self.hop):
            seg = w[start:start + self.hop] ** 2
            acc[: len(seg)] += seg
        if np.ptp(acc) > 1e-9 * acc.max() or acc.min() <= 0:
            raise ValueError(f"window {self.window!r} with hop {self.hop} is not COLA")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def analysis_window(self) -> np.ndarray:
        return _WINDOWS[self.window](self.win_len)


def _sqrt_hann(n):
    # periodic Hann: squares overlap-add to exactly 1 at 50% hop
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n))


def _rect(n):
    return np.ones(n)


_WINDOWS = {"sqrt_hann": _sqrt_hann, "rect": _rect}


@dataclass
class ComplexSpectrogram:
    """Frames x bins complex grid held as separate real/imaginary planes.

    ``n_samples`` remembers the source waveform length so that synthesis
    can trim back to it.
    """

    real: np.ndarray
    imag: np.ndarray
    n_samples: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.real = np.asarray(self.real, dtype=np.float64)
        self.imag = np.asarray(self.imag, dtype=np.float64)
        if self.real.shape != self.imag.shape:
            raise ValueError(f"real/imag shape mismatch: {self.real.shape} vs {self.imag.shape}")
        if self.real.ndim != 2:
            raise ValueError("spectrogram planes must be 2-D (frames x bins)")
        if not (np.all(np.isfinite(self.real)) and np.all(np.isfinite(self.imag))):
            raise ValueError("spectrogram contains non-finite values")

    @classmethod
    def from_complex(cls, z, n_samples=None):
        z = np.asarray(z)
        return cls(z.real.copy(), z.imag.copy(), n_samples)

    @classmethod
    def from_ri(cls, ri, n_samples=None):
        """Build from a stacked ``[2, L, K]`` array."""
        ri = np.asarray(ri)
        return cls(ri[0], ri[1], n_samples)

    def to_complex(self) -> np.ndarray:
        return self.real + 1j * self.imag

    def to_ri(self) -> np.ndarray:
        return np.stack([self.real, self.imag])

    @property
    def shape(self):
        return self.real.shape

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.real, self.imag)

    @property
    def phase(self) -> np.ndarray:
        return mag_phase(self)[1]


def _frame_layout(n, cfg):
    pad = cfg.win_len // 2
    padded = n + 2 * pad
    n_frames = 1 + -(-(padded - cfg.win_len) // cfg.hop)
    total = (n_frames - 1) * cfg.hop + cfg.win_len
    return pad, n_frames, total


def stft(wave: Waveform, cfg: AnalysisConfig = AnalysisConfig()) -> ComplexSpectrogram:
    x = wave.samples if isinstance(wave, Waveform) else np.asarray(wave, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("stft expects a mono 1-D signal")
    if np.any(~np.isfinite(x)):
        raise ValueError("signal contains NaN or Inf samples")
    n = x.shape[0]
    if n < cfg.win_len:
        raise ValueError(f"signal of {n} samples is shorter than one window ({cfg.win_len})")
    pad, n_frames, total = _frame_layout(n, cfg)
    xp = np.pad(x, (pad, pad), mode="reflect")
    xp = np.pad(xp, (0, total - xp.shape[0]))
    idx = np.arange(cfg.win_len)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    frames = xp[idx] * cfg.analysis_window()
    z = np.fft.rfft(frames, n=cfg.fft_size, axis=-1)
    return ComplexSpectrogram(z.real, z.imag, n_samples=n)


def istft(spec: ComplexSpectrogram, cfg: AnalysisConfig = AnalysisConfig(),
          length: int | None = None) -> Waveform:
    """Weighted overlap-add synthesis.

    The leading half-window of reflect padding is always removed; the result
    is cut to ``length`` (or ``spec.n_samples``) when either is known.
    """
    n_frames, n_bins = spec.shape
    if n_bins != cfg.n_bins:
        raise ValueError(f"spectrogram has {n_bins} bins but config expects {cfg.n_bins}")
    frames = np.fft.irfft(spec.to_complex(), n=cfg.fft_size, axis=-1)[:, : cfg.win_len]
    win = cfg.analysis_window()
    total = (n_frames - 1) * cfg.hop + cfg.win_len
    out = np.zeros(total)
    norm = np.zeros(total)
    for t in range(n_frames):
        s = t * cfg.hop
        out[s:s + cfg.win_len] += frames[t] * win
        norm[s:s + cfg.win_len] += win ** 2
    nz = norm > 1e-10
    out[nz] /= norm[nz]
    out = out[cfg.win_len // 2:]
    length = length if length is not None else spec.n_samples
    if length is not None:
        if length > out.shape[0]:
            raise ValueError(f"cannot trim {out.shape[0]} synthesized samples to length {length}")
        out = out[:length]
    return Waveform(out)


def mag_phase(spec: ComplexSpectrogram):
    mag = np.hypot(spec.real, spec.imag)
    phase = np.where(mag > 0, np.arctan2(spec.imag, spec.real), 0.0)
    return mag, phase


def recombine(mag, phase, n_samples=None) -> ComplexSpectrogram:
    mag = np.asarray(mag, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    if mag.shape != phase.shape:
        raise ValueError(f"magnitude/phase shape mismatch: {mag.shape} vs {phase.shape}")
    if np.any(mag < 0):
        raise ValueError("magnitude must be nonnegative")
    return ComplexSpectrogram(mag * np.cos(phase), mag * np.sin(phase), n_samples)


def compress(spec: ComplexSpectrogram, beta: float) -> ComplexSpectrogram:
    """Map magnitude to ``magnitude**beta`` keeping phase; zero stays zero."""
    if not (0.0 < beta <= 1.0):
        raise ValueError("beta must lie in (0, 1]")
    if beta == 1.0:
        return ComplexSpectrogram(spec.real.copy(), spec.imag.copy(), spec.n_samples)
    mag = spec.magnitude
    scale = np.zeros_like(mag)
    nz = mag > 0
    scale[nz] = mag[nz] ** (beta - 1.0)
    return ComplexSpectrogram(spec.real * scale, spec.imag * scale, spec.n_samples)


def decompress(spec: ComplexSpectrogram, beta: float) -> ComplexSpectrogram:
    """Inverse of :func:`compress` (magnitude raised to ``1/beta``)."""
    if not (0.0 < beta <= 1.0):
        raise ValueError("beta must lie in (0, 1]")
    mag = spec.magnitude
    scale = np.zeros_like(mag)
    nz = mag > 0
    scale[nz] = mag[nz] ** (1.0 / beta - 1.0)
    return ComplexSpectrogram(spec.real * scale, spec.imag * scale, spec.n_samples)


# --- WAV -----------------------------------------------------------------

def read_wav(path, expected_sr: int = DEFAULT_SR) -> Waveform:
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as fh:
            n_ch, width, sr, n = fh.getnchannels(), fh.getsampwidth(), fh.getframerate(), fh.getnframes()
            if fh.getcomptype() != "NONE":
                raise ValueError(f"{path}: compressed WAV ({fh.getcomptype()}) is not supported, need PCM16")
            raw = fh.readframes(n)
    except wave.Error as exc:
        raise ValueError(f"{path}: not a PCM WAV file ({exc})") from exc
    if n_ch != 1:
        raise ValueError(f"{path}: expected mono audio, got {n_ch} channels")
    if width != 2:
        raise ValueError(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
    if expected_sr is not None and sr != expected_sr:
        raise ValueError(f"{path}: sample rate {sr} Hz, expected {expected_sr} Hz (no resampling)")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return Waveform(data, sr)


def write_wav(path, wave_: Waveform) -> None:
    x = np.clip(wave_.samples, -1.0, 1.0)
    q = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(wave_.sample_rate)
        fh.writeframes(q.tobytes())


def write_spectrogram_csv(path, spec: ComplexSpectrogram) -> None:
    L, K = spec.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "bin", "real", "imag"])
        for t in range(L):
            for k in range(K):
                w.writerow([t, k, f"{spec.real[t, k]:.9g}", f"{spec.imag[t, k]:.9g}"])


def read_spectrogram_csv(path) -> ComplexSpectrogram:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    L = int(rows[:, 0].max()) + 1
    K = int(rows[:, 1].max()) + 1
    real = np.zeros((L, K))
    imag = np.zeros((L, K))
    t = rows[:, 0].astype(int)
    k = rows[:, 1].astype(int)
    real[t, k] = rows[:, 2]
    imag[t, k] = rows[:, 3]
    return ComplexSpectrogram(real, imag)
