"""Classical magnitude-domain baselines and the oracle residual."""

from __future__ import annotations

import numpy as np

from .dsp import ComplexSpectrogram

SPECTRAL_FLOOR = 0.002
LEAD_IN_FRAMES = 6


def _noise_magnitude(noise, shape):
    n = np.asarray(noise.magnitude if isinstance(noise, ComplexSpectrogram) else noise, dtype=np.float64)
    if np.any(n < 0):
        raise ValueError("noise magnitude estimate must be nonnegative")
    try:
        return np.broadcast_to(n, shape)
    except ValueError:
        raise ValueError(f"noise estimate of shape {n.shape} incompatible with spectrogram {shape}") from None


def spectral_subtract(x: ComplexSpectrogram, noise, floor: float = SPECTRAL_FLOOR) -> ComplexSpectrogram:
    """``max(|X| - |N|, floor * |X|)`` recombined with the noisy phase.

    ``noise`` is a magnitude grid ``[L, K]``, a per-bin profile ``[K]`` or a
    noise :class:`ComplexSpectrogram`.
    """
    mag = x.magnitude
    n = _noise_magnitude(noise, mag.shape)
    target = np.maximum(mag - n, floor * mag)
    gain = np.divide(target, mag, out=np.zeros_like(mag), where=mag > 0)
    return ComplexSpectrogram(gain * x.real, gain * x.imag, x.n_samples)


def wiener_gain(x: ComplexSpectrogram, noise_psd) -> np.ndarray:
    """Power-subtraction gain ``max(|X|^2 - psd, 0) / |X|^2`` (0 where ``|X| = 0``)."""
    psd = np.asarray(noise_psd, dtype=np.float64)
    if np.any(psd < 0):
        raise ValueError("noise PSD must be nonnegative")
    power = x.real ** 2 + x.imag ** 2
    psd = np.broadcast_to(psd, power.shape)
    return np.divide(np.maximum(power - psd, 0.0), power, out=np.zeros_like(power), where=power > 0)


def wiener_filter(x: ComplexSpectrogram, noise_psd) -> ComplexSpectrogram:
    g = wiener_gain(x, noise_psd)
    return ComplexSpectrogram(g * x.real, g * x.imag, x.n_samples)


def lead_in_noise_psd(x: ComplexSpectrogram, frames: int = LEAD_IN_FRAMES) -> np.ndarray:
    """Stationary noise PSD per bin from the first ``frames`` frames (assumed speech-free)."""
    frames = min(frames, x.shape[0])
    return (x.real[:frames] ** 2 + x.imag[:frames] ** 2).mean(axis=0)


def oracle_residual(clean: ComplexSpectrogram, coarse: ComplexSpectrogram) -> ComplexSpectrogram:
    """Complex residual ``S - coarse``; adding it back to ``coarse`` restores ``S``."""
    if clean.shape != coarse.shape:
        raise ValueError(f"shape mismatch: {clean.shape} vs {coarse.shape}")
    return ComplexSpectrogram(clean.real - coarse.real, clean.imag - coarse.imag, clean.n_samples)


def energy_fraction(grid, share: float = 0.9) -> float:
    """Smallest fraction of cells that together hold ``share`` of the energy.

    ``grid`` is a magnitude array, an RI array ``[2, L, K]`` or a spectrogram.
    Smaller means sparser.
    """
    if isinstance(grid, ComplexSpectrogram):
        e = grid.real ** 2 + grid.imag ** 2
    else:
        g = np.asarray(grid, dtype=np.float64)
        e = (g[0] ** 2 + g[1] ** 2) if (g.ndim == 3 and g.shape[0] == 2) else g ** 2
    e = np.sort(e.ravel())[::-1]
    total = e.sum()
    if total <= 0:
        return 0.0
    k = int(np.searchsorted(np.cumsum(e), share * total)) + 1
    return min(k, e.size) / e.size
