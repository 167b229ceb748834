"""Seeded synthetic speech-like/noise mixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dsp import DEFAULT_SR, Waveform


@dataclass(frozen=True)
class MixtureRecipe:
    seed: int
    snr_db: float
    length_s: float = 1.0
    sample_rate: int = DEFAULT_SR
    lead_in_s: float = 0.1

    def __post_init__(self):
        if self.length_s <= 0 or self.lead_in_s < 0:
            raise ValueError("length_s must be positive and lead_in_s nonnegative")
        if self.lead_in_s >= self.length_s:
            raise ValueError(f"lead-in of {self.lead_in_s} s leaves no speech in a {self.length_s} s mixture")

    @property
    def n_samples(self) -> int:
        return int(round(self.length_s * self.sample_rate))


def recipe_seed(global_seed: int, index: int) -> int:
    """Order-independent per-recipe seed derived from (global seed, index)."""
    return int(np.random.SeedSequence([int(global_seed), int(index)]).generate_state(1)[0])


def make_recipes(n: int, global_seed: int, snr_lo: float = -5.0, snr_hi: float = 0.0,
                 length_s: float = 1.0, start: int = 0) -> list[MixtureRecipe]:
    out = []
    for i in range(start, start + n):
        s = recipe_seed(global_seed, i)
        snr = float(np.random.default_rng(s).uniform(snr_lo, snr_hi))
        out.append(MixtureRecipe(seed=s, snr_db=snr, length_s=length_s))
    return out


def harmonic_source(rng: np.random.Generator, n: int, sr: int, lead_in: int = 0) -> np.ndarray:
    """Sum of 3-8 harmonics of a wobbling f0 under a syllable-rate AM envelope."""
    t = np.arange(n) / sr
    n_harm = int(rng.integers(3, 9))
    f0 = rng.uniform(100.0, 250.0)
    vib_rate, vib_depth = rng.uniform(3.0, 7.0), rng.uniform(0.01, 0.06)
    glide = rng.uniform(-0.15, 0.15)
    inst_f0 = f0 * (1.0 + vib_depth * np.sin(2 * np.pi * vib_rate * t + rng.uniform(0, 2 * np.pi))
                    + glide * t / max(t[-1], 1e-9))
    phase = 2 * np.pi * np.cumsum(inst_f0) / sr
    x = np.zeros(n)
    for h in range(1, n_harm + 1):
        amp = rng.uniform(0.3, 1.0) / h ** rng.uniform(0.3, 1.0)
        x += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    am_rate = rng.uniform(2.0, 5.0)
    env = np.maximum(np.sin(2 * np.pi * am_rate * t + rng.uniform(0, 2 * np.pi)), 0.0) ** 1.5
    env = 0.15 + 0.85 * env
    if lead_in:
        ramp = np.clip((np.arange(n) - lead_in) / (0.01 * sr), 0.0, 1.0)
        env = env * ramp
    x *= env
    return x / np.sqrt(np.mean(x ** 2)) * rng.uniform(0.05, 0.15)


def tilted_noise(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    """White noise shaped by a random power-law spectral tilt."""
    w = rng.standard_normal(n)
    spec = np.fft.rfft(w)
    f = np.fft.rfftfreq(n, 1.0 / sr)
    tilt = rng.uniform(-1.0, 1.0)
    spec *= (np.maximum(f, 50.0) / 1000.0) ** (-tilt / 2.0)
    x = np.fft.irfft(spec, n=n)
    return x / np.sqrt(np.mean(x ** 2)) * 0.1


def mix_at_snr(clean: np.ndarray, noise: np.ndarray, snr_db: float):
    """Scale ``noise`` so that ``10*log10(P_clean / P_noise) == snr_db``.

    ``snr_db = inf`` returns silent noise. Returns ``(noisy, scaled_noise)``.
    """
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if clean.shape != noise.shape:
        raise ValueError(f"clean/noise length mismatch: {clean.shape} vs {noise.shape}")
    pc = np.mean(clean ** 2)
    if pc <= 0:
        raise ValueError("clean source is silent (zero power)")
    if math.isinf(snr_db) and snr_db > 0:
        scaled = np.zeros_like(noise)
    else:
        pn = np.mean(noise ** 2)
        if pn <= 0:
            raise ValueError("noise source is silent (zero power)")
        scaled = noise * np.sqrt(pc / (pn * 10.0 ** (snr_db / 10.0)))
    return clean + scaled, scaled


def synthesize_mixture(recipe: MixtureRecipe):
    """Return ``(noisy, clean, noise)`` waveforms for one recipe."""
    rng = np.random.default_rng(recipe.seed)
    n, sr = recipe.n_samples, recipe.sample_rate
    clean = harmonic_source(rng, n, sr, lead_in=int(recipe.lead_in_s * sr))
    noise = tilted_noise(rng, n, sr)
    noisy, noise = mix_at_snr(clean, noise, recipe.snr_db)
    return Waveform(noisy, sr), Waveform(clean, sr), Waveform(noise, sr)


def measured_snr(clean, noise) -> float:
    c = clean.samples if isinstance(clean, Waveform) else np.asarray(clean)
    nz = noise.samples if isinstance(noise, Waveform) else np.asarray(noise)
    return float(10.0 * np.log10(np.mean(c ** 2) / np.mean(nz ** 2)))
