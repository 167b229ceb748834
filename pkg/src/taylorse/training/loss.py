"""Compressed RI loss with a magnitude constraint."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, as_tensor
from ..autodiff import ops
from ..dsp import ComplexSpectrogram, compress

MAG_EPS = 1e-12


@dataclass(frozen=True)
class LossConfig:
    beta: float = 0.5
    w_ri: float = 0.5
    w_mag: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValueError("beta must lie in (0, 1]")
        if abs(self.w_ri + self.w_mag - 1.0) > 1e-12:
            raise ValueError("w_ri + w_mag must equal 1")


def compressed_loss(est: Tensor, ref, cfg: LossConfig = LossConfig()) -> Tensor:
    """Loss between already-compressed ``[N, 2, L, K]`` RI batches (differentiable in ``est``)."""
    ref = as_tensor(ref)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    ri = ops.mean_all(ops.square(ops.sub(est, ref)))
    e2 = ops.square(est)
    mag_est = ops.sqrt(ops.add(ops.add(e2[:, 0], e2[:, 1]), MAG_EPS))
    rd = ref.data
    mag_ref = Tensor(np.sqrt(rd[:, 0] ** 2 + rd[:, 1] ** 2 + rd.dtype.type(MAG_EPS)))
    mag = ops.mean_all(ops.square(ops.sub(mag_est, mag_ref)))
    return ops.add(ops.scale(ri, cfg.w_ri), ops.scale(mag, cfg.w_mag))


def loss(s_hat: ComplexSpectrogram, s_clean: ComplexSpectrogram, cfg: LossConfig = LossConfig()) -> float:
    """Same objective on uncompressed spectrograms, evaluated in float64."""
    if s_hat.shape != s_clean.shape:
        raise ValueError(f"shape mismatch: {s_hat.shape} vs {s_clean.shape}")
    a, b = compress(s_hat, cfg.beta), compress(s_clean, cfg.beta)
    ri = 0.5 * (np.mean((a.real - b.real) ** 2) + np.mean((a.imag - b.imag) ** 2))
    ma = np.sqrt(a.real ** 2 + a.imag ** 2 + MAG_EPS)
    mb = np.sqrt(b.real ** 2 + b.imag ** 2 + MAG_EPS)
    return float(cfg.w_ri * ri + cfg.w_mag * np.mean((ma - mb) ** 2))
