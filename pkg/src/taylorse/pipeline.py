"""Waveform-level enhancement and per-order inspection."""

from __future__ import annotations

import numpy as np

from .classical import lead_in_noise_psd, spectral_subtract, wiener_filter
from .dsp import AnalysisConfig, ComplexSpectrogram, Waveform, compress, istft, stft
from .model import TaylorModel, enhance_spectrogram, forward

CLASSICAL_METHODS = ("subtract", "wiener")


def enhance_waveform(wave: Waveform, model: TaylorModel, acfg: AnalysisConfig = AnalysisConfig()) -> Waveform:
    # learned biases would otherwise synthesize output from digital silence
    if not np.any(wave.samples):
        return Waveform(np.zeros_like(wave.samples), wave.sample_rate)
    spec = stft(wave, acfg)
    out = istft(enhance_spectrogram(spec, model), acfg, length=len(wave))
    return Waveform(out.samples, wave.sample_rate)


def enhance_classical(wave: Waveform, method: str, acfg: AnalysisConfig = AnalysisConfig()) -> Waveform:
    """Baselines with a lead-in noise estimate (first frames assumed noise-only)."""
    spec = stft(wave, acfg)
    psd = lead_in_noise_psd(spec)
    if method == "subtract":
        est = spectral_subtract(spec, np.sqrt(psd))
    elif method == "wiener":
        est = wiener_filter(spec, psd)
    else:
        raise ValueError(f"unknown classical method {method!r}; choose from {CLASSICAL_METHODS}")
    out = istft(est, acfg, length=len(wave))
    return Waveform(out.samples, wave.sample_rate)


def order_exports(wave: Waveform, model: TaylorModel, acfg: AnalysisConfig = AnalysisConfig()):
    """Named compressed-domain grids of one forward pass, in export order.

    Returns ``[("order_0", coarse), ("order_1", T1/1!), ..., ("residual_sum", ...),
    ("estimate", ...)]`` as :class:`ComplexSpectrogram` objects. The order
    grids sum to the estimate.
    """
    x = compress(stft(wave, acfg), model.config.beta)
    est, trace = forward(x, model)
    grids = [("order_0", trace.coarse)]
    grids += [(f"order_{q}", t) for q, t in enumerate(trace.weighted_terms(), 1)]
    if trace.q:
        resid = trace.weighted_terms()[0]
        for t in trace.weighted_terms()[1:]:
            resid = resid + t
    else:
        resid = np.zeros_like(trace.coarse)
    grids.append(("residual_sum", resid))
    grids.append(("estimate", trace.estimate))
    return [(name, ComplexSpectrogram.from_ri(g)) for name, g in grids]
