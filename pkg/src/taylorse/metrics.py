"""Scale-invariant SNR and log-spectral distance."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dsp import AnalysisConfig, Waveform, stft

SISNR_CLAMP = 100.0
LSD_FLOOR = 1e-8


def _samples(x):
    return x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)


def sisnr(estimate, reference, zero_mean: bool = True) -> float:
    """SI-SNR in dB, clamped to +/-100 dB."""
    est, ref = _samples(estimate), _samples(reference)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: {est.shape} vs {ref.shape}")
    if zero_mean:
        est = est - est.mean()
        ref = ref - ref.mean()
    ref_energy = np.dot(ref, ref)
    if ref_energy <= 0:
        raise ValueError("reference signal is all zeros")
    target = (np.dot(est, ref) / ref_energy) * ref
    err = est - target
    num, den = np.dot(target, target), np.dot(err, err)
    if den <= 0:
        return SISNR_CLAMP
    if num <= 0:
        return -SISNR_CLAMP
    return float(np.clip(10.0 * np.log10(num / den), -SISNR_CLAMP, SISNR_CLAMP))


def log_spectral_distance(estimate, reference, cfg: AnalysisConfig = AnalysisConfig(),
                          floor: float = LSD_FLOOR) -> float:
    est, ref = _samples(estimate), _samples(reference)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: {est.shape} vs {ref.shape}")
    a = np.maximum(stft(Waveform(est), cfg).magnitude, floor)
    b = np.maximum(stft(Waveform(ref), cfg).magnitude, floor)
    d = 20.0 * (np.log10(a) - np.log10(b))
    per_frame = np.sqrt(np.mean(d ** 2, axis=1))
    return float(np.sqrt(np.mean(per_frame ** 2)))


@dataclass
class MetricReport:
    utt_ids: list = field(default_factory=list)
    sisnr_db: list = field(default_factory=list)
    lsd_db: list = field(default_factory=list)

    def add(self, utt_id, sisnr_value, lsd_value):
        self.utt_ids.append(utt_id)
        self.sisnr_db.append(float(sisnr_value))
        self.lsd_db.append(float(lsd_value))

    def __len__(self):
        return len(self.utt_ids)

    @property
    def mean_sisnr(self) -> float:
        return float(np.mean(self.sisnr_db)) if self.sisnr_db else float("nan")

    @property
    def mean_lsd(self) -> float:
        return float(np.mean(self.lsd_db)) if self.lsd_db else float("nan")

    def write_csv(self, path, include_mean: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["utt_id", "sisnr_db", "lsd_db"])
            for row in zip(self.utt_ids, self.sisnr_db, self.lsd_db):
                w.writerow([row[0], f"{row[1]:.6f}", f"{row[2]:.6f}"])
            if include_mean and self.utt_ids:
                w.writerow(["mean", f"{self.mean_sisnr:.6f}", f"{self.mean_lsd:.6f}"])


def evaluate_pair(utt_id, estimate, reference, report: MetricReport, cfg=AnalysisConfig()):
    report.add(utt_id, sisnr(estimate, reference), log_spectral_distance(estimate, reference, cfg))
