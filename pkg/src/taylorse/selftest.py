"""Invariant and gradient checks runnable from the CLI (``taylorse selftest``)."""

from __future__ import annotations

import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .autodiff import grad_check, ops, precision
from .classical import oracle_residual, spectral_subtract
from .dsp import ComplexSpectrogram, Waveform, compress, decompress, istft, read_wav, stft, write_wav
from .metrics import sisnr
from .model import OrderTrace, TaylorModel, desk_config, recursion_step, superimpose
from .training.synth import make_recipes, synthesize_mixture


def _away_from_zero(rng, shape, margin=0.05):
    x = rng.normal(size=shape)
    return np.where(np.abs(x) < margin, np.sign(x + 1e-12) * margin, x)


def primitive_cases(rng: np.random.Generator):
    """``(name, fn, inputs)`` for every differentiable primitive, small random shapes."""
    n = lambda *s: rng.normal(size=s)  # noqa: E731
    return [
        ("add", ops.add, [n(2, 3, 4), n(1, 3, 1)]),
        ("sub", ops.sub, [n(2, 3, 4), n(2, 3, 4)]),
        ("mul", ops.mul, [n(2, 3, 4), n(2, 1, 4)]),
        ("scale", lambda x: ops.scale(x, -1.7), [n(3, 5)]),
        ("sqrt", ops.sqrt, [rng.uniform(0.5, 2.0, (3, 4))]),
        ("square", ops.square, [n(3, 4)]),
        ("sigmoid", ops.sigmoid, [n(2, 3, 4)]),
        ("prelu", ops.prelu, [_away_from_zero(rng, (2, 3, 4, 5)), rng.uniform(0.05, 0.5, 3)]),
        ("glu", ops.glu, [n(2, 3, 4), n(2, 3, 4)]),
        ("concat", lambda a, b: ops.concat([a, b], axis=1), [n(2, 3), n(2, 5)]),
        ("reshape", lambda x: ops.reshape(x, (4, 6)), [n(2, 3, 4)]),
        ("transpose", lambda x: ops.transpose(x, (0, 2, 1)), [n(2, 3, 4)]),
        ("getitem", lambda x: x[:, 1:, ::2], [n(2, 3, 4)]),
        ("sum", ops.sum_all, [n(3, 4)]),
        ("mean", ops.mean_all, [n(3, 4)]),
        ("instance_norm", lambda x, g, b: ops.instance_norm(x, g, b, 1e-5),
         [n(2, 3, 4, 5), rng.uniform(0.5, 1.5, 3), n(3)]),
        ("instance_norm_frame", lambda x, g, b: ops.instance_norm(x, g, b, 1e-5, axes=(3,)),
         [n(2, 3, 4, 5), rng.uniform(0.5, 1.5, 3), n(3)]),
        ("conv2d", lambda x, w, b: ops.conv2d(x, w, b, stride=(1, 2), padding=(1, 0, 0, 1)),
         [n(1, 2, 4, 5), n(3, 2, 2, 3), n(3)]),
        ("conv_transpose2d", lambda x, w, b: ops.conv_transpose2d(x, w, b, stride=(1, 2)),
         [n(1, 2, 4, 3), n(2, 3, 2, 3), n(3)]),
        ("conv1d_dilated_causal", lambda x, w, b: ops.conv1d_dilated_causal(x, w, b, dilation=2),
         [n(2, 2, 9), n(3, 2, 5), n(3)]),
    ]


def run_gradient_suite(seeds=range(20), precisions=("float32", "float64")):
    reports = []
    for prec in precisions:
        with precision(prec):
            for seed in seeds:
                for name, fn, inputs in primitive_cases(np.random.default_rng(seed)):
                    reports.append((prec, seed, grad_check(fn, inputs, seed=seed, name=f"{name}[{prec}]")))
    return reports


def randomize_params(model: TaylorModel, rng: np.random.Generator, scale: float = 0.1) -> TaylorModel:
    """Add noise to every parameter so no branch is trivially zero (as at init)."""
    for p in model.params.values():
        p.data = (p.data + scale * rng.normal(size=p.shape)).astype(p.data.dtype)
    return model


def causality_violation(model: TaylorModel, x_ri: np.ndarray, t0: int, rng) -> float:
    """Max change of outputs at frames <= t0 when every frame > t0 is replaced."""
    y1, tr1 = model.forward_batch(x_ri)
    x2 = x_ri.copy()
    x2[..., t0 + 1:, :] = rng.normal(size=x2[..., t0 + 1:, :].shape) * 3.0
    y2, tr2 = model.forward_batch(x2)
    worst = np.abs(y1[..., :t0 + 1, :] - y2[..., :t0 + 1, :]).max()
    for a, b in zip([tr1.coarse] + tr1.terms, [tr2.coarse] + tr2.terms):
        worst = max(worst, np.abs(a[..., :t0 + 1, :] - b[..., :t0 + 1, :]).max())
    return float(worst)


def _check(results, name, passed, detail=""):
    results.append((name, bool(passed), detail))


def run_selftest(quick: bool = False, stream=sys.stdout) -> bool:
    results = []
    rng = np.random.default_rng(0)
    t_start = time.time()

    errs = []
    for _ in range(5 if quick else 20):
        x = rng.uniform(-1, 1, 16000)
        y = istft(stft(Waveform(x))).samples
        errs.append(np.linalg.norm(y - x) / np.linalg.norm(x))
    _check(results, "stft round-trip", max(errs) <= 1e-6, f"max rel L2 {max(errs):.2e}")

    a, b = rng.normal(size=4000), rng.normal(size=4000)
    lhs = stft(Waveform(0.3 * a - 1.2 * b)).to_complex()
    rhs = 0.3 * stft(Waveform(a)).to_complex() - 1.2 * stft(Waveform(b)).to_complex()
    _check(results, "stft linearity", np.abs(lhs - rhs).max() <= 1e-6, f"{np.abs(lhs - rhs).max():.2e}")

    s = ComplexSpectrogram(rng.normal(size=(20, 161)), rng.normal(size=(20, 161)))
    back = decompress(compress(s, 0.5), 0.5)
    rel = np.abs(back.to_complex() - s.to_complex()).max() / np.abs(s.to_complex()).max()
    _check(results, "compress inverse", rel <= 1e-6, f"{rel:.2e}")

    with tempfile.TemporaryDirectory() as d:
        w = Waveform(rng.uniform(-1, 1, 4000))
        write_wav(Path(d) / "x.wav", w)
        err = np.abs(read_wav(Path(d) / "x.wav").samples - w.samples).max()
    _check(results, "wav round-trip", err <= 1 / 32768, f"max err {err:.2e}")

    grads = run_gradient_suite(seeds=range(2 if quick else 20))
    bad = [r for _, _, r in grads if not r.passed]
    worst = {p: max(r.max_rel_error for pp, _, r in grads if pp == p) for p in ("float32", "float64")}
    _check(results, "gradient suite", not bad,
           f"{len(grads)} checks; worst f32 {worst['float32']:.1e}, f64 {worst['float64']:.1e}"
           + (f"; failing: {bad[0].name}" if bad else ""))

    with precision("float64"):
        for q in (0, 1, 3):
            model = randomize_params(TaylorModel(desk_config(q=q, seed=q)), rng)
            x = rng.normal(size=(1, 2, 12, 161))
            v = max(causality_violation(model, x, int(t0), rng) for t0 in rng.integers(0, 11, 2 if quick else 4))
            _check(results, f"causality Q={q}", v <= 1e-12, f"max change {v:.1e}")

    terms = [np.full((2, 3, 4), 6.0) for _ in range(3)]
    sup = superimpose(OrderTrace(np.zeros((2, 3, 4)), terms))
    _check(results, "factorial superposition", np.all(sup == 10.0), "Q=3, T=6 -> 10")
    t3 = recursion_step(np.ones((2, 3, 4)), np.zeros((2, 3, 4)), 2)
    _check(results, "recursion step", np.all(t3 == 2.0), "q=2, T=1, P=0 -> 2")

    shared = {q: TaylorModel(desk_config(q=q, shared=True)).count_params() for q in range(1, 6)}
    indep = {q: TaylorModel(desk_config(q=q)).count_params() for q in range(0, 6)}
    steps = {indep[q + 1] - indep[q] for q in range(1, 5)}
    _check(results, "param-count laws", len(set(shared.values())) == 1 and len(steps) == 1,
           f"shared {shared[1]}, non-shared step {steps}")

    recon = []
    for r in make_recipes(3, 11):
        noisy, clean, noise = synthesize_mixture(r)
        X, S, N = stft(noisy), stft(clean), stft(noise)
        coarse = spectral_subtract(X, N.magnitude)
        full = ComplexSpectrogram(coarse.real + oracle_residual(S, coarse).real,
                                  coarse.imag + oracle_residual(S, coarse).imag, S.n_samples)
        y = istft(full).samples
        recon.append(np.linalg.norm(y - clean.samples) / np.linalg.norm(clean.samples))
    _check(results, "oracle residual identity", max(recon) <= 1e-6, f"max rel L2 {max(recon):.2e}")

    sig = rng.normal(size=1000)
    est = sig + 0.1 * rng.normal(size=1000)
    a, b = sisnr(est, sig), sisnr(-3.0 * est, sig)
    _check(results, "sisnr scale invariance", math.isclose(a, b, rel_tol=1e-9), f"{a:.4f} vs {b:.4f} dB")

    ok = all(p for _, p, _ in results)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name:28s} {detail}", file=stream)
    print(f"{'all checks passed' if ok else 'SELFTEST FAILED'} ({time.time() - t_start:.1f} s)", file=stream)
    return ok
