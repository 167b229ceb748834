"""Taylor-unfolding enhancement network.

A magnitude-gain network produces the coarse spectrum ``M * X`` (noisy phase
kept); Q derivative modules then build higher-order terms with the
recursion ``T[q+1] = q * T[q] + P[q]`` and the estimate is the factorial
superposition ``coarse + sum_q T[q] / q!``.

The network works in whatever spectral domain it is fed. The training and
enhancement pipelines feed power-law compressed spectra (see
:func:`enhance_spectrogram`).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .autodiff import ParamStore, Tensor, get_dtype
from .autodiff import ops
from .dsp import ComplexSpectrogram, compress, decompress
from .layers import (
    Builder,
    Conv1d,
    Conv2d,
    GatedConv2d,
    Norm,
    PReLU,
    RecalibrationLayer,
    STCM,
    freq_ladder,
)


@dataclass(frozen=True)
class TaylorConfig:
    q: int = 3
    shared_high_order: bool = False
    channels: int = 64
    unet_depths: tuple = (4, 3, 2, 1, 0)
    stcm_groups: int = 2
    stcm_per_group: int = 4
    stcm_kernel: int = 5
    stcm_dilations: tuple = (1, 2, 5, 9)
    stcm_channels: int = 64
    deriv_channels: int = 256
    bins: int = 161
    beta: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "unet_depths", tuple(int(u) for u in self.unet_depths))
        object.__setattr__(self, "stcm_dilations", tuple(int(d) for d in self.stcm_dilations))
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if any(a < b for a, b in zip(self.unet_depths, self.unet_depths[1:])):
            raise ValueError(f"unet_depths must be nonincreasing, got {self.unet_depths}")
        if not self.stcm_dilations or min(self.stcm_dilations) < 1:
            raise ValueError("stcm_dilations must be positive")
        if self.channels < 4 or self.channels % 4:
            raise ValueError("channels must be a positive multiple of 4")
        if not (0.0 < self.beta <= 1.0):
            raise ValueError("beta must lie in (0, 1]")
        freq_ladder(self.bins, len(self.unet_depths))

    @property
    def residual_channels(self) -> int:
        return self.channels // 4

    def dilation_schedule(self) -> list[int]:
        return [self.stcm_dilations[i % len(self.stcm_dilations)] for i in range(self.stcm_per_group)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["unet_depths"] = list(self.unet_depths)
        d["stcm_dilations"] = list(self.stcm_dilations)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TaylorConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


def desk_config(q: int = 3, shared: bool = False, **overrides) -> TaylorConfig:
    """Small preset used by tests and the desk-scale training runs."""
    base = TaylorConfig(q=q, shared_high_order=shared, channels=16, unet_depths=(2, 1, 0),
                        stcm_groups=1, stcm_channels=32, deriv_channels=64)
    return replace(base, **overrides)


class ZeroOrderNet:
    """U^2 encoder, S-TCN bottleneck, U^2 decoder and a sigmoid gain head."""

    def __init__(self, b: Builder, cfg: TaylorConfig, name="zero"):
        C = cfg.channels
        ladder = freq_ladder(cfg.bins, len(cfg.unet_depths))
        self.encoder = [
            RecalibrationLayer(b, f"{name}/enc{i}", 1 if i == 0 else C, C, ladder[i], u)
            for i, u in enumerate(cfg.unet_depths)
        ]
        d_feat = C * ladder[-1]
        self.tcn = [
            STCM(b, f"{name}/tcn/g{g}/m{i}", d_feat, cfg.stcm_channels, cfg.stcm_kernel, d)
            for g in range(cfg.stcm_groups) for i, d in enumerate(cfg.dilation_schedule())
        ]
        self.decoder = [
            RecalibrationLayer(b, f"{name}/dec{i}", 2 * C, C, ladder[i], u, decode=True)
            for i, u in enumerate(cfg.unet_depths)
        ]
        self.head = Conv2d(b, f"{name}/head", C, 1, (1, 1))

    def __call__(self, mag: Tensor) -> Tensor:
        """``mag[N,1,T,K] -> gain[N,1,T,K]`` with values in (0, 1)."""
        x = mag
        skips = []
        for layer in self.encoder:
            x = layer(x)
            skips.append(x)
        N, C, T, F = x.shape
        h = ops.reshape(ops.transpose(x, (0, 1, 3, 2)), (N, C * F, T))
        for m in self.tcn:
            h = m(h)
        x = ops.transpose(ops.reshape(h, (N, C, F, T)), (0, 1, 3, 2))
        for i in reversed(range(len(self.decoder))):
            x = self.decoder[i](ops.concat([x, skips[i]], axis=1))
        return ops.sigmoid(self.head(x))


class HighOrderEncoder:
    """Three causal GLU blocks on the RI planes, full frequency resolution."""

    def __init__(self, b: Builder, cfg: TaylorConfig, name="high/encoder"):
        cr = cfg.residual_channels
        self.blocks = []
        for i in range(3):
            cin = 2 if i == 0 else cr
            self.blocks.append((
                GatedConv2d(b, f"{name}/b{i}/glu", cin, cr, (2, 3), padding=(1, 0, 1, 1)),
                Norm(b, f"{name}/b{i}/norm", cr, (3,)),
                PReLU(b, f"{name}/b{i}/act", cr),
            ))

    def __call__(self, x_ri: Tensor) -> Tensor:
        x = x_ri
        for glu, norm, act in self.blocks:
            x = act(norm(glu(x)))
        return x


class DerivativeModule:
    """Concat(T_q, R) -> 1-D conv -> S-TCMs -> linear map to RI planes."""

    def __init__(self, b: Builder, cfg: TaylorConfig, name):
        K = cfg.bins
        self.bins = K
        self.inp = Conv1d(b, f"{name}/in", (2 + cfg.residual_channels) * K, cfg.deriv_channels, 1)
        self.tcms = [
            STCM(b, f"{name}/tcn/g{g}/m{i}", cfg.deriv_channels, cfg.stcm_channels, cfg.stcm_kernel, d)
            for g in range(cfg.stcm_groups) for i, d in enumerate(cfg.dilation_schedule())
        ]
        self.out = Conv1d(b, f"{name}/out", cfg.deriv_channels, 2 * K, 1)
        # every T(q) starts at zero, so training begins from the 0th-order estimate
        self.out.w.data[...] = 0.0

    def __call__(self, t_q: Tensor, r: Tensor) -> Tensor:
        x = ops.concat([t_q, r], axis=1)
        N, C, T, K = x.shape
        h = self.inp(ops.reshape(ops.transpose(x, (0, 1, 3, 2)), (N, C * K, T)))
        for m in self.tcms:
            h = m(h)
        y = self.out(h)
        return ops.transpose(ops.reshape(y, (N, 2, K, T)), (0, 1, 3, 2))


@dataclass
class OrderTrace:
    """Per-order terms of one forward pass, as ``[..., 2, L, K]`` RI arrays.

    ``coarse`` is the 0th-order term; ``terms[q-1]`` is the unweighted
    ``T(q)``; ``estimate`` is their factorial superposition.
    """

    coarse: np.ndarray
    terms: list = field(default_factory=list)
    estimate: np.ndarray | None = None

    @property
    def q(self) -> int:
        return len(self.terms)

    def weighted_terms(self) -> list[np.ndarray]:
        return [t * factorial_weight(q, t.dtype) for q, t in enumerate(self.terms, 1)]

    def select(self, n: int) -> "OrderTrace":
        """Trace of batch item ``n``."""
        est = None if self.estimate is None else self.estimate[n]
        return OrderTrace(self.coarse[n], [t[n] for t in self.terms], est)


def factorial_weight(q: int, dtype=np.float64):
    return np.dtype(dtype).type(1.0 / math.factorial(q))


def recursion_step(t_q, p_q, q: int):
    """``q * T_q + P_q`` for Tensors or arrays."""
    if isinstance(t_q, Tensor) or isinstance(p_q, Tensor):
        return ops.add(ops.scale(t_q, float(q)), p_q)
    t_q, p_q = np.asarray(t_q), np.asarray(p_q)
    if t_q.shape != p_q.shape:
        raise ValueError(f"shape mismatch: {t_q.shape} vs {p_q.shape}")
    return t_q * t_q.dtype.type(q) + p_q


def superimpose(trace: OrderTrace) -> np.ndarray:
    if trace.coarse is None:
        raise ValueError("trace has no coarse term")
    if any(t is None for t in trace.terms):
        raise ValueError("trace is missing high-order terms")
    s = trace.coarse
    for q, t in enumerate(trace.terms, 1):
        if t.shape != s.shape:
            raise ValueError(f"term {q} has shape {t.shape}, expected {s.shape}")
        s = s + t * factorial_weight(q, t.dtype)
    return s


class TaylorModel:
    def __init__(self, cfg: TaylorConfig, params: ParamStore | None = None):
        self.config = cfg
        self.params = ParamStore()
        b = Builder(self.params, np.random.default_rng(cfg.seed))
        self.zero = ZeroOrderNet(b, cfg)
        self.encoder = None
        self.derivs = []
        if cfg.q > 0:
            self.encoder = HighOrderEncoder(b, cfg)
            if cfg.shared_high_order:
                shared = DerivativeModule(b, cfg, "high/deriv_shared")
                self.derivs = [shared] * cfg.q
            else:
                self.derivs = [DerivativeModule(b, cfg, f"high/deriv{q}") for q in range(cfg.q)]
        if params is not None:
            self.load_state(params)

    def load_state(self, values: dict) -> None:
        missing = set(self.params) - set(values)
        extra = set(values) - set(self.params)
        if missing or extra:
            raise ValueError(f"parameter mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for name in self.params:
            v = values[name]
            v = v.data if isinstance(v, Tensor) else np.asarray(v)
            if v.shape != self.params[name].shape:
                raise ValueError(f"{name}: shape {v.shape} != {self.params[name].shape}")
            self.params[name].data = v.astype(get_dtype()).copy()

    def count_params(self) -> int:
        return self.params.count()

    # --- stages ----------------------------------------------------------

    def gain(self, mag: Tensor) -> Tensor:
        return self.zero(mag)

    def encode(self, x_ri: Tensor) -> Tensor:
        if self.encoder is None:
            raise ValueError("a Q=0 model has no high-order encoder")
        return self.encoder(x_ri)

    def derivative(self, t_q: Tensor, r: Tensor, q: int) -> Tensor:
        if not 0 <= q < self.config.q:
            raise ValueError(f"order index {q} out of range for Q={self.config.q}")
        return self.derivs[q](t_q, r)

    def forward_tensor(self, x_ri: Tensor):
        """``x_ri[N,2,L,K] -> (estimate Tensor, coarse Tensor, [T(1..Q)] Tensors)``."""
        if x_ri.ndim != 4 or x_ri.shape[1] != 2 or x_ri.shape[3] != self.config.bins:
            raise ValueError(f"expected input [N, 2, L, {self.config.bins}], got {x_ri.shape}")
        if not np.all(np.isfinite(x_ri.data)):
            raise ValueError("input spectrum contains non-finite values")
        xd = x_ri.data
        mag = Tensor(np.sqrt(xd[:, :1] ** 2 + xd[:, 1:] ** 2))
        m = self.gain(mag)
        coarse = ops.mul(m, x_ri)
        s = coarse
        terms = []
        if self.config.q > 0:
            r = self.encode(x_ri)
            t = coarse
            for q in range(self.config.q):
                t = recursion_step(t, self.derivative(t, r, q), q)
                terms.append(t)
            for q, t in enumerate(terms, 1):
                s = ops.add(s, ops.scale(t, 1.0 / math.factorial(q)))
        return s, coarse, terms

    def forward_batch(self, x_ri: np.ndarray):
        """Inference on ``[N,2,L,K]`` arrays; returns ``(estimate, OrderTrace)``."""
        s, coarse, terms = self.forward_tensor(Tensor(np.asarray(x_ri, dtype=get_dtype())))
        trace = OrderTrace(coarse.data, [t.data for t in terms], s.data)
        return s.data, trace


# --- spectrogram-level API ----------------------------------------------

def _batch(spec: ComplexSpectrogram) -> np.ndarray:
    return spec.to_ri()[None].astype(get_dtype())


def zero_order_forward(mag: np.ndarray, model: TaylorModel) -> np.ndarray:
    mag = np.asarray(mag)
    if np.any(~np.isfinite(mag)):
        raise ValueError("magnitude contains non-finite values")
    if np.any(mag < 0):
        raise ValueError("magnitude must be nonnegative")
    return model.gain(Tensor(mag[None, None].astype(get_dtype()))).data[0, 0]


def coarse_spectrum(gain: np.ndarray, x: ComplexSpectrogram) -> ComplexSpectrogram:
    gain = np.asarray(gain)
    if gain.shape != x.shape:
        raise ValueError(f"gain shape {gain.shape} does not match spectrogram {x.shape}")
    return ComplexSpectrogram(gain * x.real, gain * x.imag, x.n_samples)


def high_order_encode(x_ri: np.ndarray, model: TaylorModel) -> np.ndarray:
    x_ri = np.asarray(x_ri)
    if x_ri.ndim != 3 or x_ri.shape[0] != 2:
        raise ValueError(f"expected RI planes [2, L, K], got {x_ri.shape}")
    return model.encode(Tensor(x_ri[None].astype(get_dtype()))).data[0]


def derivative_step(t_q: np.ndarray, r: np.ndarray, q: int, model: TaylorModel) -> np.ndarray:
    t_q = np.asarray(t_q)
    if t_q.ndim != 3 or t_q.shape[0] != 2:
        raise ValueError(f"expected T_q as [2, L, K], got {t_q.shape}")
    dt = get_dtype()
    return model.derivative(Tensor(t_q[None].astype(dt)), Tensor(np.asarray(r)[None].astype(dt)), q).data[0]


def forward(x: ComplexSpectrogram, model: TaylorModel):
    """Run the model on one spectrogram; returns ``(S_hat, OrderTrace)``."""
    est, trace = model.forward_batch(_batch(x))
    trace = trace.select(0)
    return ComplexSpectrogram.from_ri(est[0], x.n_samples), trace


def enhance_spectrogram(x: ComplexSpectrogram, model: TaylorModel) -> ComplexSpectrogram:
    """Compress, run the model, decompress."""
    beta = model.config.beta
    est, _ = forward(compress(x, beta), model)
    return decompress(est, beta)


def count_params(model: TaylorModel) -> int:
    return model.count_params()
