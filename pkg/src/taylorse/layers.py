"""Causal building blocks: gated convs, UNet-blocks, REL/RDL and S-TCM.

Every block owns a name prefix inside a shared :class:`ParamStore`. Feature
maps are ``[N, C, T, F]``; time is never resampled, frequency follows the
stride-2 ladder produced by :func:`freq_ladder`.
"""

from __future__ import annotations

import numpy as np

from .autodiff import ParamStore, get_dtype
from .autodiff import ops


def down_pad(n_bins: int) -> int:
    """High-side frequency pad for a kernel-3 / stride-2 conv (1 for even sizes)."""
    return 1 if n_bins % 2 == 0 else 0


def down_size(n_bins: int) -> int:
    return (n_bins + down_pad(n_bins) - 3) // 2 + 1


def freq_ladder(n_bins: int, steps: int) -> list[int]:
    """Bin counts after each downsampling, e.g. 161 -> 80 -> 40 -> 20 -> 10 -> 5."""
    out = [n_bins]
    for _ in range(steps):
        if out[-1] < 3:
            raise ValueError(f"cannot downsample {out[-1]} bins further")
        out.append(down_size(out[-1]))
    return out


class Builder:
    """Registers parameters with deterministic initialization."""

    def __init__(self, store: ParamStore, rng: np.random.Generator):
        self.store = store
        self.rng = rng

    def weight(self, name, shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return self.store.add(name, self.rng.uniform(-bound, bound, shape).astype(get_dtype()))

    def const(self, name, shape, value):
        return self.store.add(name, np.full(shape, value, dtype=get_dtype()))


class Conv2d:
    def __init__(self, b: Builder, name, cin, cout, kernel, stride=(1, 1), padding=(0, 0, 0, 0), bias=True):
        kt, kf = kernel
        self.w = b.weight(f"{name}/weight", (cout, cin, kt, kf), cin * kt * kf)
        self.b = b.const(f"{name}/bias", (cout,), 0.0) if bias else None
        self.stride, self.padding = stride, padding

    def __call__(self, x):
        return ops.conv2d(x, self.w, self.b, self.stride, self.padding)


class ConvTranspose2d:
    """Frequency-upsampling transposed conv, cropped back to causal/ladder size."""

    def __init__(self, b: Builder, name, cin, cout, kernel, stride=(1, 2), f_crop=0, bias=True):
        kt, kf = kernel
        self.w = b.weight(f"{name}/weight", (cin, cout, kt, kf), cin * kt * kf)
        self.b = b.const(f"{name}/bias", (cout,), 0.0) if bias else None
        self.stride, self.f_crop = stride, f_crop

    def __call__(self, x):
        T = x.shape[2]
        y = ops.conv_transpose2d(x, self.w, self.b, self.stride)
        f_end = y.shape[3] - self.f_crop
        if y.shape[2] == T and self.f_crop == 0:
            return y
        return y[:, :, :T, :f_end]


class Conv1d:
    def __init__(self, b: Builder, name, cin, cout, kernel=1, dilation=1, bias=True):
        self.w = b.weight(f"{name}/weight", (cout, cin, kernel), cin * kernel)
        self.b = b.const(f"{name}/bias", (cout,), 0.0) if bias else None
        self.dilation = dilation

    def __call__(self, x):
        return ops.conv1d_dilated_causal(x, self.w, self.b, self.dilation)


class Norm:
    """Instance norm taken per frame so that no statistic looks ahead in time."""

    def __init__(self, b: Builder, name, channels, axes, eps=1e-5):
        self.gamma = b.const(f"{name}/gamma", (channels,), 1.0)
        self.beta = b.const(f"{name}/beta", (channels,), 0.0)
        self.axes, self.eps = axes, eps

    def __call__(self, x):
        return ops.instance_norm(x, self.gamma, self.beta, self.eps, self.axes)


class PReLU:
    def __init__(self, b: Builder, name, channels):
        self.a = b.const(f"{name}/slope", (channels,), 0.25)

    def __call__(self, x):
        return ops.prelu(x, self.a)


class GatedConv2d:
    """2-D GLU: linear conv branch times sigmoid of a gate conv branch."""

    def __init__(self, b, name, cin, cout, kernel, stride=(1, 1), padding=(0, 0, 0, 0), transpose=False, f_crop=0):
        if transpose:
            self.lin = ConvTranspose2d(b, f"{name}/linear", cin, cout, kernel, stride, f_crop)
            self.gate = ConvTranspose2d(b, f"{name}/gate", cin, cout, kernel, stride, f_crop)
        else:
            self.lin = Conv2d(b, f"{name}/linear", cin, cout, kernel, stride, padding)
            self.gate = Conv2d(b, f"{name}/gate", cin, cout, kernel, stride, padding)

    def __call__(self, x):
        return ops.glu(self.lin(x), self.gate(x))


class UNetBlock:
    """Small causal UNet over frequency with ``depth`` stride-2 levels; kernel (2, 3)."""

    def __init__(self, b, name, channels, n_bins, depth):
        self.depth = depth
        sizes = freq_ladder(n_bins, depth)
        self.down, self.up = [], []
        for j in range(depth):
            pad = down_pad(sizes[j])
            self.down.append((
                Conv2d(b, f"{name}/down{j}/conv", channels, channels, (2, 3), (1, 2), (1, 0, 0, pad)),
                Norm(b, f"{name}/down{j}/norm", channels, (3,)),
                PReLU(b, f"{name}/down{j}/act", channels),
            ))
        for j in range(depth):
            cin = channels if j == depth - 1 else 2 * channels
            self.up.append((
                ConvTranspose2d(b, f"{name}/up{j}/conv", cin, channels, (2, 3), (1, 2), down_pad(sizes[j])),
                Norm(b, f"{name}/up{j}/norm", channels, (3,)),
                PReLU(b, f"{name}/up{j}/act", channels),
            ))

    def __call__(self, x):
        skips = []
        for conv, norm, act in self.down:
            x = act(norm(conv(x)))
            skips.append(x)
        for j in reversed(range(self.depth)):
            conv, norm, act = self.up[j]
            inp = x if j == self.depth - 1 else ops.concat([x, skips[j]], axis=1)
            x = act(norm(conv(inp)))
        return x


class RecalibrationLayer:
    """REL (downsampling) or RDL (upsampling): GLU -> norm -> PReLU, plus residual UNet-block."""

    def __init__(self, b, name, cin, cout, n_bins_in, unet_depth, decode=False):
        if decode:
            n_out = n_bins_in
            crop = down_pad(n_out)
            self.glu = GatedConv2d(b, f"{name}/glu", cin, cout, (1, 3), (1, 2), transpose=True, f_crop=crop)
        else:
            n_out = down_size(n_bins_in)
            self.glu = GatedConv2d(b, f"{name}/glu", cin, cout, (1, 3), (1, 2), (0, 0, 0, down_pad(n_bins_in)))
        self.norm = Norm(b, f"{name}/norm", cout, (3,))
        self.act = PReLU(b, f"{name}/act", cout)
        self.unet = UNetBlock(b, f"{name}/unet", cout, n_out, unet_depth) if unet_depth > 0 else None
        self.n_out = n_out

    def __call__(self, x):
        k = self.act(self.norm(self.glu(x)))
        if self.unet is None:
            return k
        return k + self.unet(k)


class STCM:
    """Squeezed temporal conv module on ``[N, C, T]`` with a residual path."""

    def __init__(self, b, name, d_feat, d_hidden, kernel, dilation):
        self.inp = Conv1d(b, f"{name}/in", d_feat, d_hidden, 1, bias=False)
        self.left = (PReLU(b, f"{name}/left/act", d_hidden), Norm(b, f"{name}/left/norm", d_hidden, (1,)),
                     Conv1d(b, f"{name}/left/conv", d_hidden, d_hidden, kernel, dilation, bias=False))
        self.right = (PReLU(b, f"{name}/right/act", d_hidden), Norm(b, f"{name}/right/norm", d_hidden, (1,)),
                      Conv1d(b, f"{name}/right/conv", d_hidden, d_hidden, kernel, dilation, bias=False))
        self.out = (PReLU(b, f"{name}/out/act", d_hidden), Norm(b, f"{name}/out/norm", d_hidden, (1,)),
                    Conv1d(b, f"{name}/out/conv", d_hidden, d_feat, 1, bias=False))

    @staticmethod
    def _run(chain, x):
        for f in chain:
            x = f(x)
        return x

    def __call__(self, x):
        h = self.inp(x)
        h = ops.mul(self._run(self.left, h), ops.sigmoid(self._run(self.right, h)))
        return x + self._run(self.out, h)


def stcm_stack(b, name, d_feat, d_hidden, groups, kernel, dilations):
    return [STCM(b, f"{name}/g{g}/m{i}", d_feat, d_hidden, kernel, d)
            for g in range(groups) for i, d in enumerate(dilations)]
