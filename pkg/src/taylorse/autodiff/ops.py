"""Differentiable primitives.

Every op takes/returns :class:`Tensor` and registers a backward closure that
maps the output gradient to one gradient per parent (``None`` when a parent
needs none). Tensors are laid out as ``[N, C, T, F]`` (2-D feature maps) or
``[N, C, T]`` (frame sequences); time is axis 2 in both.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, as_tensor, make_result


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# --- elementwise ---------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return make_result(a.data + b.data, (a, b),
                       lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return make_result(a.data - b.data, (a, b),
                       lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    def bw(g):
        return (_unbroadcast(g * bd, ad.shape) if a.requires_grad else None,
                _unbroadcast(g * ad, bd.shape) if b.requires_grad else None)

    return make_result(ad * bd, (a, b), bw, "mul")


def scale(x, c: float) -> Tensor:
    x = as_tensor(x)
    c = x.dtype.type(c)
    return make_result(x.data * c, (x,), lambda g: (g * c,), "scale")


def sqrt(x) -> Tensor:
    x = as_tensor(x)
    out = np.sqrt(x.data)
    return make_result(out, (x,), lambda g: (g * 0.5 / out,), "sqrt")


def square(x) -> Tensor:
    x = as_tensor(x)
    xd = x.data
    return make_result(xd * xd, (x,), lambda g: (g * 2 * xd,), "square")


def _sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1 / (1 + e), e / (1 + e)).astype(x.dtype, copy=False)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = _sigmoid(x.data)
    return make_result(s, (x,), lambda g: (g * s * (1 - s),), "sigmoid")


def prelu(x, a) -> Tensor:
    """``x`` where ``x >= 0`` else ``a * x``; ``a`` holds one slope per channel (axis 1)."""
    x, a = as_tensor(x), as_tensor(a)
    if a.ndim != 1 or a.shape[0] not in (1, x.shape[1]):
        raise ValueError(f"prelu slope shape {a.shape} incompatible with input {x.shape}")
    bshape = (1, a.shape[0]) + (1,) * (x.ndim - 2)
    slope = np.where(x.data < 0, a.data.reshape(bshape), x.dtype.type(1))
    xd = x.data

    def bw(g):
        gx = g * slope if x.requires_grad else None
        ga = None
        if a.requires_grad:
            gneg = np.minimum(xd, 0) * g
            axes = tuple(i for i in range(xd.ndim) if bshape[i] == 1)
            ga = gneg.sum(axis=axes).reshape(a.shape)
        return gx, ga

    return make_result(xd * slope, (x, a), bw, "prelu")


def glu(a, b) -> Tensor:
    """Gated linear unit: ``a * sigmoid(b)`` for two equally shaped branches."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"glu branch shapes differ: {a.shape} vs {b.shape}")
    s = _sigmoid(b.data)
    ad = a.data

    def bw(g):
        return g * s, g * ad * s * (1 - s)

    return make_result(ad * s, (a, b), bw, "glu")


# --- reductions and shape ------------------------------------------------

def sum_all(x) -> Tensor:
    x = as_tensor(x)
    shape = x.shape
    return make_result(np.asarray(x.data.sum(), dtype=x.dtype), (x,),
                       lambda g: (np.broadcast_to(g, shape).copy(),), "sum")


def mean_all(x) -> Tensor:
    x = as_tensor(x)
    shape, n = x.shape, x.size
    return make_result(np.asarray(x.data.mean(), dtype=x.dtype), (x,),
                       lambda g: (np.broadcast_to(g / n, shape).astype(x.dtype),), "mean")


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    old = x.shape
    return make_result(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),), "reshape")


def transpose(x, axes) -> Tensor:
    x = as_tensor(x)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return make_result(np.ascontiguousarray(x.data.transpose(axes)), (x,),
                       lambda g: (np.ascontiguousarray(g.transpose(inv)),), "transpose")


def getitem(x, idx) -> Tensor:
    x = as_tensor(x)
    shape, dtype = x.shape, x.dtype

    def bw(g):
        out = np.zeros(shape, dtype=dtype)
        out[idx] = g
        return (out,)

    return make_result(np.ascontiguousarray(x.data[idx]), (x,), bw, "getitem")


def concat(xs, axis: int) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    ref = xs[0].shape
    for x in xs[1:]:
        if x.ndim != len(ref) or any(
                d != r for i, (d, r) in enumerate(zip(x.shape, ref)) if i != axis % len(ref)):
            raise ValueError(f"concat shape mismatch off axis {axis}: {ref} vs {x.shape}")
    bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]

    def bw(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_result(np.concatenate([x.data for x in xs], axis=axis), tuple(xs), bw, "concat")


# --- normalization -------------------------------------------------------

def instance_norm(x, gamma, beta, eps: float = 1e-5, axes=(2, 3)) -> Tensor:
    """Normalize over ``axes`` per remaining index, then per-channel affine.

    The default normalizes each (sample, channel) plane over time and
    frequency; ``axes=(3,)`` normalizes each frame on its own, which keeps
    the op causal in time.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if eps <= 0:
        raise ValueError("eps must be positive")
    axes = tuple(a % x.ndim for a in axes)
    n = int(np.prod([x.shape[a] for a in axes]))
    bshape = (1, x.shape[1]) + (1,) * (x.ndim - 2)
    mu = x.data.mean(axis=axes, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + x.dtype.type(eps))
    xhat = xc * inv
    gb = gamma.data.reshape(bshape)
    out = gb * xhat + beta.data.reshape(bshape)

    def bw(g):
        gx = None
        if x.requires_grad:
            dxh = g * gb
            gx = inv / n * (n * dxh - dxh.sum(axis=axes, keepdims=True)
                            - xhat * (dxh * xhat).sum(axis=axes, keepdims=True))
        gg = _unbroadcast(g * xhat, bshape).reshape(gamma.shape) if gamma.requires_grad else None
        gbeta = _unbroadcast(g, bshape).reshape(beta.shape) if beta.requires_grad else None
        return gx, gg, gbeta

    return make_result(out, (x, gamma, beta), bw, "instance_norm")


# --- convolutions --------------------------------------------------------

def _tap(start, step, count):
    return slice(start, start + step * (count - 1) + 1, step)


def conv2d(x, w, b=None, stride=(1, 1), padding=(0, 0, 0, 0), dilation=(1, 1)) -> Tensor:
    """Cross-correlation of ``x[N,Cin,T,F]`` with ``w[Cout,Cin,kt,kf]``.

    ``padding`` is ``(t_past, t_future, f_low, f_high)`` zeros; causal
    layers pass ``t_future = 0``.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 4 or w.ndim != 4:
        raise ValueError(f"conv2d expects 4-D input and weight, got {x.shape}, {w.shape}")
    N, cin, T, F = x.shape
    cout, wcin, kt, kf = w.shape
    if wcin != cin:
        raise ValueError(f"conv2d channel mismatch: input has {cin}, weight expects {wcin}")
    st, sf = stride
    dt, df = dilation
    tl, tr, fl, fr = padding
    xc = x.data.transpose(1, 0, 2, 3)
    if any(padding):
        xc = np.pad(xc, ((0, 0), (0, 0), (tl, tr), (fl, fr)))
    Tp, Fp = xc.shape[2], xc.shape[3]
    To = (Tp - dt * (kt - 1) - 1) // st + 1
    Fo = (Fp - df * (kf - 1) - 1) // sf + 1
    if To <= 0 or Fo <= 0:
        raise ValueError(f"conv2d output would be empty for input {x.shape} and kernel {w.shape}")
    taps = [(_tap(i * dt, st, To), _tap(j * df, sf, Fo)) for i in range(kt) for j in range(kf)]
    ntap = len(taps)
    # im2col: rows ordered (tap, cin)
    if ntap == 1 and To == Tp and Fo == Fp:
        cols = np.ascontiguousarray(xc).reshape(cin, -1)
    else:
        cols = np.empty((ntap, cin, N, To, Fo), dtype=x.dtype)
        for k, (ts, fs) in enumerate(taps):
            cols[k] = xc[:, :, ts, fs]
        cols = cols.reshape(ntap * cin, -1)
    w2 = w.data.transpose(0, 2, 3, 1).reshape(cout, ntap * cin)
    out = w2 @ cols
    if b is not None:
        b = as_tensor(b)
        out += b.data[:, None]
    out = out.reshape(cout, N, To, Fo).transpose(1, 0, 2, 3)
    parents = (x, w) if b is None else (x, w, b)

    def bw(g):
        g2 = g.transpose(1, 0, 2, 3).reshape(cout, -1)
        gw = None
        if w.requires_grad:
            gw = (g2 @ cols.T).reshape(cout, kt, kf, cin).transpose(0, 3, 1, 2)
        gx = None
        if x.requires_grad:
            gcols = (w2.T @ g2).reshape(ntap, cin, N, To, Fo)
            gxc = np.zeros((cin, N, Tp, Fp), dtype=g.dtype)
            for k, (ts, fs) in enumerate(taps):
                gxc[:, :, ts, fs] += gcols[k]
            gx = np.ascontiguousarray(gxc[:, :, tl:tl + T, fl:fl + F].transpose(1, 0, 2, 3))
        grads = (gx, gw)
        if b is not None:
            grads += (g2.sum(axis=1) if b.requires_grad else None,)
        return grads

    return make_result(np.ascontiguousarray(out), parents, bw, "conv2d")


def conv_transpose2d(x, w, b=None, stride=(1, 1)) -> Tensor:
    """Transposed convolution of ``x[N,Cin,T,F]`` with ``w[Cin,Cout,kt,kf]``.

    Returns the full ``[(T-1)*st + kt, (F-1)*sf + kf]`` output; callers crop
    trailing frames to stay causal.
    """
    x, w = as_tensor(x), as_tensor(w)
    N, cin, T, F = x.shape
    wcin, cout, kt, kf = w.shape
    if wcin != cin:
        raise ValueError(f"conv_transpose2d channel mismatch: input has {cin}, weight expects {wcin}")
    st, sf = stride
    To, Fo = (T - 1) * st + kt, (F - 1) * sf + kf
    x2 = np.ascontiguousarray(x.data.transpose(1, 0, 2, 3)).reshape(cin, -1)
    taps = [(_tap(i, st, T), _tap(j, sf, F)) for i in range(kt) for j in range(kf)]
    ntap = len(taps)
    # rows ordered (tap, cout)
    w2 = w.data.transpose(2, 3, 1, 0).reshape(ntap * cout, cin)
    y = (w2 @ x2).reshape(ntap, cout, N, T, F)
    out = np.zeros((cout, N, To, Fo), dtype=x.dtype)
    for k, (ts, fs) in enumerate(taps):
        out[:, :, ts, fs] += y[k]
    if b is not None:
        b = as_tensor(b)
        out += b.data.reshape(-1, 1, 1, 1)
    parents = (x, w) if b is None else (x, w, b)

    def bw(g):
        gc = g.transpose(1, 0, 2, 3)
        cols = np.empty((ntap, cout, N, T, F), dtype=g.dtype)
        for k, (ts, fs) in enumerate(taps):
            cols[k] = gc[:, :, ts, fs]
        cols = cols.reshape(ntap * cout, -1)
        gx = None
        if x.requires_grad:
            gx = np.ascontiguousarray((w2.T @ cols).reshape(cin, N, T, F).transpose(1, 0, 2, 3))
        gw = None
        if w.requires_grad:
            gw = (cols @ x2.T).reshape(kt, kf, cout, cin).transpose(3, 2, 0, 1)
        grads = (gx, gw)
        if b is not None:
            grads += (g.sum(axis=(0, 2, 3)) if b.requires_grad else None,)
        return grads

    return make_result(np.ascontiguousarray(out.transpose(1, 0, 2, 3)), parents, bw, "conv_transpose2d")


def conv1d_dilated_causal(x, w, b=None, dilation: int = 1) -> Tensor:
    """Causal dilated 1-D convolution of ``x[N,C,T]`` with ``w[Cout,Cin,k]``.

    The past is zero-padded by ``(k-1)*dilation`` frames, so output frame t
    sees input frames ``t-(k-1)*d .. t`` only.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 3 or w.ndim != 3:
        raise ValueError(f"conv1d expects 3-D input and weight, got {x.shape}, {w.shape}")
    if dilation < 1:
        raise ValueError("dilation must be >= 1")
    k = w.shape[2]
    y = conv2d(reshape(x, x.shape + (1,)), reshape(w, w.shape + (1,)), b,
               padding=((k - 1) * dilation, 0, 0, 0), dilation=(dilation, 1))
    return reshape(y, y.shape[:3])
