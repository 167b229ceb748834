"""Tensor, tape and parameter store for reverse-mode differentiation."""

from __future__ import annotations

import contextlib
from collections.abc import Iterator, MutableMapping

import numpy as np

_STATE = {"dtype": np.float32, "debug": False}


def get_dtype():
    return _STATE["dtype"]


def set_precision(name: str) -> None:
    if name not in ("float32", "float64"):
        raise ValueError(f"precision must be 'float32' or 'float64', got {name!r}")
    _STATE["dtype"] = np.dtype(name).type


@contextlib.contextmanager
def precision(name: str):
    """Temporarily switch the storage dtype of newly created tensors."""
    old = _STATE["dtype"]
    set_precision(name)
    try:
        yield
    finally:
        _STATE["dtype"] = old


@contextlib.contextmanager
def debug_mode(enabled: bool = True):
    """Raise ``FloatingPointError`` as soon as any op produces NaN/Inf."""
    old = _STATE["debug"]
    _STATE["debug"] = enabled
    try:
        yield
    finally:
        _STATE["debug"] = old


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None, op=""):
        if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64):
            self.data = data
        else:
            self.data = np.asarray(data, dtype=get_dtype())
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # arithmetic sugar; implementations live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __getitem__(self, idx):
        from . import ops
        return ops.getitem(self, idx)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from . import ops
        return ops.transpose(self, axes)


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=get_dtype()))


def tensor(data, requires_grad=False) -> Tensor:
    return Tensor(np.array(data, dtype=get_dtype()), requires_grad=requires_grad)


def make_result(data, parents, backward_fn, op):
    """Wrap an op output, recording it only if some parent needs a gradient."""
    if _STATE["debug"] and not np.all(np.isfinite(data)):
        raise FloatingPointError(f"non-finite values produced by {op}")
    if any(p.requires_grad for p in parents):
        return Tensor(data, True, tuple(parents), backward_fn, op)
    return Tensor(data, op=op)


class Tape:
    """Recorded computation reachable from one output, in topological order."""

    def __init__(self, nodes):
        self.nodes = nodes

    @classmethod
    def from_output(cls, out: Tensor) -> "Tape":
        order = []
        seen = set()
        stack = [(out, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in reversed(node._parents):
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        return cls(order)

    def __len__(self):
        return len(self.nodes)

    def backward(self, out: Tensor, seed=None) -> None:
        grads = {id(out): np.ones_like(out.data) if seed is None else np.asarray(seed, dtype=out.dtype)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                prev = grads.get(key)
                grads[key] = pg if prev is None else prev + pg


def backward(loss: Tensor, seed=None) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf requiring grad."""
    if seed is None and loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not depend on any tensor that requires grad")
    Tape.from_output(loss).backward(loss, seed)


class ParamStore(MutableMapping):
    """Named parameters; iteration is lexicographic by name."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def __getitem__(self, name) -> Tensor:
        return self._params[name]

    def __setitem__(self, name, value):
        if name in self._params:
            raise KeyError(f"parameter {name!r} already registered")
        t = value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=get_dtype()))
        t.requires_grad = True
        self._params[name] = t

    def __delitem__(self, name):
        del self._params[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._params))

    def __len__(self):
        return len(self._params)

    def add(self, name, data) -> Tensor:
        self[name] = data
        return self._params[name]

    def zero_grad(self):
        for t in self._params.values():
            t.grad = None

    def count(self) -> int:
        return sum(t.size for t in self._params.values())

    def grads(self) -> dict[str, np.ndarray]:
        return {k: (self[k].grad if self[k].grad is not None else np.zeros_like(self[k].data)) for k in self}
