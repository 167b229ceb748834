"""Adam with bias correction and a validation-plateau learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import ParamStore


class NumericalError(RuntimeError):
    """Raised on NaN/Inf gradients or losses."""


@dataclass
class OptimizerState:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


def adam_step(params: ParamStore, state: OptimizerState) -> None:
    """One in-place Adam update from the ``.grad`` of every parameter."""
    grads = {}
    for name in params:
        p = params[name]
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in {name}")
        grads[name] = g
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, g in grads.items():
        p = params[name]
        dt = p.data.dtype.type
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = dt(state.beta1) * m + dt(1.0 - state.beta1) * g
        v = dt(state.beta2) * v + dt(1.0 - state.beta2) * (g * g)
        state.m[name], state.v[name] = m, v
        m_hat = m / dt(c1)
        v_hat = v / dt(c2)
        p.data = p.data - dt(state.lr) * m_hat / (np.sqrt(v_hat) + dt(state.eps))


@dataclass
class PlateauSchedule:
    """Scale the learning rate by ``factor`` after ``patience`` epochs without improvement."""

    patience: int = 2
    factor: float = 0.5
    best: float = float("inf")
    bad_epochs: int = 0

    def step(self, val_loss: float, state: OptimizerState) -> bool:
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        if self.bad_epochs >= self.patience:
            state.lr *= self.factor
            self.bad_epochs = 0
            return True
        return False
