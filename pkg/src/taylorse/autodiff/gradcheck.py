"""Compare tape gradients against central finite differences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, backward, get_dtype

DEFAULT_STEP = {np.float32: 1e-3, np.float64: 1e-5}
DEFAULT_TOL = {np.float32: 1e-3, np.float64: 1e-6}


@dataclass
class GradCheckReport:
    name: str
    max_rel_error: float
    tolerance: float
    per_input: list

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_error <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: max rel err {self.max_rel_error:.3e} (tol {self.tolerance:.0e})"


def grad_check(fn, inputs, tolerance=None, step=None, seed=0, name="op") -> GradCheckReport:
    """Check ``fn(*tensors)`` against central differences at the current precision.

    The scalar objective is ``sum(fn(...) * w)`` for a fixed random ``w``.
    The error for each input is ``max|analytic - numeric|`` divided by the
    larger of the two gradients' max-norms.
    """
    dtype = get_dtype()
    h = DEFAULT_STEP[dtype] if step is None else step
    tol = DEFAULT_TOL[dtype] if tolerance is None else tolerance
    arrays = [np.array(a, dtype=dtype) for a in inputs]

    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = fn(*tensors)
    w = np.random.default_rng(seed).uniform(-1.0, 1.0, out.shape)
    backward(out, seed=w.astype(dtype))
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    def objective(vals):
        y = fn(*[Tensor(v) for v in vals]).data
        return float(np.sum(y.astype(np.float64) * w))

    errors = []
    for idx, a in enumerate(arrays):
        num = np.zeros(a.shape, dtype=np.float64)
        flat = num.reshape(-1)
        for k in range(a.size):
            vals = [v.copy() for v in arrays]
            x0 = a.reshape(-1)[k]
            hi, lo = dtype(x0 + dtype(h)), dtype(x0 - dtype(h))
            vals[idx].reshape(-1)[k] = hi
            fp = objective(vals)
            vals[idx].reshape(-1)[k] = lo
            fm = objective(vals)
            # actual representable step, not the nominal one
            flat[k] = (fp - fm) / (float(hi) - float(lo))
        an = analytic[idx].astype(np.float64)
        denom = max(np.abs(an).max(initial=0.0), np.abs(num).max(initial=0.0), 1e-12)
        errors.append(float(np.abs(an - num).max(initial=0.0) / denom))
    return GradCheckReport(name, max(errors), tol, errors)
