from . import ops
from .gradcheck import GradCheckReport, grad_check
from .tensor import (
    ParamStore,
    Tape,
    Tensor,
    as_tensor,
    backward,
    debug_mode,
    get_dtype,
    precision,
    set_precision,
    tensor,
)

__all__ = [
    "GradCheckReport", "ParamStore", "Tape", "Tensor", "as_tensor", "backward",
    "debug_mode", "get_dtype", "grad_check", "ops", "precision", "set_precision", "tensor",
]
