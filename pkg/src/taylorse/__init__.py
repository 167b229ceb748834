"""Taylor-unfolding speech enhancement on a small numpy autodiff engine."""

from .dsp import AnalysisConfig, ComplexSpectrogram, Waveform, istft, read_wav, stft, write_wav
from .model import TaylorConfig, TaylorModel, desk_config, forward
from .pipeline import enhance_classical, enhance_waveform

__all__ = [
    "AnalysisConfig", "ComplexSpectrogram", "Waveform", "istft", "read_wav", "stft", "write_wav",
    "TaylorConfig", "TaylorModel", "desk_config", "forward", "enhance_classical", "enhance_waveform",
]
__version__ = "0.1.0"
