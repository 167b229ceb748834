"""``key = value`` training config files.

Recognized keys (all optional)::

    preset          desk | full            model size preset (default desk)
    q               int                    number of high-order terms
    shared          bool                   share derivative-module weights
    channels        int                    2-D conv width
    unet_depths     comma list of ints     UNet-block depth per REL
    stcm_groups     int
    stcm_per_group  int
    stcm_channels   int                    squeezed S-TCM width
    deriv_channels  int                    derivative-module feature width
    beta            float                  compression exponent
    lr              float                  initial Adam learning rate
    epochs          int
    batch           int
    snr_lo, snr_hi  float                  mixture SNR range in dB
    seed            int
    n_mix           int                    total synthetic mixtures
    val_frac        float                  share of mixtures held out for validation
    length_s        float                  mixture length in seconds
    w_ri, w_mag     float                  loss branch weights
    patience        int                    plateau epochs before lr decay
    factor          float                  lr decay factor

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..model import TaylorConfig, desk_config


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    preset: str = "desk"
    q: int = 3
    shared: bool = False
    channels: int | None = None
    unet_depths: tuple | None = None
    stcm_groups: int | None = None
    stcm_per_group: int | None = None
    stcm_channels: int | None = None
    deriv_channels: int | None = None
    beta: float = 0.5
    lr: float = 5e-4
    epochs: int = 8
    batch: int = 4
    snr_lo: float = -5.0
    snr_hi: float = 0.0
    seed: int = 0
    n_mix: int = 200
    val_frac: float = 0.1
    length_s: float = 1.0
    w_ri: float = 0.5
    w_mag: float = 0.5
    patience: int = 2
    factor: float = 0.5

    def __post_init__(self):
        if self.preset not in ("desk", "full"):
            raise ConfigError(f"preset: expected 'desk' or 'full', got {self.preset!r}")
        if self.epochs < 0 or self.batch < 1:
            raise ConfigError("epochs must be >= 0 and batch >= 1")
        if self.n_mix < 2:
            raise ConfigError("n_mix must be at least 2 (train + validation)")
        if not 0 < self.val_frac < 1:
            raise ConfigError("val_frac must lie in (0, 1)")
        if self.snr_lo > self.snr_hi:
            raise ConfigError("snr_lo must not exceed snr_hi")

    @property
    def n_val(self) -> int:
        return min(self.n_mix - 1, max(1, round(self.val_frac * self.n_mix)))

    def model_config(self) -> TaylorConfig:
        base = desk_config(self.q, self.shared) if self.preset == "desk" else TaylorConfig(
            q=self.q, shared_high_order=self.shared)
        overrides = {k: getattr(self, k) for k in
                     ("channels", "unet_depths", "stcm_groups", "stcm_per_group", "stcm_channels", "deriv_channels")
                     if getattr(self, k) is not None}
        return replace(base, beta=self.beta, seed=self.seed, **overrides)


def _parse_bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "preset": str, "q": int, "shared": _parse_bool, "channels": int,
    "unet_depths": lambda s: tuple(int(v) for v in s.replace(" ", "").split(",") if v),
    "stcm_groups": int, "stcm_per_group": int, "stcm_channels": int, "deriv_channels": int,
    "beta": float, "lr": float, "epochs": int, "batch": int, "snr_lo": float, "snr_hi": float,
    "seed": int, "n_mix": int, "val_frac": float, "length_s": float, "w_ri": float, "w_mag": float,
    "patience": int, "factor": float,
}
assert set(_PARSERS) == {f.name for f in fields(TrainConfig)}


def parse_config_text(text: str, origin: str = "<config>") -> TrainConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{origin}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for {key!r}: {exc}") from None
    try:
        return TrainConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{origin}: {exc}") from None


def load_config(path) -> TrainConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), str(path))


def dump_config(cfg: TrainConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
