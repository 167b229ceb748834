"""Desk-scale training loop."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..autodiff import Tensor, backward, get_dtype
from ..checkpoint import save_checkpoint
from ..dsp import AnalysisConfig, compress, stft
from ..model import TaylorModel
from .config import TrainConfig
from .loss import LossConfig, compressed_loss
from .optim import NumericalError, OptimizerState, PlateauSchedule, adam_step
from .synth import make_recipes, recipe_seed, synthesize_mixture

log = logging.getLogger(__name__)

METRIC_HEADER = ["epoch", "train_loss", "val_loss", "lr"]
# recipe indices never reach this, so the shuffle stream is disjoint from data seeds
SHUFFLE_STREAM = 2**32 - 1


@dataclass
class Dataset:
    noisy: np.ndarray  # [n, 2, L, K] compressed RI
    clean: np.ndarray
    recipes: list = field(default_factory=list)

    def __len__(self):
        return self.noisy.shape[0]


def build_dataset(recipes, beta: float, acfg: AnalysisConfig = AnalysisConfig()) -> Dataset:
    noisy, clean = [], []
    for r in recipes:
        x, s, _ = synthesize_mixture(r)
        noisy.append(compress(stft(x, acfg), beta).to_ri())
        clean.append(compress(stft(s, acfg), beta).to_ri())
    dt = get_dtype()
    return Dataset(np.stack(noisy).astype(dt), np.stack(clean).astype(dt), list(recipes))


def train_step(model: TaylorModel, noisy, clean, state: OptimizerState, lcfg: LossConfig) -> float:
    model.params.zero_grad()
    est, _, _ = model.forward_tensor(Tensor(noisy))
    loss = compressed_loss(est, clean, lcfg)
    value = float(loss.data)
    if not np.isfinite(value):
        raise NumericalError(f"training loss diverged at step {state.step + 1}: {value}")
    backward(loss)
    adam_step(model.params, state)
    return value


def dataset_loss(model: TaylorModel, data: Dataset, lcfg: LossConfig, batch: int = 4) -> float:
    total = 0.0
    for i in range(0, len(data), batch):
        est, _ = model.forward_batch(data.noisy[i:i + batch])
        n = est.shape[0]
        total += n * float(compressed_loss(Tensor(est), data.clean[i:i + batch], lcfg).data)
    return total / len(data)


@dataclass
class TrainResult:
    model: TaylorModel
    history: list
    checkpoint: Path | None = None


def split_recipes(cfg: TrainConfig):
    recipes = make_recipes(cfg.n_mix, cfg.seed, cfg.snr_lo, cfg.snr_hi, cfg.length_s)
    return recipes[:-cfg.n_val], recipes[-cfg.n_val:]


def train(cfg: TrainConfig, out_dir=None, on_epoch=None) -> TrainResult:
    """Train from scratch; writes ``model.json``/``model.bin`` (best validation) and ``metrics.csv``.

    ``on_epoch(model, row)`` is called after every epoch with the metric row
    ``(epoch, train_loss, val_loss, lr)``.
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    model = TaylorModel(cfg.model_config())
    lcfg = LossConfig(cfg.beta, cfg.w_ri, cfg.w_mag)
    train_r, val_r = split_recipes(cfg)
    train_set = build_dataset(train_r, cfg.beta)
    val_set = build_dataset(val_r, cfg.beta)
    state = OptimizerState(lr=cfg.lr)
    sched = PlateauSchedule(cfg.patience, cfg.factor)
    rng = np.random.default_rng(recipe_seed(cfg.seed, SHUFFLE_STREAM))
    history = []
    best_val = float("inf")
    ckpt = out_dir / "model.json" if out_dir is not None else None
    log.info("training %d params on %d/%d mixtures", model.count_params(), len(train_set), len(val_set))
    for epoch in range(1, cfg.epochs + 1):
        lr = state.lr
        order = rng.permutation(len(train_set))
        total = 0.0
        for i in range(0, len(order), cfg.batch):
            idx = np.sort(order[i:i + cfg.batch])
            total += len(idx) * train_step(model, train_set.noisy[idx], train_set.clean[idx], state, lcfg)
        train_loss = total / len(train_set)
        val_loss = dataset_loss(model, val_set, lcfg, cfg.batch)
        if not np.isfinite(val_loss):
            raise NumericalError(f"validation loss is not finite at epoch {epoch}")
        history.append((epoch, train_loss, val_loss, lr))
        log.info("epoch %d train %.5f val %.5f lr %.2e", epoch, train_loss, val_loss, lr)
        if val_loss < best_val:
            best_val = val_loss
            if ckpt is not None:
                save_checkpoint(ckpt, model)
        sched.step(val_loss, state)
        if on_epoch is not None:
            on_epoch(model, history[-1])
    if ckpt is not None:
        if cfg.epochs == 0:
            save_checkpoint(ckpt, model)
        write_metrics(out_dir / "metrics.csv", history)
    return TrainResult(model, history, ckpt)


def write_metrics(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_HEADER)
        for epoch, tr, va, lr in history:
            w.writerow([epoch, f"{tr:.10g}", f"{va:.10g}", f"{lr:.10g}"])


def read_metrics(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(int(r["epoch"]), float(r["train_loss"]), float(r["val_loss"]), float(r["lr"])) for r in rows]
