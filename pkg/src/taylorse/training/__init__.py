from .config import ConfigError, TrainConfig, dump_config, load_config, parse_config_text
from .loss import LossConfig, compressed_loss, loss
from .optim import NumericalError, OptimizerState, PlateauSchedule, adam_step
from .synth import MixtureRecipe, make_recipes, mix_at_snr, recipe_seed, synthesize_mixture
from .trainer import Dataset, TrainResult, build_dataset, dataset_loss, read_metrics, train, train_step, write_metrics

__all__ = [
    "ConfigError", "Dataset", "LossConfig", "MixtureRecipe", "NumericalError", "OptimizerState",
    "PlateauSchedule", "TrainConfig", "TrainResult", "adam_step", "build_dataset", "compressed_loss",
    "dataset_loss", "dump_config", "load_config", "loss", "make_recipes", "mix_at_snr",
    "parse_config_text", "read_metrics", "recipe_seed", "synthesize_mixture", "train", "train_step",
    "write_metrics",
]
