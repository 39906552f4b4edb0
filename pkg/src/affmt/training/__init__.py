"""Training loops, optimizer, and checkpointing."""

from affmt.training.checkpoint import load_checkpoint, read_manifest, save_checkpoint
from affmt.training.config import (
    GANTrainConfig,
    MTTrainConfig,
    config_fingerprint,
    config_from_dict,
)
from affmt.training.gan import GANStepReport, GANTrainer
from affmt.training.multitask import MTStepReport, MultiTaskTrainer
from affmt.training.optim import Adam, clip_global_norm

__all__ = [
    "GANTrainConfig",
    "MTTrainConfig",
    "config_fingerprint",
    "config_from_dict",
    "GANTrainer",
    "GANStepReport",
    "MultiTaskTrainer",
    "MTStepReport",
    "Adam",
    "clip_global_norm",
    "save_checkpoint",
    "load_checkpoint",
    "read_manifest",
]
