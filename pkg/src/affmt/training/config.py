"""Training configurations.

GAN defaults follow the stated contract: generator learning rate 1e-4,
discriminator 1e-5, Adam beta1 0.5 / beta2 0.999, mini-batch 64, gradient
clipping at global norm 20, and more frequent generator updates (5 per
discriminator update for configuration 1, 2 for configuration 2).

The multi-task trainer uses Adam at learning rate 1e-3 or 1e-4 on batches
of S sequences x T consecutive frames (default 10 x 80 = 800) with
attention length 32.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from typing import Optional

from affmt.errors import ConfigurationError, ValidationError
from affmt.losses import EXPR_MODES, HEAD_MODES, VA_MODES


@dataclass
class GANTrainConfig:
    configuration: int = 1          # 1 -> 32x32 nets, 2 -> 96x96 nets
    kernel: int = 5                 # configuration-2 filter size (5 or 7)
    gen_lr: float = 1e-4
    disc_lr: float = 1e-5
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch: int = 64
    grad_clip: float = 20.0
    gen_steps_per_disc_step: Optional[int] = None  # default 5 (c1) / 2 (c2)
    va_mode: str = "ccc"
    heads: str = "joint"
    recon_initial: float = 1.0
    recon_floor: float = 0.0
    recon_horizon: int = 10_000
    steps: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.configuration not in (1, 2):
            raise ConfigurationError("configuration must be 1 or 2")
        if self.gen_steps_per_disc_step is None:
            self.gen_steps_per_disc_step = 5 if self.configuration == 1 else 2
        if self.gen_steps_per_disc_step < 1:
            raise ConfigurationError("gen_steps_per_disc_step must be positive")
        if min(self.gen_lr, self.disc_lr) <= 0:
            raise ConfigurationError("learning rates must be positive")
        if self.grad_clip <= 0:
            raise ConfigurationError("grad_clip must be positive")
        if self.batch < 2:
            raise ConfigurationError("batch must be at least 2")
        if self.va_mode not in VA_MODES:
            raise ConfigurationError(f"va_mode must be one of {VA_MODES}")
        if self.heads not in HEAD_MODES:
            raise ConfigurationError(f"heads must be one of {HEAD_MODES}")

    @property
    def resolution(self) -> int:
        return 32 if self.configuration == 1 else 96


@dataclass
class MTTrainConfig:
    lr: float = 1e-3
    n_sequences: int = 10           # S
    seq_length: int = 80            # T
    attention_length: int = 32
    alpha: float = 0.5
    beta: float = 0.5
    va_mode: str = "ccc"
    expr_mode: str = "xent"
    freeze_cnn: bool = False
    backbone: str = "tiny"
    gru_units: int = 128
    feature_dim: int = 256
    resolution: int = 96
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    steps: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigurationError("lr must be positive")
        if self.attention_length > self.seq_length:
            raise ConfigurationError(
                f"attention_length {self.attention_length} exceeds "
                f"seq_length {self.seq_length}"
            )
        if not (0.0 <= self.alpha <= 1.0) or not (0.0 <= self.beta <= 1.0):
            raise ConfigurationError("alpha and beta must lie in [0, 1]")
        if self.va_mode not in VA_MODES:
            raise ConfigurationError(f"va_mode must be one of {VA_MODES}")
        if self.expr_mode not in EXPR_MODES:
            raise ConfigurationError(f"expr_mode must be one of {EXPR_MODES}")

    @property
    def batch_frames(self) -> int:
        return self.n_sequences * self.seq_length


def config_fingerprint(config, kind: str) -> str:
    payload = {"kind": kind, "config": asdict(config)}
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()


def config_from_dict(kind: str, d: dict):
    cls = {"gan": GANTrainConfig, "multitask": MTTrainConfig}.get(kind)
    if cls is None:
        raise ValidationError(f"unknown trainer kind {kind!r}")
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ValidationError(f"unknown config keys for {kind}: {sorted(unknown)}")
    return cls(**d)
