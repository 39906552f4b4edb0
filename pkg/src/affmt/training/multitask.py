"""Multi-task CNN-RNN training loop.

One Adam update of all unfrozen parameters per sequence batch on
alpha * L_VA + beta * L_expr; frames without an expression label
contribute only to the VA term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import torch

from affmt.errors import TrainingDiverged
from affmt.losses import LossBundle, multitask_loss
from affmt.models import build_multitask_cnn_rnn, freeze, materialize
from affmt.preprocessing.batches import Corpus, SequenceBatch, SequenceSampler
from affmt.training.config import MTTrainConfig
from affmt.training.optim import Adam


@dataclass
class MTStepReport:
    step: int
    bundle: LossBundle


class MultiTaskTrainer:
    kind = "multitask"

    def __init__(self, config: MTTrainConfig):
        self.config = config
        spec = build_multitask_cnn_rnn(
            backbone=config.backbone,
            gru_units=config.gru_units,
            attention_length=config.attention_length,
            resolution=config.resolution,
            feature_dim=config.feature_dim,
        )
        self.model = materialize(spec, seed=config.seed)
        self.model.train()
        if config.freeze_cnn:
            freeze(self.model, cnn_backbone=True)
        self.opt = Adam(
            list(self.model.named_parameters()),
            config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps,
        )
        self.step_count = 0

    @property
    def step(self) -> int:
        return self.step_count

    def train_step(self, batch: SequenceBatch) -> MTStepReport:
        images = torch.from_numpy(np.ascontiguousarray(batch.images))
        va_t = torch.from_numpy(np.ascontiguousarray(batch.va))
        expr_t = torch.from_numpy(np.ascontiguousarray(batch.expr))
        out = self.model(images)
        bundle = multitask_loss(
            out.va, out.expr_logits, va_t, expr_t,
            alpha=self.config.alpha, beta=self.config.beta,
            va_mode=self.config.va_mode, expr_mode=self.config.expr_mode,
        )
        if not torch.isfinite(bundle.total):
            raise TrainingDiverged(
                f"non-finite loss at step {self.step_count}",
                diagnostics=bundle.component_floats(),
            )
        self.opt.zero_grad()
        bundle.total.backward()
        self.opt.step()
        self.step_count += 1
        return MTStepReport(step=self.step_count, bundle=bundle.detach())

    def sampler(self, corpus: Corpus) -> SequenceSampler:
        return SequenceSampler(
            corpus, self.config.n_sequences, self.config.seq_length,
            self.config.seed,
        )

    def run(self, corpus: Corpus, steps: Optional[int] = None) -> List[MTStepReport]:
        steps = self.config.steps if steps is None else steps
        sampler = self.sampler(corpus)
        return [self.train_step(sampler.batch(self.step_count)) for _ in range(steps)]

    def predict_frames(self, corpus: Corpus) -> Dict[str, np.ndarray]:
        """Per-frame predictions over every full window of each video.

        Windows tile the consolidated runs exactly like the training
        sampler, so predictions align with the covered frames; the
        aligned frame keys are returned alongside the arrays.
        """
        self.model.eval()
        t = self.config.seq_length
        vas, exprs, keys = [], [], []
        with torch.no_grad():
            for video in corpus.videos:
                sampler = SequenceSampler(
                    corpus.subset([video.meta.video_id]), 1, t, seed=0
                )
                for vid, start in sorted(sampler.windows):
                    sl = slice(start, start + t)
                    images = np.transpose(
                        video.images[sl].astype(np.float32) / 127.5 - 1.0,
                        (0, 3, 1, 2),
                    )[None]
                    out = self.model(torch.from_numpy(images))
                    vas.append(out.va[0].numpy())
                    exprs.append(out.expr_probs[0].numpy())
                    keys.extend(
                        (vid, int(video.frame_indices[i]))
                        for i in range(start, start + t)
                    )
        self.model.train()
        if not vas:
            return {"va": np.zeros((0, 2)), "expr": np.zeros((0, 7)), "keys": []}
        return {
            "va": np.concatenate(vas),
            "expr": np.concatenate(exprs),
            "keys": keys,
        }

    # --- checkpoint plumbing -------------------------------------------------

    def named_tensors(self) -> Dict[str, torch.Tensor]:
        out = {f"model.{k}": v for k, v in self.model.state_dict().items()}
        out.update(self.opt.state_tensors("adam"))
        return out

    def load_tensors(self, tensors: Dict[str, torch.Tensor]):
        sd = {k[len("model."):]: v for k, v in tensors.items()
              if k.startswith("model.")}
        self.model.load_state_dict(sd)
        self.opt.load_state_tensors("adam", tensors)

    def counters(self) -> Dict[str, int]:
        return {"step_count": self.step_count, "adam_t": self.opt.t}

    def set_counters(self, counters: Dict[str, int]):
        self.step_count = counters["step_count"]
        self.opt.t = counters["adam_t"]

    def rng_state(self) -> bytes:
        return b""

    def set_rng_state(self, raw: bytes):
        pass
